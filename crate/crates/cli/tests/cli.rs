use std::path::{Path, PathBuf};
use std::process::Command;

use r1qfa::automata::Automaton;
use serde_json::{json, Value};
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn r1qfa(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_r1qfa")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
    }
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

fn language(dir: &TempDir, alphabet: &str, accept: &[&str]) -> PathBuf {
    let letters: Vec<String> = alphabet.chars().map(String::from).collect();
    write(
        dir,
        &format!("{alphabet}-{}.json", accept.join("_")),
        &json!({"alphabet": letters, "accept": accept}),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_exit_codes() {
    let d = TempDir::new().unwrap();
    let bad = r1qfa(&["analyze", s(&language(&d, "abc", &["ab", "bac"]))]);
    assert_eq!(bad.code, 1);
    assert_eq!(bad.json()["consistent"], false);
    assert_eq!(bad.json()["optimum"], "0/1");

    let good = r1qfa(&["analyze", s(&language(&d, "abc", &["ab"]))]);
    assert_eq!(good.code, 0);
    assert_eq!(good.json()["consistent"], true);
    assert_eq!(good.json()["optimum"], "1/3");
}

#[test]
fn analyze_separating_language_with_forbidden_search() {
    let d = TempDir::new().unwrap();
    let l = language(
        &d,
        "abcde",
        &["aedbc", "beca", "beda", "bedac", "eacb", "eacbd", "eadbc", "ebca"],
    );
    let run = r1qfa(&["analyze", s(&l), "--forbidden"]);
    assert_eq!(run.code, 1);
    let v = run.json();
    assert_eq!(v["consistent"], false);
    assert_eq!(v["forbidden"]["found"], false);
}

#[test]
fn input_errors_exit_two_with_json() {
    let d = TempDir::new().unwrap();
    let garbage = d.path().join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    let dup = write(&d, "dup.json", &json!({"alphabet": ["a", "a"], "accept": []}));
    let outside = write(&d, "outside.json", &json!({"alphabet": ["a", "b"], "accept": ["ac"]}));
    let repeated = write(&d, "rep.json", &json!({"alphabet": ["a", "b"], "accept": ["aba"]}));
    for args in [
        vec!["analyze", s(&garbage)],
        vec!["analyze", s(&dup)],
        vec!["analyze", s(&outside)],
        vec!["forbidden", s(&repeated)],
        vec!["analyze", "/nonexistent/file.json"],
        vec!["cpmap", "check", s(&garbage)],
        vec!["frobnicate"],
        vec!["construct", s(&outside), "--model", "quantum"],
    ] {
        let run = r1qfa(&args);
        assert_eq!(run.code, 2, "{args:?}");
        assert!(run.json()["error"].is_string(), "{args:?}");
    }
}

#[test]
fn construct_refuses_inconsistent_languages() {
    let d = TempDir::new().unwrap();
    let run = r1qfa(&["construct", s(&language(&d, "abc", &["ab", "bac"])), "--model", "prob"]);
    assert_eq!(run.code, 1);
    let v = run.json();
    assert!(v["error"].is_string());
    assert_eq!(v["analysis"]["consistent"], false);
}

#[test]
fn constructions_load_and_validate() {
    let d = TempDir::new().unwrap();
    let l = language(&d, "abc", &["ab"]);
    for (model, n) in [
        ("prob", None),
        ("dh-pra", Some("4")),
        ("mm-qfa", Some("4")),
        ("mm-bqfa", Some("2")),
    ] {
        let mut args = vec!["construct", s(&l), "--model", model];
        if let Some(n) = n {
            args.extend(["--n", n]);
        }
        let run = r1qfa(&args);
        assert_eq!(run.code, 0, "{model}");
        // Loading re-runs stochasticity, double stochasticity, unitarity or
        // bistochasticity checks.
        let a = Automaton::from_json(&run.stdout).unwrap();
        assert_eq!(a.kind().as_str(), model);
        if let Automaton::Prob(x) = &a {
            let branches: std::collections::BTreeSet<&str> = x
                .partition
                .states()
                .iter()
                .filter_map(|st| st.id.split('/').next())
                .collect();
            assert_eq!(branches.len(), 3);
        }
        if let Automaton::DhPra(x) = &a {
            assert!(x.transitions.iter().all(|t| !t.has_negative_entry()));
        }
        if let Automaton::MmQfa(x) = &a {
            assert!(x.transitions.iter().all(|t| t.unitarity_defect() < 1e-12));
        }
    }
}

#[test]
fn max_states_refuses_large_constructions() {
    let d = TempDir::new().unwrap();
    let l = language(&d, "abc", &["ab"]);
    let run = r1qfa(&[
        "construct",
        s(&l),
        "--model",
        "mm-qfa",
        "--n",
        "8",
        "--max-states",
        "100",
    ]);
    assert_eq!(run.code, 1);
    assert!(run.json()["error"].as_str().unwrap().contains("2773"));
}

#[test]
fn simulate_prob_exactly() {
    let d = TempDir::new().unwrap();
    let l = language(&d, "abc", &["ab"]);
    let out = d.path().join("prob.json");
    assert_eq!(r1qfa(&["construct", s(&l), "--model", "prob", "-o", s(&out)]).code, 0);
    let run = r1qfa(&["simulate", s(&out), "ab", "cab", "aabb"]);
    assert_eq!(run.code, 0);
    let runs = run.json()["runs"].clone();
    assert_eq!(
        runs[0],
        json!({"word": "ab", "p_acc": "2/3", "p_rej": "1/3", "residual": "0/1"})
    );
    assert_eq!(runs[1]["p_acc"], "0/1");
    assert_eq!(runs[2]["p_acc"], "2/3");

    let bad = r1qfa(&["simulate", s(&out), "abz"]);
    assert_eq!(bad.code, 2);
}

#[test]
fn verify_models() {
    let d = TempDir::new().unwrap();
    let l = language(&d, "abc", &["ab"]);
    let prob = r1qfa(&["verify", s(&l), "--model", "prob", "--max-len", "5"]);
    assert_eq!(prob.code, 0);
    assert_eq!(prob.json()["report"]["gap"], "1/3");
    assert_eq!(prob.json()["lp_gap"], "1/3");

    let dh = r1qfa(&["verify", s(&l), "--model", "dh-pra"]);
    assert_eq!(dh.code, 0);
    assert_eq!(dh.json()["report"]["recognized"], true);

    let mq = r1qfa(&["verify", s(&l), "--model", "mm-qfa", "--n", "8"]);
    assert_eq!(mq.code, 0);
    let v = mq.json();
    assert_eq!(v["meets_floor"], true);
    assert!(v["report"]["gap"].as_f64().unwrap() >= v["gap_floor"].as_f64().unwrap());
    assert!((v["gap_floor"].as_f64().unwrap() - 1.0 / 9.0 / 64.0).abs() < 1e-15);
}

#[test]
fn forbidden_command_reports_witness() {
    let d = TempDir::new().unwrap();
    let run = r1qfa(&["forbidden", s(&language(&d, "abcd", &["abc", "bad"]))]);
    assert_eq!(run.code, 1);
    let v = run.json();
    assert_eq!(v["found"], true);
    assert_eq!(v["witness"]["n"], 2);
    assert_eq!(v["witness"]["m"], 2);
    assert_eq!(v["witness"]["accepted"], json!(["abc", "bad"]));
    assert_eq!(v["witness"]["rejected"], json!(["abd", "bac"]));

    let none = r1qfa(&["forbidden", s(&language(&d, "abc", &["ab"]))]);
    assert_eq!(none.code, 0);
    assert_eq!(none.json()["found"], false);

    let corollary = language(&d, "abc", &["ab", "bac"]);
    assert_eq!(r1qfa(&["forbidden", s(&corollary)]).code, 0);
    assert_eq!(r1qfa(&["forbidden", s(&corollary), "--allow-empty-final"]).code, 1);
}

fn channel(dir: &TempDir, name: &str, kraus: Vec<Vec<Vec<[f64; 2]>>>) -> PathBuf {
    write(dir, name, &json!({"dim": kraus[0].len(), "kraus": kraus}))
}

#[test]
fn cpmap_commands() {
    let d = TempDir::new().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let unitary = channel(
        &d,
        "u.json",
        vec![vec![vec![[h, 0.0], [0.0, h]], vec![[0.0, h], [h, 0.0]]]],
    );
    let check = r1qfa(&["cpmap", "check", s(&unitary)]).json();
    for k in [
        "trace_preserving",
        "sub_tracial",
        "unital",
        "sub_unital",
        "bistochastic",
        "sub_bistochastic",
    ] {
        assert_eq!(check["predicates"][k], true, "{k}");
    }

    let omega = r1qfa(&["cpmap", "omega", s(&unitary)]);
    assert_eq!(omega.code, 0);
    let rows = omega.json()["superoperator"].clone();
    for i in 0..4 {
        for j in 0..4 {
            let re = rows[i][j][0].as_f64().unwrap();
            assert!((re - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
    }

    let z = channel(
        &d,
        "z.json",
        vec![
            vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [0.0, 0.0]]],
            vec![vec![[0.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]],
        ],
    );
    let x = channel(
        &d,
        "x.json",
        vec![
            vec![vec![[0.5, 0.0], [0.5, 0.0]], vec![[0.5, 0.0], [0.5, 0.0]]],
            vec![vec![[0.5, 0.0], [-0.5, 0.0]], vec![[-0.5, 0.0], [0.5, 0.0]]],
        ],
    );
    let run = r1qfa(&["cpmap", "bistEJ", s(&z), s(&x)]);
    assert_eq!(run.code, 0);
    let v = run.json();
    assert_eq!(v["holds"], true);
    assert!(v["report"]["max_deviation"].as_f64().unwrap() < 1e-6);

    let scaled = channel(
        &d,
        "big.json",
        vec![vec![vec![[2.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]]],
    );
    let run = r1qfa(&["cpmap", "omega", s(&scaled)]);
    assert_eq!(run.code, 2);
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn output_is_deterministic() {
    let d = TempDir::new().unwrap();
    let l = language(&d, "abcd", &["abc", "d", "cb"]);
    let a = r1qfa(&["analyze", s(&l), "--forbidden"]);
    let b = r1qfa(&["analyze", s(&l), "--forbidden", "--workers", "1"]);
    assert_eq!(without_timings(a.json()), without_timings(b.json()));

    let l = language(&d, "abc", &["ab"]);
    let args = ["verify", s(&l), "--model", "mm-bqfa", "--n", "2", "--words"];
    let first = r1qfa(&args);
    assert_eq!(first.code, 0);
    assert_eq!(first.stdout, r1qfa(&args).stdout);
    let mut seq = args.to_vec();
    seq.extend(["--workers", "1"]);
    assert_eq!(first.stdout, r1qfa(&seq).stdout);

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m1 = channel(
        &d,
        "m1.json",
        vec![
            vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [0.0, 0.0]]],
            vec![vec![[0.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]],
        ],
    );
    let m2 = channel(
        &d,
        "m2.json",
        vec![
            vec![vec![[h, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [h, 0.0]]],
            vec![vec![[0.0, 0.0], [h, 0.0]], vec![[h, 0.0], [0.0, 0.0]]],
        ],
    );
    let args = ["cpmap", "bistEJ", s(&m1), s(&m2), s(&m1), "--seed", "3"];
    assert_eq!(r1qfa(&args).stdout, r1qfa(&args).stdout);
}

#[test]
fn text_format() {
    let d = TempDir::new().unwrap();
    let run = r1qfa(&["analyze", s(&language(&d, "abc", &["ab"])), "--format", "text"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.lines().any(|l| l == "consistent: true"));
    assert!(run.stdout.lines().any(|l| l == "optimum: 1/3"));
}

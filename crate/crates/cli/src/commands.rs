use std::path::Path;
use std::time::Instant;

use r1qfa::automata::{
    build_composite, build_dhpra, build_mmqfa, certify_n, dhpra_state_count, lift_to_bqfa, mmqfa_gap_floor,
    mmqfa_state_count, Automaton, DhPra, ModelKind, Solution,
};
use r1qfa::exec::Execution;
use r1qfa::forbidden::{find_forbidden, SearchOptions};
use r1qfa::ineq::assignment_to_json;
use r1qfa::lp::{decide_consistency, Consistency};
use r1qfa::quantum::{
    omega_limit, run_mmbqfa, run_mmqfa, run_mobqfa, verify_bist_ej, CpMap, OmegaOptions, QuantumError,
};
use r1qfa::rational::{self, to_f64};
use r1qfa::sim::{corpus, run_dhpra, run_prob, verify_recognition, SimError, DEFAULT_CORPUS_CAP};
use r1qfa::{R1Language, Rational, Word};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{Global, Model, SearchArgs};

#[derive(Debug)]
pub enum Failure {
    /// Exit 1: a negative answer or a refusal, with its report.
    Negative(Value),
    /// Exit 2: unreadable or invalid input.
    Input(String),
}

type Outcome = Result<Value, Failure>;

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_language(path: &Path) -> Result<R1Language, Failure> {
    R1Language::from_json(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn ms(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

fn kind(model: Model) -> ModelKind {
    match model {
        Model::Prob => ModelKind::Prob,
        Model::DhPra => ModelKind::DhPra,
        Model::MmQfa => ModelKind::MmQfa,
        Model::MmBqfa => ModelKind::MmBqfa,
    }
}

fn consistency_json(l: &R1Language, c: &Consistency) -> Value {
    json!({
        "consistent": c.consistent,
        "optimum": rational::format(&c.gap),
        "p1": rational::format(&c.p1()),
        "p2": rational::format(&c.p2()),
        "witness": assignment_to_json(&c.witness, l.alphabet()),
        "pivots": c.pivots,
    })
}

fn solve(l: &R1Language) -> Result<Consistency, Failure> {
    decide_consistency(l).map_err(input)
}

pub fn analyze(path: &Path, search: Option<&SearchArgs>, exec: Execution) -> Outcome {
    let l = load_language(path)?;
    let start = Instant::now();
    let c = solve(&l)?;
    let lp_ms = ms(start);
    let mut report = json!({ "language": l.to_json_value() });
    report
        .as_object_mut()
        .expect("object")
        .extend(consistency_json(&l, &c).as_object().expect("object").clone());
    let mut timings = json!({ "lp_ms": lp_ms });
    report["forbidden"] = match search {
        Some(args) => {
            let start = Instant::now();
            let w = find_forbidden(&l, &options(args), exec).map_err(input)?;
            timings["forbidden_ms"] = json!(ms(start));
            json!({
                "found": w.is_some(),
                "witness": w.map(|w| w.to_json(&l)),
            })
        }
        None => Value::Null,
    };
    report["timings"] = timings;
    if c.consistent {
        Ok(report)
    } else {
        Err(Failure::Negative(report))
    }
}

fn options(args: &SearchArgs) -> SearchOptions {
    SearchOptions {
        max_m: args.max_m,
        allow_empty_final: args.allow_empty_final,
    }
}

pub fn forbidden(path: &Path, args: &SearchArgs, exec: Execution) -> Outcome {
    let l = load_language(path)?;
    let w = find_forbidden(&l, &options(args), exec).map_err(input)?;
    let report = json!({
        "language": l.to_json_value(),
        "max_m": args.max_m,
        "allow_empty_final": args.allow_empty_final,
        "found": w.is_some(),
        "witness": w.as_ref().map(|w| w.to_json(&l)),
    });
    if w.is_some() {
        Err(Failure::Negative(report))
    } else {
        Ok(report)
    }
}

/// A consistent language together with its construction data.
struct Plan {
    language: R1Language,
    solution: Solution,
    model: Model,
    n: usize,
}

fn refuse(message: String, extra: Option<(&str, Value)>) -> Failure {
    let mut v = json!({ "error": message });
    if let Some((k, x)) = extra {
        v[k] = x;
    }
    Failure::Negative(v)
}

fn state_count(model: Model, letters: usize, n: usize) -> Option<u128> {
    match model {
        Model::Prob => None,
        Model::DhPra | Model::MmBqfa => Some(dhpra_state_count(letters, n)),
        Model::MmQfa => Some(mmqfa_state_count(letters, n)),
    }
}

fn plan(path: &Path, model: Model, n: Option<usize>, g: &Global) -> Result<Plan, Failure> {
    let language = load_language(path)?;
    let c = solve(&language)?;
    if !c.consistent {
        return Err(refuse(
            "language is not recognizable: its inequality system is inconsistent".into(),
            Some(("analysis", consistency_json(&language, &c))),
        ));
    }
    let solution = Solution::new(language.alphabet(), c.witness).map_err(input)?;
    let letters = language.alphabet().len();
    let n = match (model, n) {
        (Model::Prob, _) => 1,
        (_, Some(0)) => return Err(Failure::Input("--n must be positive".into())),
        (_, Some(n)) => n,
        (_, None) => {
            let mut max_n = 1usize;
            while max_n < 1 << 20 && state_count(model, letters, max_n * 2).is_some_and(|s| s <= g.max_states) {
                max_n *= 2;
            }
            match certify_n(&solution, &language, kind(model), max_n) {
                Some(cert) => cert.n,
                None => {
                    return Err(refuse(
                        format!("no n up to {max_n} is certified within --max-states {}", g.max_states),
                        None,
                    ))
                }
            }
        }
    };
    let states = state_count(model, letters, n).unwrap_or(0);
    if model != Model::Prob {
        eprintln!(
            "{}",
            json!({ "model": kind(model).as_str(), "n": n, "states": states.to_string(), "max_states": g.max_states.to_string() })
        );
        if states > g.max_states {
            return Err(refuse(
                format!("construction needs {states} states, limit is {}", g.max_states),
                None,
            ));
        }
    }
    Ok(Plan {
        language,
        solution,
        model,
        n,
    })
}

fn build(p: &Plan) -> Result<Automaton, Failure> {
    let fail = |e: &dyn std::fmt::Display| refuse(format!("construction failed: {e}"), None);
    Ok(match p.model {
        Model::Prob => Automaton::Prob(build_composite(&p.solution).map_err(|e| fail(&e))?),
        Model::DhPra => Automaton::DhPra(build_dhpra(&p.solution, p.n).map_err(|e| fail(&e))?),
        Model::MmQfa => Automaton::MmQfa(build_mmqfa(&p.solution, p.n).map_err(|e| fail(&e))?),
        Model::MmBqfa => {
            let d: DhPra = build_dhpra(&p.solution, p.n).map_err(|e| fail(&e))?;
            Automaton::MmBqfa(lift_to_bqfa(&d).map_err(|e| fail(&e))?)
        }
    })
}

pub fn construct(path: &Path, model: Model, n: Option<usize>, out: Option<&Path>, g: &Global) -> Outcome {
    let p = plan(path, model, n, g)?;
    let a = build(&p)?;
    let value = a.to_json();
    match out {
        None => Ok(value),
        Some(file) => {
            let text = serde_json::to_string(&value).expect("json");
            std::fs::write(file, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", file.display())))?;
            Ok(json!({
                "written": file.display().to_string(),
                "model": kind(model).as_str(),
                "n": p.n,
                "states": a.partition().len(),
            }))
        }
    }
}

fn sim_error(e: SimError) -> Failure {
    input(e)
}

pub fn simulate(path: &Path, words: &[String], max_len: Option<usize>, measure_once: bool, exec: Execution) -> Outcome {
    let a = Automaton::from_json(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let alphabet = a.alphabet().clone();
    let list: Vec<Word> = match max_len {
        Some(k) => corpus(&alphabet, k, DEFAULT_CORPUS_CAP).map_err(sim_error)?,
        None => words
            .iter()
            .map(|w| alphabet.parse_word(w))
            .collect::<Result<_, _>>()
            .map_err(input)?,
    };
    let once = if measure_once {
        match &a {
            Automaton::MmQfa(q) => Some(q.to_bqfa()),
            Automaton::MmBqfa(q) => Some(q.clone()),
            _ => {
                return Err(Failure::Input(
                    "--measure-once needs an mm-qfa or mm-bqfa automaton".into(),
                ))
            }
        }
    } else {
        None
    };
    let runs = exec.map(&list, |w| -> Result<Value, SimError> {
        let label = alphabet.render(w.letters());
        if let Some(q) = &once {
            return Ok(json!({ "word": label, "p_acc": run_mobqfa(q, w)? }));
        }
        Ok(match &a {
            Automaton::Prob(x) => run_prob(x, w)?.to_json(&label),
            Automaton::DhPra(x) => run_dhpra(x, w)?.to_json(&label),
            Automaton::MmQfa(x) => run_mmqfa(x, w)?.to_json(&label),
            Automaton::MmBqfa(x) => run_mmbqfa(x, w)?.to_json(&label),
        })
    });
    let runs: Vec<Value> = runs.into_iter().collect::<Result<_, _>>().map_err(sim_error)?;
    Ok(json!({
        "model": a.kind().as_str(),
        "semantics": if measure_once { "measure-once" } else { "measure-many" },
        "runs": runs,
    }))
}

#[allow(clippy::too_many_arguments)]
pub fn verify(
    path: &Path,
    model: Model,
    n: Option<usize>,
    max_len: Option<usize>,
    float: bool,
    words: bool,
    g: &Global,
    exec: Execution,
) -> Outcome {
    let p = plan(path, model, n, g)?;
    let l = &p.language;
    let max_len = max_len.unwrap_or(l.alphabet().len());
    let list = corpus(l.alphabet(), max_len, DEFAULT_CORPUS_CAP).map_err(sim_error)?;
    let a = build(&p)?;
    let report = match &a {
        Automaton::Prob(x) => verify_recognition(l, &list, exec, |w| run_prob(x, w).map(|d| d.p_acc))
            .map(|r| r.to_json(l.alphabet(), words)),
        Automaton::DhPra(x) if float => {
            let x = x.to_f64();
            verify_recognition(l, &list, exec, |w| run_dhpra(&x, w).map(|d| d.p_acc))
                .map(|r| r.to_json(l.alphabet(), words))
        }
        Automaton::DhPra(x) => verify_recognition(l, &list, exec, |w| run_dhpra(x, w).map(|d| d.p_acc))
            .map(|r| r.to_json(l.alphabet(), words)),
        Automaton::MmQfa(x) => verify_recognition(l, &list, exec, |w| run_mmqfa(x, w).map(|d| d.p_acc))
            .map(|r| r.to_json(l.alphabet(), words)),
        Automaton::MmBqfa(x) => verify_recognition(l, &list, exec, |w| run_mmbqfa(x, w).map(|d| d.p_acc))
            .map(|r| r.to_json(l.alphabet(), words)),
    }
    .map_err(sim_error)?;
    let recognized = report["recognized"].as_bool().unwrap_or(false);
    let lp_gap: Rational = p.solution.p2() - p.solution.p1();
    let mut out = json!({
        "language": l.to_json_value(),
        "model": kind(model).as_str(),
        "n": p.n,
        "states": a.partition().len(),
        "max_len": max_len,
        "lp_gap": rational::format(&lp_gap),
        "report": report,
    });
    if model == Model::MmQfa {
        let floor = to_f64(&mmqfa_gap_floor(&p.solution, p.n));
        let gap = out["report"]["gap"].as_f64();
        out["gap_floor"] = json!(floor);
        out["meets_floor"] = json!(gap.is_some_and(|x| x >= floor));
    }
    if recognized {
        Ok(out)
    } else {
        Err(Failure::Negative(out))
    }
}

fn load_channel(path: &Path) -> Result<CpMap, Failure> {
    let v: Value =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    CpMap::from_json(&v).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn quantum(e: QuantumError) -> Failure {
    input(e)
}

pub fn cp_check(path: &Path) -> Outcome {
    let map = load_channel(path)?;
    Ok(json!({
        "input_dim": map.input_dim(),
        "output_dim": map.output_dim(),
        "kraus": map.kraus().len(),
        "predicates": map.predicates().to_json(),
    }))
}

pub fn cp_omega(path: &Path, peripheral_tol: f64, idempotent_tol: f64) -> Outcome {
    let map = load_channel(path)?;
    let opts = OmegaOptions {
        peripheral_tol,
        idempotent_tol,
        ..OmegaOptions::default()
    };
    Ok(omega_limit(&map, &opts).map_err(quantum)?.to_json())
}

pub fn cp_bist_ej(paths: &[std::path::PathBuf], samples: usize, tol: f64, seed: u64, exec: Execution) -> Outcome {
    let opts = OmegaOptions::default();
    let mut maps = Vec::with_capacity(paths.len());
    for p in paths {
        let e = omega_limit(&load_channel(p)?, &opts).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
        maps.push(e.superoperator);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = verify_bist_ej(&maps, samples, &mut rng, &opts, exec).map_err(quantum)?;
    let holds = report.holds(tol);
    let out = json!({
        "tol": tol,
        "holds": holds,
        "report": report.to_json(),
    });
    if holds {
        Ok(out)
    } else {
        Err(Failure::Negative(out))
    }
}

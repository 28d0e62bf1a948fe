//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the report reaches stdout uncaptured.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use r1qfa::automata::*;
use r1qfa::band::{tau, Alphabet, R1Language, Word};
use r1qfa::exec::Execution;
use r1qfa::forbidden::{check_witness, find_forbidden, SearchOptions};
use r1qfa::ineq::{expression_for, InequalitySystem, VarKey};
use r1qfa::lp::{decide_consistency, decide_system};
use r1qfa::quantum::random::{haar_unitary, random_idempotent, random_sub_bistochastic};
use r1qfa::quantum::*;
use r1qfa::rational::{self, int, ratio, to_f64};
use r1qfa::sim::{corpus, run_dhpra, run_prob, DEFAULT_CORPUS_CAP};
use r1qfa::sparse::SparseMatrix;
use r1qfa::Rational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_languages, five_letter_language, fm_feasible};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn l_ab() -> R1Language {
    R1Language::parse("abc", &["ab"]).unwrap()
}

fn solution(l: &R1Language) -> Solution {
    let c = decide_consistency(l).unwrap();
    Solution::new(l.alphabet(), c.witness).unwrap()
}

fn corpus_of(l: &R1Language, max_len: usize) -> Vec<Word> {
    corpus(l.alphabet(), max_len, DEFAULT_CORPUS_CAP).unwrap()
}

fn c1() -> Outcome {
    let l = R1Language::parse("abc", &["ab", "bac"]).unwrap();
    let (c, t) = timed(|| decide_consistency(&l).unwrap());
    ensure!(!c.consistent, "reported consistent");
    ensure!(c.gap.is_zero(), "optimum {} is not 0", c.gap);
    ensure!(t < Duration::from_secs(1), "took {t:?}");
    Ok(format!("inconsistent, optimum 0, {t:?}"))
}

fn c2() -> Outcome {
    let a = Alphabet::from_chars("abc").unwrap();
    let v = |s: &str| VarKey::parse(s, &a).unwrap();
    let cases: [(&str, Vec<(VarKey, Rational)>); 2] = [
        ("ab", vec![(v("x:{}|a"), ratio(1, 2)), (v("y:{a,b}"), ratio(1, 2))]),
        ("bac", vec![(v("x:{}|b"), ratio(1, 2)), (v("x:{a,b}|c"), ratio(1, 2))]),
    ];
    let mut detail = Vec::new();
    for (word, point) in cases {
        let l = R1Language::parse("abc", &[word]).unwrap();
        let (c, t) = timed(|| decide_consistency(&l).unwrap());
        ensure!(c.consistent && c.gap.is_positive(), "{{{word}}} optimum {}", c.gap);
        ensure!(t < Duration::from_secs(1), "{{{word}}} took {t:?}");
        let sys = InequalitySystem::build(&l).unwrap();
        let mut full: BTreeMap<VarKey, Rational> = sys.variables().iter().map(|k| (*k, Rational::zero())).collect();
        full.extend(point);
        full.insert(VarKey::P1, ratio(1, 2));
        full.insert(VarKey::P2, int(1));
        let report = sys.validate_assignment(&full);
        ensure!(
            report.all_satisfied,
            "{{{word}}}: printed assignment violates the system"
        );
        detail.push(format!("{{{word}}} optimum {} in {t:?}", c.gap));
    }
    Ok(detail.join(", "))
}

fn c3() -> Outcome {
    let l = five_letter_language();
    let c = decide_consistency(&l).unwrap();
    ensure!(!c.consistent, "LP reports consistent");
    let (w, t) = timed(|| find_forbidden(&l, &SearchOptions::default(), Execution::Parallel).unwrap());
    ensure!(w.is_none(), "forbidden search found a witness");
    ensure!(t < Duration::from_secs(60), "search took {t:?}");
    Ok(format!("inconsistent, no witness, search {t:?}"))
}

fn c4() -> Outcome {
    let l = l_ab();
    let sol = solution(&l);
    let a = build_composite(&sol).unwrap();
    // All words of length <= 7 contain the 3279 nonempty words the count
    // refers to as well as every word of length <= 6.
    let words = corpus_of(&l, 7);
    for w in &words {
        let p = run_prob(&a, w).unwrap().p_acc;
        let expected = expression_for(&tau(w)).eval(sol.values());
        ensure!(
            p == expected,
            "{} gives {p}, expected {expected}",
            l.alphabet().render(w.letters())
        );
    }
    Ok(format!("{} words (length <= 7) exact", words.len()))
}

fn abs_diff(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

fn c5() -> Outcome {
    let l = l_ab();
    let sol = solution(&l);
    let k = l.alphabet().len();
    let words = corpus_of(&l, 6);
    let reference: Vec<Rational> = {
        let a = build_composite(&sol).unwrap();
        words.iter().map(|w| run_prob(&a, w).unwrap().p_acc).collect()
    };
    let mut sups = Vec::new();
    for n in [1usize, 2, 5, 10, 25] {
        let exact = n <= 5;
        // Each component against its displayed bounds.
        for i in 1..=k {
            let comp_r: Option<DhPra<Rational>> = exact.then(|| build_dhpra_component(&sol, i, n).unwrap());
            let comp_f: Option<DhPra<f64>> = (!exact).then(|| build_dhpra_component(&sol, i, n).unwrap());
            for w in &words {
                let v = tau(w);
                let p = &component_probabilities(&sol, &v)[i - 1];
                let (lo, hi) = dhpra_bounds(p, i, n, v.len());
                let ok = match (&comp_r, &comp_f) {
                    (Some(c), _) => {
                        let q = run_dhpra(c, w).unwrap().p_acc;
                        lo <= q && q <= hi
                    }
                    (_, Some(c)) => {
                        let q = run_dhpra(c, w).unwrap().p_acc;
                        to_f64(&lo) - 1e-12 <= q && q <= to_f64(&hi) + 1e-12
                    }
                    _ => unreachable!(),
                };
                ensure!(
                    ok,
                    "n={n} component {i} word {} outside [{lo}, {hi}]",
                    l.alphabet().render(w.letters())
                );
            }
        }
        let sup = if exact {
            let s: DhPra<Rational> = build_dhpra(&sol, n).unwrap();
            let mut sup = Rational::zero();
            for (w, r) in words.iter().zip(&reference) {
                let d = (run_dhpra(&s, w).unwrap().p_acc - r).abs();
                if d > sup {
                    sup = d;
                }
            }
            let rho = ratio(n as i64, n as i64 + 1);
            ensure!(sup <= Rational::one() - &rho * &rho, "n={n} sup {sup} above bound");
            to_f64(&sup)
        } else {
            let s: DhPra<f64> = build_dhpra(&sol, n).unwrap();
            let sup = words
                .iter()
                .zip(&reference)
                .map(|(w, r)| abs_diff(run_dhpra(&s, w).unwrap().p_acc, to_f64(r)))
                .fold(0.0, f64::max);
            let rho = n as f64 / (n as f64 + 1.0);
            ensure!(sup <= 1.0 - rho * rho + 1e-12, "n={n} sup {sup} above bound");
            sup
        };
        if let Some(&last) = sups.last() {
            ensure!(sup <= last + 1e-12, "sup gap rose from {last} to {sup} at n={n}");
        }
        sups.push(sup);
    }
    let shown: Vec<String> = sups.iter().map(|s| format!("{s:.5}")).collect();
    Ok(format!("{} words, sup gaps {}", words.len(), shown.join(" > ")))
}

fn c6() -> Outcome {
    for n in 1..=64 {
        let h = h_matrix(n);
        let dim = h.nrows();
        let defect = (h.adjoint() * &h - CMatrix::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        ensure!(defect <= 1e-12, "h_matrix({n}) unitarity defect {defect:e}");
    }
    let l = l_ab();
    let sol = solution(&l);
    let k = l.alphabet().len();
    let words = corpus_of(&l, 6);
    let scale_exp = alpha(k as u64 - 1) as i32;
    let z = (sol.p2() - sol.p1()) / int(3);
    let mut notes = Vec::new();
    for n in [2usize, 4, 8] {
        let scale = (n as f64).powi(scale_exp);
        for i in 1..=k {
            let u = build_mmqfa_component(&sol, i, n).unwrap();
            for w in &words {
                let v = tau(w);
                let p = &component_probabilities(&sol, &v)[i - 1];
                let (lo, hi) = mmqfa_scaled_bounds(p, i, n, k, v.len());
                let q = scale * run_mmqfa(&u, w).unwrap().p_acc;
                ensure!(
                    to_f64(&lo) - 1e-9 <= q && q <= to_f64(&hi) + 1e-9,
                    "n={n} component {i} word {}: {q} outside [{lo}, {hi}]",
                    l.alphabet().render(w.letters())
                );
            }
        }
        let m = build_mmqfa(&sol, n).unwrap();
        let (mut member, mut other) = (f64::INFINITY, f64::NEG_INFINITY);
        for w in &words {
            let p = run_mmqfa(&m, w).unwrap().p_acc;
            if l.member(w).unwrap() {
                member = member.min(p);
            } else {
                other = other.max(p);
            }
        }
        let gap = member - other;
        let floor = to_f64(&mmqfa_gap_floor(&sol, n));
        // The floor is guaranteed once the scaled bounds alone separate the
        // language by at least z.
        let certified = enumerate_scaled_gap(&sol, &l, n) >= z;
        if certified {
            ensure!(gap >= floor, "n={n}: gap {gap} below floor {floor}");
        }
        notes.push(format!(
            "n={n} gap {gap:.5} floor {floor:.5}{}",
            if certified {
                ""
            } else {
                " (below proof threshold, not asserted)"
            }
        ));
        if n == 8 {
            ensure!(certified, "n=8 does not reach the proof threshold");
        }
    }
    Ok(notes.join("; "))
}

/// `min over members of lower bound - max over non-members of upper bound`
/// for the scaled MM-QFA bounds.
fn enumerate_scaled_gap(sol: &Solution, l: &R1Language, n: usize) -> Rational {
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    for v in r1qfa::band::enumerate_band(l.alphabet(), 8).unwrap() {
        let (a, b) = composite_bounds(sol, ModelKind::MmQfa, &v, n);
        if l.contains_band(&v) {
            lo = Some(lo.map_or(a.clone(), |x| x.min(a)));
        } else {
            hi = Some(hi.map_or(b.clone(), |x| x.max(b)));
        }
    }
    lo.unwrap_or_else(Rational::one) - hi.unwrap_or_else(Rational::zero)
}

fn random_doubly_stochastic(rng: &mut ChaCha8Rng, dim: usize) -> SparseMatrix<Rational> {
    let terms = rng.random_range(1..=dim * dim + 2);
    let weights: Vec<i64> = (0..terms).map(|_| rng.random_range(1..=20)).collect();
    let total: i64 = weights.iter().sum();
    let mut dense = vec![vec![Rational::zero(); dim]; dim];
    for w in weights {
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(rng);
        for (from, &to) in perm.iter().enumerate() {
            dense[to][from] += ratio(w, total);
        }
    }
    SparseMatrix::from_dense(&dense)
}

fn c7() -> Outcome {
    let l = l_ab();
    let sol = solution(&l);
    let s: DhPra = build_dhpra(&sol, 2).unwrap();
    let q = lift_to_bqfa(&s).unwrap();
    let words = corpus_of(&l, 5);
    let mut worst: f64 = 0.0;
    for w in &words {
        let exact = rational::to_f64(&run_dhpra(&s, w).unwrap().p_acc);
        worst = worst.max((exact - run_mmbqfa(&q, w).unwrap().p_acc).abs());
    }
    ensure!(worst <= 1e-10, "lifted model differs by {worst:e}");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut max_terms = 0;
    for _ in 0..50 {
        let dim = rng.random_range(1..=8);
        let m = random_doubly_stochastic(&mut rng, dim);
        let d = birkhoff(&m).map_err(|e| e.to_string())?;
        ensure!(d.reconstruct() == m, "reconstruction differs (dim {dim})");
        ensure!(
            d.terms.len() <= (dim - 1) * (dim - 1) + 1,
            "{} terms for dim {dim}",
            d.terms.len()
        );
        ensure!(
            d.weight_sum().is_one() && d.terms.iter().all(|(w, _)| w.is_positive()),
            "bad weights"
        );
        max_terms = max_terms.max(d.terms.len());
    }
    Ok(format!(
        "{} words within {worst:.1e}; 50 Birkhoff decompositions exact (max {max_terms} terms)",
        words.len()
    ))
}

fn c8() -> Outcome {
    let opts = OmegaOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut norm, mut idem): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let dim = rng.random_range(1..=4);
        let map = random_sub_bistochastic(dim, &mut rng);
        norm = norm.max(spectral_norm(&map.superoperator()));
        let e = omega_limit(&map, &opts).map_err(|e| e.to_string())?.superoperator;
        idem = idem.max((&e * &e - &e).norm());
    }
    ensure!(norm <= 1.0 + 1e-10, "superoperator norm {norm}");
    ensure!(idem <= 1e-6, "omega idempotency defect {idem:e}");
    for dim in 1..=4 {
        let map = CpMap::unitary(haar_unitary(dim, &mut rng)).unwrap();
        let e = omega_limit(&map, &opts).map_err(|e| e.to_string())?.superoperator;
        let d = (e - CMatrix::identity(dim * dim, dim * dim)).norm();
        ensure!(d <= 1e-6, "unitary channel of dim {dim}: distance to identity {d:e}");
    }
    let mut bist: f64 = 0.0;
    for family in 0..20 {
        let dim = 2 + family % 3;
        let k = rng.random_range(2..=3);
        let maps: Vec<CMatrix> = (0..k).map(|_| random_idempotent(dim, &mut rng)).collect();
        let report = verify_bist_ej(&maps, 6, &mut rng, &opts, Execution::Parallel).map_err(|e| e.to_string())?;
        bist = bist.max(report.max_deviation());
    }
    ensure!(bist <= 1e-6, "bistEJ deviation {bist:e}");
    Ok(format!("norm {norm:.12}, idempotency {idem:.1e}, bistEJ {bist:.1e}"))
}

fn c9() -> Outcome {
    let alphabet = Alphabet::from_chars("ab").unwrap();
    let langs = all_languages(&alphabet);
    let (mut inconsistent, mut witnesses) = (0, 0);
    for l in &langs {
        let sys = InequalitySystem::build(l).unwrap();
        let c = decide_system(&sys).unwrap();
        ensure!(
            c.consistent == fm_feasible(&sys),
            "{l}: LP and Fourier-Motzkin disagree"
        );
        if !c.consistent {
            inconsistent += 1;
        }
        for allow_empty_final in [false, true] {
            let opts = SearchOptions {
                max_m: 4,
                allow_empty_final,
            };
            if let Some(w) = find_forbidden(l, &opts, Execution::Sequential).unwrap() {
                ensure!(check_witness(l, &w), "{l}: invalid witness");
                ensure!(!c.consistent, "{l}: witness but consistent");
                witnesses += 1;
            }
        }
    }
    Ok(format!(
        "{} languages, {inconsistent} inconsistent, {witnesses} witnesses",
        langs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("inconsistent golden language", c1),
        ("non-closure pair", c2),
        ("inconsistent without forbidden construction", c3),
        ("exact construction soundness", c4),
        ("DH-PRA convergence", c5),
        ("MM-QFA bounds and gap", c6),
        ("cross-model oracle and Birkhoff", c7),
        ("channel property suite", c8),
        ("exhaustive two-letter equivalence", c9),
    ];
    let mut failed = 0;
    let start = Instant::now();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (result, t) = timed(|| catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into())));
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} [{t:.2?}] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} [{t:.2?}] {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of 9 passed in {:.2?}", 9 - failed, start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}

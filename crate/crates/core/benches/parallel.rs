use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use r1qfa::automata::{build_dhpra, DhPra, Solution};
use r1qfa::exec::Execution;
use r1qfa::forbidden::{find_forbidden, SearchOptions};
use r1qfa::lp::decide_consistency;
use r1qfa::quantum::random::random_sub_bistochastic;
use r1qfa::quantum::{omega_limit, OmegaOptions};
use r1qfa::sim::{corpus, run_dhpra, verify_recognition, DEFAULT_CORPUS_CAP};
use r1qfa::R1Language;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus_simulation(c: &mut Criterion) {
    let l = R1Language::parse("abc", &["ab"]).unwrap();
    let sol = Solution::new(l.alphabet(), decide_consistency(&l).unwrap().witness).unwrap();
    let s: DhPra<f64> = build_dhpra(&sol, 10).unwrap();
    let words = corpus(l.alphabet(), 6, DEFAULT_CORPUS_CAP).unwrap();
    let mut g = c.benchmark_group("dhpra_corpus");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_recognition(&l, black_box(&words), exec, |w| run_dhpra(&s, w).map(|d| d.p_acc)).unwrap())
        });
    }
    g.finish();
}

fn forbidden_search(c: &mut Criterion) {
    let l = R1Language::parse("abcdef", &["fab", "ced", "ea", "dfcb", "bad"]).unwrap();
    let mut g = c.benchmark_group("forbidden_search");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| find_forbidden(black_box(&l), &SearchOptions::default(), exec).unwrap())
        });
    }
    g.finish();
}

fn channel_batch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let maps: Vec<_> = (0..64).map(|i| random_sub_bistochastic(2 + i % 3, &mut rng)).collect();
    let opts = OmegaOptions::default();
    let mut g = c.benchmark_group("omega_batch");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(black_box(&maps), |m| omega_limit(m, &opts).unwrap().idempotency_defect))
        });
    }
    g.finish();
}

criterion_group!(benches, corpus_simulation, forbidden_search, channel_batch);
criterion_main!(benches);

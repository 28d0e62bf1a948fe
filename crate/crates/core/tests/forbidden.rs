mod common;

use r1qfa::band::{enumerate_band, Alphabet, BandWord, R1Language};
use r1qfa::exec::Execution;
use r1qfa::forbidden::{check_witness, find_forbidden, SearchOptions};
use r1qfa::lp::decide_consistency;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_languages, five_letter_language};

/// Every way to cut `w` into `n` contiguous pieces, the first `n - 1`
/// nonempty.
fn cuts(w: &BandWord, n: usize, empty_final: bool) -> Vec<Vec<BandWord>> {
    fn go(rest: &[r1qfa::Letter], n: usize, empty_final: bool, acc: &mut Vec<BandWord>, out: &mut Vec<Vec<BandWord>>) {
        if n == 1 {
            if empty_final || !rest.is_empty() {
                acc.push(BandWord::new(rest.to_vec()).unwrap());
                out.push(acc.clone());
                acc.pop();
            }
            return;
        }
        for len in 1..=rest.len() {
            acc.push(BandWord::new(rest[..len].to_vec()).unwrap());
            go(&rest[len..], n - 1, empty_final, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(w.letters(), n, empty_final, &mut Vec::new(), &mut out);
    out
}

fn pairs<T: Clone>(xs: &[T], m: usize) -> Vec<Vec<T>> {
    match m {
        1 => xs.iter().map(|x| vec![x.clone()]).collect(),
        2 => (0..xs.len())
            .flat_map(|i| (i + 1..xs.len()).map(move |j| (i, j)))
            .map(|(i, j)| vec![xs[i].clone(), xs[j].clone()])
            .collect(),
        _ => unreachable!(),
    }
}

fn columns_match(rows: &[&Vec<BandWord>], n: usize, m: usize) -> bool {
    (0..n).all(|k| {
        let col: Vec<&BandWord> = rows.iter().map(|r| &r[k]).collect();
        if k + 1 < n && col.iter().any(|x| x.sigma() != col[0].sigma()) {
            return false;
        }
        let (mut a, mut b) = (col[..m].to_vec(), col[m..].to_vec());
        a.sort();
        b.sort();
        a == b
    })
}

/// Brute force over word sets of size `2m <= 4` and all factorizations.
fn oracle(l: &R1Language, m_max: usize, empty_final: bool) -> Option<usize> {
    let band = enumerate_band(l.alphabet(), 8).unwrap();
    let (acc, rej): (Vec<BandWord>, Vec<BandWord>) = band.into_iter().partition(|w| l.contains_band(w));
    for n in 2..=l.alphabet().len() {
        for m in 1..=m_max {
            for a in pairs(&acc, m) {
                for r in pairs(&rej, m) {
                    let words: Vec<&BandWord> = a.iter().chain(&r).collect();
                    let options: Vec<Vec<Vec<BandWord>>> = words.iter().map(|w| cuts(w, n, empty_final)).collect();
                    let mut idx = vec![0usize; words.len()];
                    if options.iter().any(Vec::is_empty) {
                        continue;
                    }
                    loop {
                        let rows: Vec<&Vec<BandWord>> = idx.iter().enumerate().map(|(i, &j)| &options[i][j]).collect();
                        if columns_match(&rows, n, m) {
                            return Some(m);
                        }
                        let mut i = 0;
                        while i < idx.len() {
                            idx[i] += 1;
                            if idx[i] < options[i].len() {
                                break;
                            }
                            idx[i] = 0;
                            i += 1;
                        }
                        if i == idx.len() {
                            break;
                        }
                    }
                }
            }
        }
    }
    None
}

fn random_language(alphabet: &Alphabet, rng: &mut ChaCha8Rng) -> R1Language {
    let band = enumerate_band(alphabet, 8).unwrap();
    let accept = band.into_iter().filter(|_| rng.random_bool(0.5)).collect();
    R1Language::new(alphabet.clone(), accept).unwrap()
}

#[test]
fn agrees_with_brute_force_on_three_letters() {
    let alphabet = Alphabet::from_chars("abc").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let opts = SearchOptions {
        max_m: 2,
        allow_empty_final: false,
    };
    for _ in 0..300 {
        let l = random_language(&alphabet, &mut rng);
        let expected = oracle(&l, 2, false);
        let got = find_forbidden(&l, &opts, Execution::Sequential).unwrap();
        assert_eq!(got.is_some(), expected.is_some(), "{l}");
    }
}

#[test]
fn empty_final_factor_option_matches_brute_force() {
    let alphabet = Alphabet::from_chars("abc").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let opts = SearchOptions {
        max_m: 2,
        allow_empty_final: true,
    };
    let mut found = 0;
    for _ in 0..200 {
        let l = random_language(&alphabet, &mut rng);
        let expected = oracle(&l, 2, true);
        assert_ne!(expected, Some(1), "{l}");
        let got = find_forbidden(&l, &opts, Execution::Sequential).unwrap();
        assert_eq!(got.is_some(), expected.is_some(), "{l}");
        if let Some(w) = got {
            assert!(check_witness(&l, &w));
            found += 1;
        }
    }
    assert!(found > 0);
}

#[test]
fn witness_implies_inconsistent_on_two_letters() {
    let alphabet = Alphabet::from_chars("ab").unwrap();
    for allow_empty_final in [false, true] {
        let opts = SearchOptions {
            max_m: 4,
            allow_empty_final,
        };
        for l in all_languages(&alphabet) {
            let got = find_forbidden(&l, &opts, Execution::Parallel).unwrap();
            assert_eq!(got.is_some(), oracle(&l, 2, allow_empty_final).is_some(), "{l}");
            if let Some(w) = got {
                assert!(check_witness(&l, &w));
                assert!(!decide_consistency(&l).unwrap().consistent, "{l}");
            }
        }
    }
}

#[test]
fn witness_implies_inconsistent_on_random_languages() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for alpha in ["abc", "abcd"] {
        let alphabet = Alphabet::from_chars(alpha).unwrap();
        for _ in 0..40 {
            let l = random_language(&alphabet, &mut rng);
            let opts = SearchOptions {
                max_m: 4,
                allow_empty_final: true,
            };
            if let Some(w) = find_forbidden(&l, &opts, Execution::Parallel).unwrap() {
                assert!(check_witness(&l, &w));
                assert!(!decide_consistency(&l).unwrap().consistent, "{l}");
            }
        }
    }
}

#[test]
fn named_examples() {
    // (alphabet, words, present by default, present with an empty final factor)
    let cases: &[(&str, &[&str], bool, bool)] = &[
        ("abc", &["ab", "bac"], false, true),
        ("abc", &["ab"], false, false),
        ("abc", &["bac"], false, false),
        ("abcd", &["abc", "bad"], true, true),
        ("abcde", &["abc", "bad", "e"], true, true),
    ];
    for (alpha, words, strict, loose) in cases {
        let l = R1Language::parse(alpha, words).unwrap();
        for (allow_empty_final, present) in [(false, strict), (true, loose)] {
            let opts = SearchOptions {
                max_m: 4,
                allow_empty_final,
            };
            let w = find_forbidden(&l, &opts, Execution::Sequential).unwrap();
            assert_eq!(w.is_some(), *present, "{l} {allow_empty_final}");
            if let Some(w) = w {
                assert!(check_witness(&l, &w));
                assert!(!decide_consistency(&l).unwrap().consistent);
            }
        }
    }
}

#[test]
fn separating_language_has_no_witness() {
    let l = five_letter_language();
    assert!(!decide_consistency(&l).unwrap().consistent);
    assert!(find_forbidden(&l, &SearchOptions::default(), Execution::Parallel)
        .unwrap()
        .is_none());
}

#[test]
fn sequential_and_parallel_find_the_same_witness() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let alphabet = Alphabet::from_chars("abcd").unwrap();
    for _ in 0..20 {
        let l = random_language(&alphabet, &mut rng);
        let opts = SearchOptions::default();
        assert_eq!(
            find_forbidden(&l, &opts, Execution::Sequential).unwrap(),
            find_forbidden(&l, &opts, Execution::Parallel).unwrap()
        );
    }
}

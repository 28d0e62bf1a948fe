//! Exhaustive search for forbidden constructions in R1 languages.
//!
//! A witness is `2m` duplicate-free words split as `w_i = x_{i,1} ... x_{i,n}`
//! where the first `m` are accepted and the last `m` rejected, every column
//! `k < n` has one common letter set, and each column holds the same
//! multiset of factors in both halves.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde_json::{json, Value};

use crate::band::{BandWord, Letter, LetterSet, R1Language};
use crate::error::InputError;
use crate::exec::Execution;

/// Largest alphabet the search accepts.
pub const MAX_SEARCH_LETTERS: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForbiddenWitness {
    /// Number of factor columns (the construction has `n + 1` levels).
    pub n: usize,
    pub m: usize,
    /// Accepted words first, then rejected words.
    pub words: Vec<BandWord>,
    /// `factors[i][k] = x_{i+1, k+1}`.
    pub factors: Vec<Vec<BandWord>>,
}

impl ForbiddenWitness {
    pub fn to_json(&self, language: &R1Language) -> Value {
        let r = |v: &BandWord| language.render(v);
        json!({
            "n": self.n,
            "m": self.m,
            "levels": self.n + 1,
            "accepted": self.words[..self.m].iter().map(r).collect::<Vec<_>>(),
            "rejected": self.words[self.m..].iter().map(r).collect::<Vec<_>>(),
            "factors": self.factors.iter().map(|row| row.iter().map(r).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub max_m: usize,
    /// Permit an empty factor in the last column.
    pub allow_empty_final: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_m: 4,
            allow_empty_final: false,
        }
    }
}

/// Re-checks every defining condition of a witness against `language`.
pub fn check_witness(language: &R1Language, w: &ForbiddenWitness) -> bool {
    let (n, m) = (w.n, w.m);
    if n < 1 || m < 1 || w.words.len() != 2 * m || w.factors.len() != 2 * m {
        return false;
    }
    let distinct = |v: &[Letter]| v.iter().collect::<BTreeSet<_>>().len() == v.len();
    for (i, word) in w.words.iter().enumerate() {
        let row = &w.factors[i];
        if row.len() != n || language.contains_band(word) != (i < m) || !distinct(word.letters()) {
            return false;
        }
        let joined: Vec<Letter> = row.iter().flat_map(|x| x.letters().iter().copied()).collect();
        if joined != word.letters() || row.iter().any(|x| !distinct(x.letters())) {
            return false;
        }
        if row[..n - 1].iter().any(BandWord::is_empty) {
            return false;
        }
    }
    for half in [&w.words[..m], &w.words[m..]] {
        if half.iter().collect::<BTreeSet<_>>().len() != m {
            return false;
        }
    }
    for k in 0..n {
        let column: Vec<&BandWord> = w.factors.iter().map(|row| &row[k]).collect();
        if k + 1 < n && column.iter().any(|x| x.sigma() != column[0].sigma()) {
            return false;
        }
        let mut acc: Vec<&BandWord> = column[..m].to_vec();
        let mut rej: Vec<&BandWord> = column[m..].to_vec();
        acc.sort();
        rej.sort();
        if acc != rej {
            return false;
        }
    }
    true
}

/// All duplicate-free words over the letters of `set`, shortest first.
fn arrangements(set: LetterSet) -> Vec<Vec<Letter>> {
    let letters: Vec<Letter> = set.iter().collect();
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..letters.len() {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                if !w.contains(&l) {
                    let mut v: Vec<Letter> = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Ordered sequences of `parts` disjoint nonempty subsets of `free`.
fn chains(free: LetterSet, parts: usize) -> Vec<Vec<LetterSet>> {
    if parts == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let bits = free.bits();
    let mut sub = bits;
    let mut firsts = Vec::new();
    while sub != 0 {
        firsts.push(LetterSet::from_bits(sub));
        sub = (sub - 1) & bits;
    }
    firsts.sort();
    for first in firsts {
        let rest = LetterSet::from_bits(bits & !first.bits());
        for mut tail in chains(rest, parts - 1) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

struct Candidate {
    word: BandWord,
    /// Factor id per column.
    factors: Vec<usize>,
    accepted: bool,
}

struct ChainSearch<'a> {
    cands: &'a [Candidate],
    /// Candidates carrying factor id `f` at column `k`, split by membership.
    by_factor: HashMap<(usize, usize), (Vec<usize>, Vec<usize>)>,
    max_m: usize,
}

impl ChainSearch<'_> {
    /// Adds words until the per-(column, factor) imbalance vanishes.
    /// `imbalance > 0` means the accepted half has the surplus.
    fn dfs(
        &self,
        first: usize,
        acc: &mut Vec<usize>,
        rej: &mut Vec<usize>,
        imbalance: &mut BTreeMap<(usize, usize), i32>,
    ) -> bool {
        if imbalance.is_empty() {
            return acc.len() == rej.len() && !acc.is_empty();
        }
        // The most constrained open entry determines the next word.
        let mut best: Option<(&(usize, usize), bool, &Vec<usize>)> = None;
        for (key, &d) in imbalance.iter() {
            let (a, r) = &self.by_factor[key];
            let (need_rejected, pool) = if d > 0 { (true, r) } else { (false, a) };
            if best.as_ref().is_none_or(|b| pool.len() < b.2.len()) {
                best = Some((key, need_rejected, pool));
            }
        }
        let (_, need_rejected, pool) = best.expect("nonempty imbalance");
        let half_len = if need_rejected { rej.len() } else { acc.len() };
        if half_len >= self.max_m {
            return false;
        }
        for &c in pool {
            let taken = if need_rejected {
                rej.contains(&c)
            } else {
                acc.contains(&c) || c < first
            };
            if taken {
                continue;
            }
            let sign = if need_rejected { -1 } else { 1 };
            self.shift(imbalance, c, sign);
            if need_rejected {
                rej.push(c);
            } else {
                acc.push(c);
            }
            if self.dfs(first, acc, rej, imbalance) {
                return true;
            }
            if need_rejected {
                rej.pop();
            } else {
                acc.pop();
            }
            self.shift(imbalance, c, -sign);
        }
        false
    }

    fn shift(&self, imbalance: &mut BTreeMap<(usize, usize), i32>, c: usize, sign: i32) {
        for (k, &f) in self.cands[c].factors.iter().enumerate() {
            let e = imbalance.entry((k, f)).or_insert(0);
            *e += sign;
            if *e == 0 {
                imbalance.remove(&(k, f));
            }
        }
    }
}

/// Search for one chain `D_1, ..., D_{n-1}` of column letter sets.
fn search_chain(language: &R1Language, chain: &[LetterSet], opts: &SearchOptions) -> Option<ForbiddenWitness> {
    let n = chain.len() + 1;
    let used = chain.iter().fold(LetterSet::EMPTY, |a, &b| a.union(b));
    let rest = LetterSet::from_bits(language.alphabet().full_set().bits() & !used.bits());
    let mut columns: Vec<Vec<Vec<Letter>>> = chain
        .iter()
        .map(|&d| arrangements(d).into_iter().filter(|v| v.len() == d.len()).collect())
        .collect();
    columns.push(
        arrangements(rest)
            .into_iter()
            .filter(|v| opts.allow_empty_final || !v.is_empty())
            .collect(),
    );
    if columns.iter().any(Vec::is_empty) {
        return None;
    }
    let mut cands = Vec::new();
    let mut index = vec![0usize; n];
    loop {
        let letters: Vec<Letter> = (0..n).flat_map(|k| columns[k][index[k]].iter().copied()).collect();
        let word = BandWord::new(letters).expect("disjoint factors");
        cands.push(Candidate {
            accepted: language.contains_band(&word),
            word,
            factors: index.clone(),
        });
        let mut k = n;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            index[k] += 1;
            if index[k] < columns[k].len() {
                break;
            }
            index[k] = 0;
        }
        if index.iter().all(|&i| i == 0) {
            break;
        }
    }
    cands.sort_by(|a, b| a.word.cmp(&b.word));
    let mut by_factor: HashMap<(usize, usize), (Vec<usize>, Vec<usize>)> = HashMap::new();
    for (ci, c) in cands.iter().enumerate() {
        for (k, &f) in c.factors.iter().enumerate() {
            let e = by_factor.entry((k, f)).or_default();
            if c.accepted {
                e.0.push(ci);
            } else {
                e.1.push(ci);
            }
        }
    }
    let search = ChainSearch {
        cands: &cands,
        by_factor,
        max_m: opts.max_m,
    };
    for first in 0..cands.len() {
        if !cands[first].accepted {
            continue;
        }
        let mut acc = vec![first];
        let mut rej = Vec::new();
        let mut imbalance = BTreeMap::new();
        search.shift(&mut imbalance, first, 1);
        if search.dfs(first, &mut acc, &mut rej, &mut imbalance) {
            acc.sort_unstable();
            rej.sort_unstable();
            let rows: Vec<usize> = acc.iter().chain(&rej).copied().collect();
            return Some(ForbiddenWitness {
                n,
                m: acc.len(),
                words: rows.iter().map(|&c| cands[c].word.clone()).collect(),
                factors: rows
                    .iter()
                    .map(|&c| {
                        (0..n)
                            .map(|k| BandWord::new(columns[k][cands[c].factors[k]].clone()).expect("factor"))
                            .collect()
                    })
                    .collect(),
            });
        }
    }
    None
}

/// First witness with `2 <= n <= |A|` and `m <= max_m`, scanning `n`
/// upwards and chains in a fixed order, or `None` when the bounded search
/// space holds none.
pub fn find_forbidden(
    language: &R1Language,
    opts: &SearchOptions,
    exec: Execution,
) -> Result<Option<ForbiddenWitness>, InputError> {
    let size = language.alphabet().len();
    if size > MAX_SEARCH_LETTERS {
        return Err(InputError::AlphabetTooLarge {
            size,
            limit: MAX_SEARCH_LETTERS,
        });
    }
    for n in 2..=size.max(2) {
        let all = chains(language.alphabet().full_set(), n - 1);
        if let Some(w) = exec.find_map_first(&all, |chain| search_chain(language, chain, opts)) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

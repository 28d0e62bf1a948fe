//! State layout shared by the level automata and their reversible and
//! quantum simulations.
//!
//! Component `i` keeps the subsets of the alphabet at levels `0..i`, each
//! replicated `g^j` times at level `j`. Copy `k` of `s` at level `j` owns the
//! copies `k*g .. k*g+g` of every successor `s + a` at level `j + 1`.

use std::collections::HashMap;

use crate::band::{Alphabet, LetterSet};

use super::{Role, State};

pub(crate) struct Layout {
    pub n_letters: usize,
    /// Component index `i`, so the top level is `i - 1`.
    pub component: usize,
    pub group: usize,
    pub states: Vec<State>,
    pub live: HashMap<(LetterSet, usize), usize>,
    pub primed: HashMap<(LetterSet, usize), usize>,
    /// `(s$)_rej` copies for levels below the top.
    pub end_reject: HashMap<(LetterSet, usize), usize>,
    /// `(s a)_acc` / `(s a)_rej` copies at the top level, keyed by symbol index.
    pub top_halting: HashMap<(LetterSet, usize, usize), (usize, usize)>,
}

pub(crate) struct LayoutSpec<'a> {
    pub alphabet: &'a Alphabet,
    pub component: usize,
    pub group: usize,
    pub with_primes: bool,
    pub tag: &'a str,
    /// Append `#k` to ids (omitted for the single-copy level automata).
    pub number_copies: bool,
}

pub(crate) fn copies(group: usize, level: usize) -> usize {
    group.pow(level as u32)
}

/// State count of one component without allocating it.
pub(crate) fn count_states(n_letters: usize, component: usize, group: usize, with_primes: bool) -> u128 {
    let top = component - 1;
    let mut total: u128 = 0;
    for j in 0..=top {
        let subsets = binomial(n_letters, j);
        let c = (group as u128).pow(j as u32);
        total += subsets * c;
        if with_primes && j > 0 {
            total += subsets * c;
        }
        if j < top {
            total += subsets * c;
        } else {
            let symbols = (n_letters - j + 1) as u128;
            total += subsets * c * symbols * 2;
        }
    }
    total
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

impl Layout {
    pub fn new(spec: &LayoutSpec) -> Layout {
        let a = spec.alphabet;
        let n = a.len();
        let top = spec.component - 1;
        let subsets = LetterSet::all_subsets(n);
        let mut layout = Layout {
            n_letters: n,
            component: spec.component,
            group: spec.group,
            states: Vec::new(),
            live: HashMap::new(),
            primed: HashMap::new(),
            end_reject: HashMap::new(),
            top_halting: HashMap::new(),
        };
        let suffix = |k: usize| {
            if spec.number_copies {
                format!("#{}", k + 1)
            } else {
                String::new()
            }
        };
        let tag = spec.tag;
        let push = |states: &mut Vec<State>, id: String, role: Role| {
            states.push(State { id, role });
            states.len() - 1
        };
        let by_level = |j: usize| subsets.iter().copied().filter(move |s| s.len() == j);

        for j in 0..=top {
            for s in by_level(j) {
                for k in 0..copies(spec.group, j) {
                    let id = format!("{tag}/{}{}", a.render_set(s), suffix(k));
                    let q = push(&mut layout.states, id, Role::Non);
                    layout.live.insert((s, k), q);
                }
            }
        }
        if spec.with_primes {
            for j in 1..=top {
                for s in by_level(j) {
                    for k in 0..copies(spec.group, j) {
                        let id = format!("{tag}/{}'{}", a.render_set(s), suffix(k));
                        let q = push(&mut layout.states, id, Role::Rej);
                        layout.primed.insert((s, k), q);
                    }
                }
            }
        }
        for j in 0..top {
            for s in by_level(j) {
                for k in 0..copies(spec.group, j) {
                    let id = format!("{tag}/{}$:rej{}", a.render_set(s), suffix(k));
                    let q = push(&mut layout.states, id, Role::Rej);
                    layout.end_reject.insert((s, k), q);
                }
            }
        }
        for s in by_level(top) {
            for sym in top_symbols(n, s) {
                let label = if sym == n + 1 { '$' } else { a.letter((sym - 1) as u8) };
                for k in 0..copies(spec.group, top) {
                    let set = a.render_set(s);
                    let acc = push(
                        &mut layout.states,
                        format!("{tag}/{set}{label}:acc{}", suffix(k)),
                        Role::Acc,
                    );
                    let rej = push(
                        &mut layout.states,
                        format!("{tag}/{set}{label}:rej{}", suffix(k)),
                        Role::Rej,
                    );
                    layout.top_halting.insert((s, sym, k), (acc, rej));
                }
            }
        }
        layout
    }

    pub fn initial(&self) -> usize {
        self.live[&(LetterSet::EMPTY, 0)]
    }

    pub fn top(&self) -> usize {
        self.component - 1
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }
}

/// Symbols that leave the top level from `s`: new letters and `$` (as symbol indices).
pub(crate) fn top_symbols(n_letters: usize, s: LetterSet) -> impl Iterator<Item = usize> {
    (0..n_letters as u8)
        .filter(move |&l| !s.contains(l))
        .map(|l| l as usize + 1)
        .chain(std::iter::once(n_letters + 1))
}

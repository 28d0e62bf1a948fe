//! The level automata `A_i`, their composite, and the reversible (`S_{i,n}`)
//! and unitary (`U_{i,n}`) simulations of each level automaton.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::band::{Alphabet, LetterSet};
use crate::ineq::VarKey;
use crate::rational::{self, Rational};
use crate::sparse::{SparseMatrix, Weight};

use super::layout::{count_states, Layout, LayoutSpec};
use super::{DhPra, Mmqfa, ModelError, ProbAutomaton, State, StatePartition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("{var} scaled by |A| is {value}, outside [0, 1]")]
    ScaledOutOfRange { var: String, value: String },
    #[error("x0 must be zero in a construction witness, found {0}")]
    NonzeroX0(String),
    #[error("component index {i} outside 1..={n}")]
    Component { i: usize, n: usize },
    #[error("parameter n must be positive")]
    ZeroN,
    #[error("construction needs {count} states, limit is {limit}")]
    TooManyStates { count: u128, limit: u128 },
    #[error("empty alphabet has no level automata")]
    EmptyAlphabet,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// An LP witness read as transition data: `|A| * x(s, a)` and `|A| * y(s)`
/// become acceptance probabilities at the top level of each level automaton.
#[derive(Clone, Debug)]
pub struct Solution {
    alphabet: Alphabet,
    values: BTreeMap<VarKey, Rational>,
}

impl Solution {
    pub fn new(alphabet: &Alphabet, values: BTreeMap<VarKey, Rational>) -> Result<Self, BuildError> {
        if alphabet.is_empty() {
            return Err(BuildError::EmptyAlphabet);
        }
        let sol = Solution {
            alphabet: alphabet.clone(),
            values,
        };
        let x0 = sol.value(&VarKey::X0);
        if !x0.is_zero() {
            return Err(BuildError::NonzeroX0(rational::format(&x0)));
        }
        for k in sol.values.keys() {
            if matches!(k, VarKey::X { .. } | VarKey::Y(_)) {
                let scaled = sol.scaled(k);
                if scaled.is_negative() || scaled > Rational::one() {
                    return Err(BuildError::ScaledOutOfRange {
                        var: k.name(alphabet),
                        value: rational::format(&scaled),
                    });
                }
            }
        }
        Ok(sol)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn values(&self) -> &BTreeMap<VarKey, Rational> {
        &self.values
    }

    pub fn value(&self, k: &VarKey) -> Rational {
        self.values.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    fn scaled(&self, k: &VarKey) -> Rational {
        self.value(k) * rational::int(self.alphabet.len() as i64)
    }

    /// Acceptance probability when leaving the top level from `s` on symbol
    /// index `sym` (a letter index plus one, or `|A| + 1` for `$`).
    pub fn rate(&self, s: LetterSet, sym: usize) -> Rational {
        let n = self.alphabet.len();
        if sym == n + 1 {
            self.scaled(&VarKey::Y(s))
        } else {
            self.scaled(&VarKey::X {
                prefix: s,
                letter: (sym - 1) as u8,
            })
        }
    }

    pub fn p1(&self) -> Rational {
        self.value(&VarKey::P1)
    }

    pub fn p2(&self) -> Rational {
        self.value(&VarKey::P2)
    }
}

/// `lcm(1, ..., m)`, with `alpha(0) = 0`.
pub fn alpha(m: u64) -> u64 {
    if m == 0 {
        return 0;
    }
    (1..=m).fold(1u64, |acc, k| acc.lcm(&k))
}

/// Exponent `c` of the replication factor `n^c` in component `i`.
pub fn mmqfa_exponent(n_letters: usize, i: usize) -> u32 {
    if i <= 1 {
        0
    } else {
        (alpha(n_letters as u64 - 1) / (i as u64 - 1)) as u32
    }
}

/// `U_n = (e^{2 pi i rs/n} / sqrt n)`.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |r, s| {
        let phase = 2.0 * PI * ((r * s) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    })
}

/// `H_n = [[M_n, V_n], [V_n*, 0]]`, a `(2n-1) x (2n-1)` unitary.
pub fn h_matrix(n: usize) -> DMatrix<Complex64> {
    assert!(n >= 1, "h_matrix needs n >= 1");
    let u = dft_matrix(n);
    let dim = 2 * n - 1;
    DMatrix::from_fn(dim, dim, |r, c| match (r < n, c < n) {
        (true, true) => Complex64::new(1.0 / n as f64, 0.0),
        (true, false) => u[(r, c - n + 1)],
        (false, true) => u[(c, r - n + 1)].conj(),
        (false, false) => Complex64::zero(),
    })
}

fn check_component(sol: &Solution, i: usize) -> Result<(), BuildError> {
    let n = sol.alphabet.len();
    if i == 0 || i > n {
        return Err(BuildError::Component { i, n });
    }
    Ok(())
}

fn layout(sol: &Solution, i: usize, group: usize, primes: bool, tag: &str, numbered: bool) -> Layout {
    Layout::new(&LayoutSpec {
        alphabet: &sol.alphabet,
        component: i,
        group,
        with_primes: primes,
        tag,
        number_copies: numbered,
    })
}

/// Identity on every column not yet touched.
fn fill_identity<T: Clone + num_traits::Num>(m: &mut SparseMatrix<T>, covered: &[bool]) {
    for (q, done) in covered.iter().enumerate() {
        if !done {
            m.set(q, q, T::one());
        }
    }
}

fn level_tables(sol: &Solution, l: &Layout) -> Vec<SparseMatrix<Rational>> {
    let n = l.n_letters;
    let top = l.top();
    let dim = l.len();
    let mut tables = Vec::with_capacity(n + 2);
    let mut begin = SparseMatrix::zeros(dim);
    for &q in l.live.values() {
        begin.set(q, q, Rational::one());
    }
    tables.push(begin);
    for sym in 1..=n + 1 {
        let mut m = SparseMatrix::zeros(dim);
        for (&(s, k), &q) in &l.live {
            let halting = |m: &mut SparseMatrix<Rational>| {
                let (acc, rej) = l.top_halting[&(s, sym, k)];
                let r1 = sol.rate(s, sym);
                m.set(acc, q, r1.clone());
                m.set(rej, q, Rational::one() - r1);
            };
            if sym == n + 1 {
                if s.len() < top {
                    m.set(l.end_reject[&(s, k)], q, Rational::one());
                } else {
                    halting(&mut m);
                }
            } else {
                let a = (sym - 1) as u8;
                if s.contains(a) {
                    m.set(q, q, Rational::one());
                } else if s.len() < top {
                    m.set(l.live[&(s.with(a), 0)], q, Rational::one());
                } else {
                    halting(&mut m);
                }
            }
        }
        tables.push(m);
    }
    tables
}

/// The level automaton `A_i` on its own (`#` acts as the identity).
pub fn build_level_automaton(sol: &Solution, i: usize) -> Result<ProbAutomaton, BuildError> {
    check_component(sol, i)?;
    let l = layout(sol, i, 1, false, &format!("A{i}"), false);
    let tables = level_tables(sol, &l);
    let partition = StatePartition::new(l.states.clone(), l.initial())?;
    Ok(ProbAutomaton::new(sol.alphabet.clone(), partition, tables)?)
}

struct Part<T> {
    states: Vec<State>,
    initial: usize,
    tables: Vec<SparseMatrix<T>>,
}

/// Disjoint union of components; `#` mixes the initial states by `block[r][c]`.
fn assemble<T: Clone + num_traits::Num>(
    parts: Vec<Part<T>>,
    block: impl Fn(usize, usize) -> T,
) -> (StatePartition, Vec<SparseMatrix<T>>) {
    let mut offsets = Vec::with_capacity(parts.len());
    let mut offset = 0;
    for p in &parts {
        offsets.push(offset);
        offset += p.states.len();
    }
    let n_tables = parts[0].tables.len();
    let mut tables: Vec<SparseMatrix<T>> = (0..n_tables)
        .map(|t| {
            let pieces: Vec<SparseMatrix<T>> = parts.iter().map(|p| p.tables[t].clone()).collect();
            SparseMatrix::block_diagonal(&pieces)
        })
        .collect();
    let initials: Vec<usize> = parts.iter().zip(&offsets).map(|(p, o)| p.initial + o).collect();
    let begin = &mut tables[0];
    for &c in &initials {
        begin.clear_column(c);
    }
    for (ci, &c) in initials.iter().enumerate() {
        for (ri, &r) in initials.iter().enumerate() {
            begin.set(r, c, block(ri, ci));
        }
    }
    let states = parts.into_iter().flat_map(|p| p.states).collect();
    let partition = StatePartition::new(states, initials[0]).expect("component states are distinct and live");
    (partition, tables)
}

/// The composite automaton `A`: `#` branches with probability `1/|A|` into
/// each `A_i`, so a word `u` is accepted with the witness value of `L(tau(u))`.
pub fn build_composite(sol: &Solution) -> Result<ProbAutomaton, BuildError> {
    let n = sol.alphabet.len();
    let parts = (1..=n)
        .map(|i| {
            let l = layout(sol, i, 1, false, &format!("A{i}"), false);
            Part {
                tables: level_tables(sol, &l),
                initial: l.initial(),
                states: l.states,
            }
        })
        .collect();
    let share = rational::ratio(1, n as i64);
    let (partition, tables) = assemble(parts, |_, _| share.clone());
    Ok(ProbAutomaton::new(sol.alphabet.clone(), partition, tables)?)
}

/// States of the composite `S` for replication parameter `n`.
pub fn dhpra_state_count(n_letters: usize, n: usize) -> u128 {
    (1..=n_letters).map(|i| count_states(n_letters, i, n, false)).sum()
}

/// States of the composite `U_n`.
pub fn mmqfa_state_count(n_letters: usize, n: usize) -> u128 {
    (1..=n_letters)
        .map(|i| {
            let g = (n as u128)
                .checked_pow(mmqfa_exponent(n_letters, i))
                .unwrap_or(u128::MAX);
            if g > usize::MAX as u128 {
                u128::MAX
            } else {
                count_states(n_letters, i, g as usize, true)
            }
        })
        .fold(0u128, u128::saturating_add)
}

fn dhpra_tables<T: Weight>(sol: &Solution, l: &Layout) -> Vec<SparseMatrix<T>> {
    let n = l.n_letters;
    let top = l.top();
    let dim = l.len();
    let g = l.group;
    let share = T::from_rational(&rational::ratio(1, g as i64 + 1));
    let mut tables = vec![SparseMatrix::identity(dim)];
    for sym in 1..=n + 1 {
        let mut m = SparseMatrix::zeros(dim);
        let mut covered = vec![false; dim];
        for (&(s, k), &q) in &l.live {
            if s.len() == top {
                if sym == n + 1 || !s.contains((sym - 1) as u8) {
                    let (acc, rej) = l.top_halting[&(s, sym, k)];
                    let r1 = sol.rate(s, sym);
                    let r2 = Rational::one() - &r1;
                    let (r1, r2) = (T::from_rational(&r1), T::from_rational(&r2));
                    m.set(acc, q, r1.clone());
                    m.set(rej, q, r2.clone());
                    m.set(acc, acc, r2);
                    m.set(rej, acc, r1);
                    m.set(q, rej, T::one());
                    for x in [q, acc, rej] {
                        covered[x] = true;
                    }
                }
            } else if sym == n + 1 {
                let r = l.end_reject[&(s, k)];
                m.set(r, q, T::one());
                m.set(q, r, T::one());
                covered[q] = true;
                covered[r] = true;
            } else {
                let a = (sym - 1) as u8;
                if s.contains(a) {
                    continue;
                }
                let t = s.with(a);
                let mut cluster = vec![q];
                cluster.extend((0..g).map(|m| l.live[&(t, k * g + m)]));
                for &x in &cluster {
                    for &y in &cluster {
                        m.set(x, y, share.clone());
                    }
                    covered[x] = true;
                }
            }
        }
        fill_identity(&mut m, &covered);
        tables.push(m);
    }
    tables
}

fn check_n(n: usize) -> Result<(), BuildError> {
    if n == 0 {
        Err(BuildError::ZeroN)
    } else {
        Ok(())
    }
}

/// The reversible simulation `S_{i,n}` of `A_i` on its own.
pub fn build_dhpra_component<T: Weight>(sol: &Solution, i: usize, n: usize) -> Result<DhPra<T>, BuildError> {
    check_component(sol, i)?;
    check_n(n)?;
    let l = layout(sol, i, n, false, &format!("S{i}"), true);
    let tables = dhpra_tables(sol, &l);
    let partition = StatePartition::new(l.states.clone(), l.initial())?;
    Ok(DhPra::new(sol.alphabet.clone(), partition, tables)?)
}

/// The composite `S`: `#` mixes the initial states of `S_{1,n} .. S_{|A|,n}` uniformly.
pub fn build_dhpra<T: Weight>(sol: &Solution, n: usize) -> Result<DhPra<T>, BuildError> {
    check_n(n)?;
    let k = sol.alphabet.len();
    let parts = (1..=k)
        .map(|i| {
            let l = layout(sol, i, n, false, &format!("S{i}"), true);
            Part {
                tables: dhpra_tables::<T>(sol, &l),
                initial: l.initial(),
                states: l.states,
            }
        })
        .collect();
    let share = T::from_rational(&rational::ratio(1, k as i64));
    let (partition, tables) = assemble(parts, |_, _| share.clone());
    Ok(DhPra::new(sol.alphabet.clone(), partition, tables)?)
}

fn mmqfa_tables(sol: &Solution, l: &Layout, n: usize) -> Vec<SparseMatrix<Complex64>> {
    let letters = l.n_letters;
    let top = l.top();
    let dim = l.len();
    let g = l.group;
    let h = h_matrix(g + 1);
    let damping = if l.component == 1 {
        (n as f64).powi(-(alpha(letters as u64 - 1) as i32))
    } else {
        1.0
    };
    let real = |x: f64| Complex64::new(x, 0.0);
    let mut tables = vec![SparseMatrix::identity(dim)];
    for sym in 1..=letters + 1 {
        let mut m = SparseMatrix::zeros(dim);
        let mut covered = vec![false; dim];
        for (&(s, k), &q) in &l.live {
            if s.len() == top {
                if sym == letters + 1 || !s.contains((sym - 1) as u8) {
                    let (acc, rej) = l.top_halting[&(s, sym, k)];
                    let u1 = rational::to_f64(&sol.rate(s, sym)) * damping;
                    let u2 = 1.0 - u1;
                    let (a1, a2) = (u1.sqrt(), u2.max(0.0).sqrt());
                    m.set(acc, q, real(a1));
                    m.set(rej, q, real(a2));
                    m.set(acc, acc, real(a2));
                    m.set(rej, acc, real(-a1));
                    m.set(q, rej, Complex64::one());
                    for x in [q, acc, rej] {
                        covered[x] = true;
                    }
                }
            } else if sym == letters + 1 {
                let r = l.end_reject[&(s, k)];
                m.set(r, q, Complex64::one());
                m.set(q, r, Complex64::one());
                covered[q] = true;
                covered[r] = true;
            } else {
                let a = (sym - 1) as u8;
                if s.contains(a) {
                    continue;
                }
                let t = s.with(a);
                let mut idx = vec![q];
                idx.extend((0..g).map(|m| l.live[&(t, k * g + m)]));
                idx.extend((0..g).map(|m| l.primed[&(t, k * g + m)]));
                for (r, &x) in idx.iter().enumerate() {
                    for (c, &y) in idx.iter().enumerate() {
                        let v = h[(r, c)];
                        if v.norm() > 0.0 {
                            m.set(x, y, v);
                        }
                    }
                    covered[x] = true;
                }
            }
        }
        fill_identity(&mut m, &covered);
        tables.push(m);
    }
    tables
}

fn mmqfa_layout(sol: &Solution, i: usize, n: usize) -> Layout {
    let g = n.pow(mmqfa_exponent(sol.alphabet.len(), i));
    layout(sol, i, g, true, &format!("U{i}"), true)
}

/// The unitary simulation `U_{i,n}` of `A_i` on its own.
pub fn build_mmqfa_component(sol: &Solution, i: usize, n: usize) -> Result<Mmqfa, BuildError> {
    check_component(sol, i)?;
    check_n(n)?;
    let l = mmqfa_layout(sol, i, n);
    let tables = mmqfa_tables(sol, &l, n);
    let partition = StatePartition::new(l.states.clone(), l.initial())?;
    Ok(Mmqfa::new(sol.alphabet.clone(), partition, tables)?)
}

/// The composite `U_n`: `#` applies the `|A|`-point DFT to the initial states.
pub fn build_mmqfa(sol: &Solution, n: usize) -> Result<Mmqfa, BuildError> {
    check_n(n)?;
    let k = sol.alphabet.len();
    let parts = (1..=k)
        .map(|i| {
            let l = mmqfa_layout(sol, i, n);
            Part {
                tables: mmqfa_tables(sol, &l, n),
                initial: l.initial(),
                states: l.states,
            }
        })
        .collect();
    let dft = dft_matrix(k);
    let (partition, tables) = assemble(parts, |r, c| dft[(r, c)]);
    Ok(Mmqfa::new(sol.alphabet.clone(), partition, tables)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::Role;
    use crate::band::R1Language;
    use crate::lp::decide_consistency;
    use crate::rational::ratio;

    fn ab_solution() -> Solution {
        let l = R1Language::parse("abc", &["ab"]).unwrap();
        let c = decide_consistency(&l).unwrap();
        Solution::new(l.alphabet(), c.witness).unwrap()
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(0), 0);
        assert_eq!(alpha(1), 1);
        assert_eq!(alpha(4), 12);
        assert_eq!(alpha(2), 2);
        assert_eq!(alpha(6), 60);
    }

    #[test]
    fn h_matrices() {
        assert_eq!(h_matrix(1), DMatrix::from_element(1, 1, Complex64::one()));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [[0.5, 0.5, s], [0.5, 0.5, -s], [s, -s, 0.0]];
        let h = h_matrix(2);
        for r in 0..3 {
            for c in 0..3 {
                assert!((h[(r, c)] - Complex64::new(expected[r][c], 0.0)).norm() < 1e-15);
            }
        }
        for n in 1..=16 {
            let h = h_matrix(n);
            let defect = (&h * h.adjoint() - DMatrix::identity(2 * n - 1, 2 * n - 1))
                .map(|z| z.norm())
                .max();
            assert!(defect < 1e-12, "n={n}: {defect}");
        }
    }

    #[test]
    fn level_automaton_shapes() {
        let sol = ab_solution();
        let a1 = build_level_automaton(&sol, 1).unwrap();
        // One live state, then acc/rej per letter and for $.
        assert_eq!(a1.partition.len(), 1 + 4 * 2);
        let a3 = build_level_automaton(&sol, 3).unwrap();
        let live = a3.partition.with_role(Role::Non).count();
        assert_eq!(live, 1 + 3 + 3);
        assert!(a3.partition.index_of("A3/{a,b}").is_some());
        assert!(a3.partition.index_of("A3/{a}b:acc").is_none());
        assert!(a3.partition.index_of("A3/{a,b}c:acc").is_some());
        assert!(a3.partition.index_of("A3/{a}$:rej").is_some());
    }

    #[test]
    fn solutions_are_checked() {
        let a = Alphabet::from_chars("ab").unwrap();
        let mut v = BTreeMap::new();
        v.insert(VarKey::Y(LetterSet::EMPTY), ratio(2, 3));
        assert!(matches!(
            Solution::new(&a, v.clone()),
            Err(BuildError::ScaledOutOfRange { .. })
        ));
        v.insert(VarKey::Y(LetterSet::EMPTY), ratio(1, 2));
        assert!(Solution::new(&a, v.clone()).is_ok());
        v.insert(VarKey::X0, ratio(1, 4));
        assert!(matches!(Solution::new(&a, v), Err(BuildError::NonzeroX0(_))));
    }

    #[test]
    fn dhpra_is_doubly_stochastic() {
        let sol = ab_solution();
        for n in 1..=3 {
            let s: DhPra<Rational> = build_dhpra(&sol, n).unwrap();
            assert_eq!(s.partition.len() as u128, dhpra_state_count(3, n));
            for t in &s.transitions {
                assert!(t.is_doubly_stochastic(0.0));
            }
        }
    }

    #[test]
    fn mmqfa_is_unitary() {
        let sol = ab_solution();
        for n in 1..=3 {
            let u = build_mmqfa(&sol, n).unwrap();
            assert_eq!(u.partition.len() as u128, mmqfa_state_count(3, n));
            for t in &u.transitions {
                assert!(t.unitarity_defect() < 1e-12);
            }
        }
        assert_eq!(mmqfa_exponent(3, 1), 0);
        assert_eq!(mmqfa_exponent(3, 2), 2);
        assert_eq!(mmqfa_exponent(3, 3), 1);
        assert_eq!(mmqfa_exponent(2, 2), 1);
    }
}

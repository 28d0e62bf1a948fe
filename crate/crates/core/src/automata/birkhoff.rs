//! Exact Birkhoff decomposition of doubly stochastic matrices, and the lift of
//! a DH-PRA to a random-unitary MM-BQFA.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{self, Rational};
use crate::sparse::SparseMatrix;

use super::{symbol_char, DhPra, MmBqfa, ModelError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BirkhoffError {
    #[error("matrix is not doubly stochastic")]
    NotDoublyStochastic,
    #[error("matrix for '{0}' is not doubly stochastic")]
    Symbol(char),
}

/// `sum weight * P(perm)` with `P(perm)` sending `from` to `perm[from]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BirkhoffDecomposition {
    pub dim: usize,
    pub terms: Vec<(Rational, Vec<usize>)>,
}

impl BirkhoffDecomposition {
    pub fn reconstruct(&self) -> SparseMatrix<Rational> {
        let mut acc: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); self.dim];
        for (w, perm) in &self.terms {
            for (from, &to) in perm.iter().enumerate() {
                *acc[from].entry(to).or_insert_with(Rational::zero) += w;
            }
        }
        let mut m = SparseMatrix::zeros(self.dim);
        for (from, col) in acc.into_iter().enumerate() {
            for (to, v) in col {
                m.set(to, from, v);
            }
        }
        m
    }

    pub fn weight_sum(&self) -> Rational {
        self.terms.iter().fold(Rational::zero(), |acc, (w, _)| acc + w)
    }
}

/// Finds a perfect matching on the positive support, extending `col_match`.
/// Returns false when some column cannot be matched.
fn complete_matching(
    support: &[BTreeMap<usize, Rational>],
    col_match: &mut [Option<usize>],
    row_match: &mut [Option<usize>],
) -> bool {
    let n = support.len();
    let mut visited = vec![false; n];
    for start in 0..n {
        if col_match[start].is_some() {
            continue;
        }
        visited.iter_mut().for_each(|v| *v = false);
        // Iterative augmenting-path search: stack of (column, candidate rows).
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(start, support[start].keys().copied().collect())];
        let mut via: Vec<(usize, usize)> = Vec::new(); // (column, row) along the path
        let mut found = false;
        while let Some((col, rows)) = stack.last_mut() {
            let col = *col;
            let Some(row) = rows.pop() else {
                stack.pop();
                via.pop();
                continue;
            };
            if visited[row] {
                continue;
            }
            visited[row] = true;
            match row_match[row] {
                None => {
                    via.push((col, row));
                    found = true;
                    break;
                }
                Some(next) => {
                    via.push((col, row));
                    stack.push((next, support[next].keys().copied().collect()));
                }
            }
        }
        if !found {
            return false;
        }
        for (col, row) in via {
            col_match[col] = Some(row);
            row_match[row] = Some(col);
        }
    }
    true
}

/// Greedy decomposition: repeatedly take a perfect matching on the positive
/// support and subtract its smallest entry. Produces at most `(n-1)^2 + 1` terms.
pub fn birkhoff(m: &SparseMatrix<Rational>) -> Result<BirkhoffDecomposition, BirkhoffError> {
    if m.has_negative_entry() || !m.is_doubly_stochastic(0.0) {
        return Err(BirkhoffError::NotDoublyStochastic);
    }
    let n = m.dim();
    let mut support: Vec<BTreeMap<usize, Rational>> = (0..n)
        .map(|from| m.column(from).iter().map(|(to, v)| (*to, v.clone())).collect())
        .collect();
    let mut col_match = vec![None; n];
    let mut row_match = vec![None; n];
    let mut terms = Vec::new();
    let mut remaining = Rational::one();
    while remaining.is_positive() {
        if !complete_matching(&support, &mut col_match, &mut row_match) {
            return Err(BirkhoffError::NotDoublyStochastic);
        }
        let perm: Vec<usize> = col_match.iter().map(|r| r.expect("perfect matching")).collect();
        let w = perm
            .iter()
            .enumerate()
            .map(|(c, r)| &support[c][r])
            .min()
            .cloned()
            .unwrap_or_else(Rational::one);
        for (c, &r) in perm.iter().enumerate() {
            let entry = support[c].get_mut(&r).expect("matched entry");
            *entry -= &w;
            if entry.is_zero() {
                support[c].remove(&r);
                col_match[c] = None;
                row_match[r] = None;
            }
        }
        remaining -= &w;
        terms.push((w, perm));
    }
    Ok(BirkhoffDecomposition { dim: n, terms })
}

/// Kraus family `{sqrt(w) T}` of each symbol's Birkhoff decomposition.
pub fn lift_to_bqfa(d: &DhPra<Rational>) -> Result<MmBqfa, ModelError> {
    let mut kraus = Vec::with_capacity(d.transitions.len());
    for (si, t) in d.transitions.iter().enumerate() {
        let dec = birkhoff(t).map_err(|_| ModelError::NotDoublyStochastic(symbol_char(&d.alphabet, si)))?;
        let family = dec
            .terms
            .iter()
            .map(|(w, perm)| {
                let amp = Complex64::new(rational::to_f64(w).sqrt(), 0.0);
                SparseMatrix::<Complex64>::permutation(perm).map(|v| v * amp)
            })
            .collect();
        kraus.push(family);
    }
    MmBqfa::new(d.alphabet.clone(), d.partition.clone(), kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn identity_and_flip() {
        let id: SparseMatrix<Rational> = SparseMatrix::identity(4);
        let d = birkhoff(&id).unwrap();
        assert_eq!(d.terms, vec![(int(1), vec![0, 1, 2, 3])]);

        let half = ratio(1, 2);
        let m = SparseMatrix::from_dense(&[vec![half.clone(), half.clone()], vec![half.clone(), half.clone()]]);
        let d = birkhoff(&m).unwrap();
        assert_eq!(d.terms.len(), 2);
        let mut perms: Vec<_> = d.terms.iter().map(|(w, p)| (w.clone(), p.clone())).collect();
        perms.sort();
        assert_eq!(perms, vec![(half.clone(), vec![0, 1]), (half, vec![1, 0])]);
        assert_eq!(d.reconstruct(), m);
    }

    #[test]
    fn uniform_cluster_has_three_terms() {
        let third = ratio(1, 3);
        let rows = vec![vec![third.clone(); 3]; 3];
        let m = SparseMatrix::from_dense(&rows);
        let d = birkhoff(&m).unwrap();
        assert_eq!(d.terms.len(), 3);
        assert!(d.terms.iter().all(|(w, _)| *w == third));
        assert_eq!(d.reconstruct(), m);
    }

    #[test]
    fn rejects_non_doubly_stochastic() {
        let m = SparseMatrix::from_dense(&[vec![int(1), int(1)], vec![int(0), int(0)]]);
        assert_eq!(birkhoff(&m), Err(BirkhoffError::NotDoublyStochastic));
        let neg = SparseMatrix::from_dense(&[vec![int(2), int(-1)], vec![int(-1), int(2)]]);
        assert_eq!(birkhoff(&neg), Err(BirkhoffError::NotDoublyStochastic));
    }
}

//! Column-sparse square matrices acting on probability or amplitude vectors.
//!
//! Entry `(to, from)` is the weight of the transition `from -> to`, so a
//! state distribution is a column vector and one step is `M * x`.

use std::fmt::Debug;

use num_complex::Complex64;
use num_traits::{Num, Signed};

use crate::rational::{self, Rational};

/// Scalar type of a probabilistic automaton: exact rationals or `f64`.
pub trait Weight: Num + Clone + Debug + PartialOrd + Send + Sync + 'static {
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Whether `self` equals `other` up to the backend's tolerance.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;
    fn is_exact() -> bool;
    /// `"num/den"` for rationals, a JSON number for floats.
    fn to_json(&self) -> serde_json::Value;
}

impl Weight for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        rational::to_f64(self)
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn is_exact() -> bool {
        true
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(rational::format(self))
    }
}

impl Weight for f64 {
    fn from_rational(r: &Rational) -> Self {
        rational::to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn is_exact() -> bool {
        false
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    dim: usize,
    cols: Vec<Vec<(usize, T)>>,
}

impl<T: Clone + Num> SparseMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        SparseMatrix {
            dim,
            cols: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseMatrix {
            dim,
            cols: (0..dim).map(|j| vec![(j, T::one())]).collect(),
        }
    }

    /// Permutation matrix sending `from` to `perm[from]`.
    pub fn permutation(perm: &[usize]) -> Self {
        SparseMatrix {
            dim: perm.len(),
            cols: perm.iter().map(|&to| vec![(to, T::one())]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sets entry `(to, from)`, replacing any previous value; zeros are dropped.
    pub fn set(&mut self, to: usize, from: usize, value: T) {
        let col = &mut self.cols[from];
        col.retain(|(t, _)| *t != to);
        if !value.is_zero() {
            col.push((to, value));
            col.sort_by_key(|(t, _)| *t);
        }
    }

    pub fn get(&self, to: usize, from: usize) -> T {
        self.cols[from]
            .iter()
            .find(|(t, _)| *t == to)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(T::zero)
    }

    pub fn column(&self, from: usize) -> &[(usize, T)] {
        &self.cols[from]
    }

    pub fn clear_column(&mut self, from: usize) {
        self.cols[from].clear();
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// Iterates over `(to, from, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(from, col)| col.iter().map(move |(to, v)| (*to, from, v)))
    }

    pub fn column_sums(&self) -> Vec<T> {
        self.cols
            .iter()
            .map(|c| c.iter().fold(T::zero(), |acc, (_, v)| acc + v.clone()))
            .collect()
    }

    pub fn row_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.dim];
        for (to, _, v) in self.entries() {
            sums[to] = sums[to].clone() + v.clone();
        }
        sums
    }

    pub fn map<U: Clone + Num>(&self, f: impl Fn(&T) -> U) -> SparseMatrix<U> {
        SparseMatrix {
            dim: self.dim,
            cols: self
                .cols
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|(t, v)| (*t, f(v)))
                        .filter(|(_, v)| !v.is_zero())
                        .collect()
                })
                .collect(),
        }
    }

    /// Block-diagonal matrix with `parts` along the diagonal.
    pub fn block_diagonal(parts: &[SparseMatrix<T>]) -> Self {
        let dim = parts.iter().map(|p| p.dim).sum();
        let mut cols = Vec::with_capacity(dim);
        let mut offset = 0;
        for p in parts {
            for c in &p.cols {
                cols.push(c.iter().map(|(t, v)| (t + offset, v.clone())).collect());
            }
            offset += p.dim;
        }
        SparseMatrix { dim, cols }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.dim]; self.dim];
        for (to, from, v) in self.entries() {
            d[to][from] = v.clone();
        }
        d
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let dim = rows.len();
        let mut m = SparseMatrix::zeros(dim);
        for (to, row) in rows.iter().enumerate() {
            for (from, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    m.cols[from].push((to, v.clone()));
                }
            }
        }
        m
    }
}

impl<T: Weight> SparseMatrix<T> {
    /// Non-negative entries with every row and column summing to one.
    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        let nonneg = self.entries().all(|(_, _, v)| *v >= T::zero());
        nonneg
            && self.column_sums().iter().all(|s| s.approx_eq(&T::one(), tol))
            && self.row_sums().iter().all(|s| s.approx_eq(&T::one(), tol))
    }
}

impl SparseMatrix<Rational> {
    pub fn has_negative_entry(&self) -> bool {
        self.entries().any(|(_, _, v)| v.is_negative())
    }
}

impl SparseMatrix<Complex64> {
    /// `max |(U U*)_{ij} - delta_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        // Columns of U are orthonormal iff U*U = I; for square U this is equivalent.
        let mut worst: f64 = 0.0;
        let mut dense_col = vec![Complex64::new(0.0, 0.0); self.dim];
        for j in 0..self.dim {
            for v in dense_col.iter_mut() {
                *v = Complex64::new(0.0, 0.0);
            }
            for (t, v) in &self.cols[j] {
                dense_col[*t] = *v;
            }
            for k in 0..self.dim {
                let mut dot = Complex64::new(0.0, 0.0);
                for (t, v) in &self.cols[k] {
                    dot += v.conj() * dense_col[*t];
                }
                let target = if k == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = SparseMatrix::zeros(self.dim);
        for (to, from, v) in self.entries() {
            out.cols[to].push((from, v.conj()));
        }
        for c in out.cols.iter_mut() {
            c.sort_by_key(|(t, _)| *t);
        }
        out
    }
}

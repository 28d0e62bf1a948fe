//! Completely positive maps as Kraus families, their predicates and
//! superoperators, omega-limit idempotents, and quantum automaton simulators.
//!
//! Matrices are vectorised by stacking columns, so the superoperator of
//! `{V_i}` is `sum conj(V_i) (x) V_i`.

mod omega;
pub mod random;
mod run;

pub use omega::{
    omega_limit, omega_of_superoperator, verify_bist_ej, BistEjReport, Confidence, OmegaLimit, OmegaOptions,
};
pub use run::{run_mmbqfa, run_mmqfa, run_mobqfa, BqfaRun};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

use crate::error::InputError;

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for the positivity, hermiticity and channel predicates.
pub const PREDICATE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("Kraus family is empty")]
    EmptyKraus,
    #[error("Kraus operator {index} is {rows}x{cols}, expected {exp_rows}x{exp_cols}")]
    Shape {
        index: usize,
        rows: usize,
        cols: usize,
        exp_rows: usize,
        exp_cols: usize,
    },
    #[error("map is not sub-bistochastic")]
    NotSubBistochastic,
    #[error("map {index} is not idempotent (deviation {deviation:e})")]
    NotIdempotent { index: usize, deviation: f64 },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Input(#[from] InputError),
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn require_square(m: &CMatrix) -> Result<usize, QuantumError> {
    if m.nrows() != m.ncols() {
        return Err(QuantumError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Largest entrywise modulus of `m - m*`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Hermitian with nonnegative spectrum, within [`PREDICATE_TOL`].
pub fn is_positive(m: &CMatrix) -> Result<bool, QuantumError> {
    require_square(m)?;
    Ok(hermitian_defect(m) <= PREDICATE_TOL && min_hermitian_eigenvalue(m) >= -PREDICATE_TOL)
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// `||m - I||` in the largest-entry sense.
fn identity_defect(m: &CMatrix) -> f64 {
    let id = CMatrix::identity(m.nrows(), m.ncols());
    (m - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Kraus representation `Phi(M) = sum V_i M V_i*` of a CP map from
/// `cols x cols` to `rows x rows` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct CpMap {
    kraus: Vec<CMatrix>,
}

impl CpMap {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self, QuantumError> {
        let first = kraus.first().ok_or(QuantumError::EmptyKraus)?;
        let (r, cl) = first.shape();
        for (index, v) in kraus.iter().enumerate() {
            if v.shape() != (r, cl) {
                return Err(QuantumError::Shape {
                    index,
                    rows: v.nrows(),
                    cols: v.ncols(),
                    exp_rows: r,
                    exp_cols: cl,
                });
            }
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(QuantumError::NonFinite);
            }
        }
        Ok(CpMap { kraus })
    }

    pub fn unitary(u: CMatrix) -> Result<Self, QuantumError> {
        CpMap::new(vec![u])
    }

    pub fn identity(dim: usize) -> Self {
        CpMap {
            kraus: vec![CMatrix::identity(dim, dim)],
        }
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn is_square(&self) -> bool {
        self.input_dim() == self.output_dim()
    }

    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.output_dim(), self.output_dim());
        for v in &self.kraus {
            out += v * m * v.adjoint();
        }
        out
    }

    /// `self` after `first`: Kraus operators `A_i B_j`.
    pub fn compose(&self, first: &CpMap) -> Result<CpMap, QuantumError> {
        if self.input_dim() != first.output_dim() {
            return Err(QuantumError::Shape {
                index: 0,
                rows: first.output_dim(),
                cols: first.input_dim(),
                exp_rows: self.input_dim(),
                exp_cols: first.input_dim(),
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for a in &self.kraus {
            for b in &first.kraus {
                kraus.push(a * b);
            }
        }
        Ok(CpMap { kraus })
    }

    /// Every operator multiplied by `factor`; the map itself scales by `|factor|^2`.
    pub fn scaled(&self, factor: f64) -> CpMap {
        CpMap {
            kraus: self.kraus.iter().map(|v| v * c(factor, 0.0)).collect(),
        }
    }

    /// `sum V* V`.
    pub fn gram(&self) -> CMatrix {
        let n = self.input_dim();
        self.kraus
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, v| acc + v.adjoint() * v)
    }

    /// `sum V V*`.
    pub fn co_gram(&self) -> CMatrix {
        let n = self.output_dim();
        self.kraus
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, v| acc + v * v.adjoint())
    }

    pub fn predicates(&self) -> ChannelPredicates {
        channel_predicates(self)
    }

    /// `n^2 x n^2` matrix acting on column-stacked `vec(M)`.
    pub fn superoperator(&self) -> CMatrix {
        let (r, cl) = (self.output_dim(), self.input_dim());
        let mut s = CMatrix::zeros(r * r, cl * cl);
        for v in &self.kraus {
            s += v.map(|z| z.conj()).kronecker(v);
        }
        s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dim": self.input_dim(),
            "kraus": self.kraus.iter().map(matrix_to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, QuantumError> {
        let bad = |m: &str| QuantumError::Input(InputError::Json(m.to_string()));
        let kraus = v
            .get("kraus")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("channel needs a \"kraus\" array"))?;
        let ops = kraus.iter().map(matrix_from_json).collect::<Result<Vec<_>, _>>()?;
        let map = CpMap::new(ops)?;
        if let Some(d) = v.get("dim") {
            let d = d.as_u64().ok_or_else(|| bad("\"dim\" must be a nonnegative integer"))? as usize;
            if d != map.input_dim() {
                return Err(bad(&format!(
                    "\"dim\" is {d} but operators have {} columns",
                    map.input_dim()
                )));
            }
        }
        Ok(map)
    }
}

/// Rows of `[re, im]` pairs.
pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

fn complex_from_json(v: &Value) -> Option<Complex64> {
    match v {
        Value::Number(x) => Some(c(x.as_f64()?, 0.0)),
        Value::Array(p) if p.len() == 2 => Some(c(p[0].as_f64()?, p[1].as_f64()?)),
        _ => None,
    }
}

/// Accepts rows of `[re, im]` pairs or plain real numbers.
pub fn matrix_from_json(v: &Value) -> Result<CMatrix, QuantumError> {
    let bad = |m: String| QuantumError::Input(InputError::Json(m));
    let rows = v
        .as_array()
        .ok_or_else(|| bad("matrix must be an array of rows".into()))?;
    let ncols = rows.first().and_then(Value::as_array).map_or(0, Vec::len);
    let mut m = CMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| bad(format!("row {i} is not an array")))?;
        if row.len() != ncols {
            return Err(bad(format!("row {i} has {} entries, expected {ncols}", row.len())));
        }
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] =
                complex_from_json(x).ok_or_else(|| bad(format!("entry ({i},{j}) is not a number or [re, im]")))?;
        }
    }
    Ok(m)
}

/// Flags derived from `sum V*V` and `sum V V*`. The unital family is `None`
/// for non-square maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelPredicates {
    pub trace_preserving: bool,
    pub sub_tracial: bool,
    pub unital: Option<bool>,
    pub sub_unital: Option<bool>,
    pub bistochastic: Option<bool>,
    pub sub_bistochastic: Option<bool>,
}

impl ChannelPredicates {
    pub fn to_json(&self) -> Value {
        json!({
            "trace_preserving": self.trace_preserving,
            "sub_tracial": self.sub_tracial,
            "unital": self.unital,
            "sub_unital": self.sub_unital,
            "bistochastic": self.bistochastic,
            "sub_bistochastic": self.sub_bistochastic,
        })
    }
}

pub fn channel_predicates(map: &CpMap) -> ChannelPredicates {
    let tol = PREDICATE_TOL;
    let below_identity = |s: &CMatrix| {
        let id = CMatrix::identity(s.nrows(), s.ncols());
        min_hermitian_eigenvalue(&(id - s)) >= -tol
    };
    let gram = map.gram();
    let trace_preserving = identity_defect(&gram) <= tol;
    let sub_tracial = below_identity(&gram);
    if !map.is_square() {
        return ChannelPredicates {
            trace_preserving,
            sub_tracial,
            unital: None,
            sub_unital: None,
            bistochastic: None,
            sub_bistochastic: None,
        };
    }
    let co = map.co_gram();
    let unital = identity_defect(&co) <= tol;
    let sub_unital = below_identity(&co);
    ChannelPredicates {
        trace_preserving,
        sub_tracial,
        unital: Some(unital),
        sub_unital: Some(sub_unital),
        bistochastic: Some(trace_preserving && unital),
        sub_bistochastic: Some(sub_tracial && sub_unital),
    }
}

pub fn superoperator(map: &CpMap) -> CMatrix {
    map.superoperator()
}

/// Column-stacking vectorisation.
pub fn vec_of(m: &CMatrix) -> CMatrix {
    CMatrix::from_iterator(m.len(), 1, m.iter().copied())
}

pub fn unvec(v: &CMatrix, rows: usize) -> CMatrix {
    CMatrix::from_iterator(rows, v.len() / rows, v.iter().copied())
}

/// A possibly scaled mixed state: Hermitian, positive, trace in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self, QuantumError> {
        require_square(&m)?;
        let tol = PREDICATE_TOL;
        let tr = m.trace();
        if hermitian_defect(&m) > tol || min_hermitian_eigenvalue(&m) < -tol || tr.re < -tol || tr.re > 1.0 + tol {
            return Err(QuantumError::Numerical("not a scaled density matrix".into()));
        }
        Ok(DensityMatrix(m))
    }

    /// `|i><i|` on `dim` states.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, i)] = c(1.0, 0.0);
        DensityMatrix(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Phi(rho)`; the result is a scaled density matrix whenever `Phi` is sub-tracial.
    pub fn evolve(&self, map: &CpMap) -> DensityMatrix {
        DensityMatrix(map.apply(&self.0))
    }

    /// `P rho P` for the coordinate projector onto `keep`.
    pub fn project(&self, keep: &[bool]) -> DensityMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if !(keep[i] && keep[j]) {
                    m[(i, j)] = c(0.0, 0.0);
                }
            }
        }
        DensityMatrix(m)
    }
}

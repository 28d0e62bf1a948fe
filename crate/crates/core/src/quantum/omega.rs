//! The idempotent `Phi^omega` generated by a sub-bistochastic map, and the
//! numerical check that products of idempotents have order-independent
//! omega-limits.

use nalgebra::{DVector, Schur};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use super::{matrix_to_json, spectral_norm, CMatrix, CpMap, QuantumError};
use crate::exec::Execution;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaOptions {
    /// Eigenvalues with `|lambda| >= 1 - peripheral_tol` are kept.
    pub peripheral_tol: f64,
    pub idempotent_tol: f64,
    /// Peripheral eigenvalues closer than this are treated as one.
    pub cluster_tol: f64,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        OmegaOptions {
            peripheral_tol: 1e-9,
            idempotent_tol: 1e-6,
            cluster_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Confidence {
    /// Built from the spectral projectors of the peripheral eigenvalues.
    Spectral,
    /// Spectral construction failed; obtained from high matrix powers.
    Reduced,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::Spectral => "spectral",
            Confidence::Reduced => "reduced",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaLimit {
    pub superoperator: CMatrix,
    pub confidence: Confidence,
    pub peripheral: Vec<Complex64>,
    pub idempotency_defect: f64,
    pub diagnostics: Option<String>,
}

impl OmegaLimit {
    pub fn to_json(&self) -> Value {
        json!({
            "dim": self.superoperator.nrows(),
            "confidence": self.confidence.as_str(),
            "peripheral": self.peripheral.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
            "idempotency_defect": self.idempotency_defect,
            "diagnostics": self.diagnostics,
            "superoperator": matrix_to_json(&self.superoperator),
        })
    }
}

/// `Phi^omega` of a sub-bistochastic map, as a superoperator.
pub fn omega_limit(map: &CpMap, opts: &OmegaOptions) -> Result<OmegaLimit, QuantumError> {
    if map.predicates().sub_bistochastic != Some(true) {
        return Err(QuantumError::NotSubBistochastic);
    }
    omega_of_superoperator(&map.superoperator(), opts)
}

fn idempotency_defect(p: &CMatrix) -> f64 {
    (p * p - p).norm()
}

/// Sum of the spectral projectors for the peripheral eigenvalues of `s`,
/// falling back to high powers when the spectral data is unreliable.
pub fn omega_of_superoperator(s: &CMatrix, opts: &OmegaOptions) -> Result<OmegaLimit, QuantumError> {
    if s.nrows() != s.ncols() {
        return Err(QuantumError::NotSquare {
            rows: s.nrows(),
            cols: s.ncols(),
        });
    }
    let norm = spectral_norm(s);
    if norm > 1.0 + 1e-8 {
        return Err(QuantumError::Numerical(format!("superoperator norm {norm} exceeds 1")));
    }
    let first = match unitary_part(s, opts) {
        Ok(out) => return Ok(out),
        Err(reason) => reason,
    };
    match spectral(s, opts) {
        Ok(out) => Ok(out),
        Err(reason) => powers(s, opts, format!("{first}; {reason}")),
    }
}

/// For a contraction the peripheral eigenvectors span a reducing subspace on
/// which `S` is unitary, so `Phi^omega` is the orthogonal projection onto it.
/// A vector lies in that subspace iff `S^K` and `S^K*` both preserve its norm
/// for some `K >= dim`.
fn unitary_part(s: &CMatrix, opts: &OmegaOptions) -> Result<OmegaLimit, String> {
    let n = s.nrows();
    let mut k = 1u64;
    let mut sk = s.clone();
    while k < (n as u64).max(1024) {
        sk = &sk * &sk;
        k *= 2;
    }
    let id = CMatrix::identity(n, n);
    let m = (&id - sk.adjoint() * &sk) + (&id - &sk * sk.adjoint());
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = m.symmetric_eigen();
    let threshold = 4.0 * k as f64 * opts.peripheral_tol;
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= threshold).collect();
    if keep.is_empty() {
        return Ok(OmegaLimit {
            superoperator: CMatrix::zeros(n, n),
            confidence: Confidence::Spectral,
            peripheral: Vec::new(),
            idempotency_defect: 0.0,
            diagnostics: None,
        });
    }
    let gap = (0..n)
        .filter(|i| !keep.contains(i))
        .map(|i| eig.eigenvalues[i])
        .fold(f64::INFINITY, f64::min);
    if gap < 100.0 * threshold {
        return Err(format!("no clear gap below the peripheral spectrum ({gap:e})"));
    }
    let cols: Vec<DVector<Complex64>> = keep.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let q = CMatrix::from_columns(&cols);
    let b = q.adjoint() * s * &q;
    let invariance = (s * &q - &q * &b).norm() + (s.adjoint() * &q - &q * b.adjoint()).norm();
    let r = keep.len();
    let unitarity = (b.adjoint() * &b - CMatrix::identity(r, r)).norm();
    if invariance > 1e-8 || unitarity > 1e-8 {
        return Err(format!(
            "peripheral subspace check failed (invariance {invariance:e}, unitarity {unitarity:e})"
        ));
    }
    let p = &q * q.adjoint();
    let defect = idempotency_defect(&p);
    Ok(OmegaLimit {
        superoperator: p,
        confidence: Confidence::Spectral,
        peripheral: normal_eigenvalues(&b, opts.cluster_tol),
        idempotency_defect: defect,
        diagnostics: None,
    })
}

/// Distinct eigenvalues of a normal matrix, read off the eigenvectors of a
/// generic Hermitian combination of its real and imaginary parts.
fn normal_eigenvalues(b: &CMatrix, cluster_tol: f64) -> Vec<Complex64> {
    let re = (b + b.adjoint()) * Complex64::new(0.5, 0.0);
    let im = (b - b.adjoint()) * Complex64::new(0.0, -0.5);
    let h = re + im * Complex64::new(0.754_877_666_2, 0.0);
    let eig = h.symmetric_eigen();
    let mut out: Vec<Complex64> = Vec::new();
    for v in eig.eigenvectors.column_iter() {
        let l = (v.adjoint() * b * v)[(0, 0)];
        if out.iter().all(|x| (x - l).norm() > cluster_tol) {
            out.push(l);
        }
    }
    out
}

fn spectral(s: &CMatrix, opts: &OmegaOptions) -> Result<OmegaLimit, String> {
    let n = s.nrows();
    let schur = Schur::try_new(s.clone(), f64::EPSILON, 1000 * n.max(1)).ok_or("Schur iteration did not converge")?;
    let (_, t) = schur.unpack();
    let eig: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &l in eig.iter().filter(|l| l.norm() >= 1.0 - opts.peripheral_tol) {
        match clusters.iter_mut().find(|(c0, _)| (*c0 - l).norm() <= opts.cluster_tol) {
            Some(entry) => entry.1 += 1,
            None => clusters.push((l, 1)),
        }
    }
    let peripheral: Vec<Complex64> = clusters.iter().map(|(l, _)| *l).collect();
    if clusters.is_empty() {
        return Ok(OmegaLimit {
            superoperator: CMatrix::zeros(n, n),
            confidence: Confidence::Spectral,
            peripheral,
            idempotency_defect: 0.0,
            diagnostics: None,
        });
    }
    let null_tol = 1e-7 * spectral_norm(s).max(1.0);
    let mut right: Vec<DVector<Complex64>> = Vec::new();
    let mut left: Vec<DVector<Complex64>> = Vec::new();
    for &(l, mult) in &clusters {
        let k = s - CMatrix::identity(n, n) * l;
        let svd = k.svd(true, true);
        let (u, vt) = (svd.u.as_ref().expect("u"), svd.v_t.as_ref().expect("v_t"));
        let small: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= null_tol).collect();
        if small.len() != mult {
            return Err(format!(
                "eigenvalue {l} has algebraic multiplicity {mult} but {} null vectors",
                small.len()
            ));
        }
        for &i in &small {
            right.push(vt.row(i).adjoint());
            left.push(u.column(i).into_owned());
        }
    }
    let r = CMatrix::from_columns(&right);
    let l = CMatrix::from_columns(&left);
    let g = l.adjoint() * &r;
    let sv = g.clone().singular_values();
    let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest < 1e-8 {
        return Err(format!(
            "left/right eigenvector pairing is ill-conditioned ({smallest:e})"
        ));
    }
    let g_inv = g.try_inverse().ok_or("eigenvector pairing is singular")?;
    let p = &r * g_inv * l.adjoint();
    let defect = idempotency_defect(&p);
    if defect > opts.idempotent_tol {
        return Err(format!("spectral projector idempotency defect {defect:e}"));
    }
    Ok(OmegaLimit {
        superoperator: p,
        confidence: Confidence::Spectral,
        peripheral,
        idempotency_defect: defect,
        diagnostics: None,
    })
}

fn lcm_up_to(k: u64) -> u64 {
    (1..=k).fold(1u64, |acc, x| acc / num_integer::gcd(acc, x) * x)
}

fn matrix_power(s: &CMatrix, mut e: u64) -> CMatrix {
    let mut base = s.clone();
    let mut acc = CMatrix::identity(s.nrows(), s.ncols());
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

/// Peripheral eigenvalues of a contraction that generates a CP semigroup are
/// roots of unity of order at most the dimension, so `S^L` with `L` a common
/// multiple of those orders has a peripheral spectrum of `{1}` and repeated
/// squaring converges.
fn powers(s: &CMatrix, opts: &OmegaOptions, reason: String) -> Result<OmegaLimit, QuantumError> {
    let order = lcm_up_to((s.nrows() as u64).clamp(1, 20));
    // Squaring also amplifies roundoff on eigenvalues at 1, so keep the
    // iterate closest to idempotent.
    let mut p = matrix_power(s, order);
    let mut best = (idempotency_defect(&p), p.clone());
    for _ in 0..64 {
        p = &p * &p;
        let defect = idempotency_defect(&p);
        if defect < best.0 {
            best = (defect, p.clone());
        } else if best.0 < 1e-12 {
            break;
        }
    }
    let (defect, p) = best;
    if defect > opts.idempotent_tol {
        return Err(QuantumError::Numerical(format!(
            "{reason}; power iteration left idempotency defect {defect:e}"
        )));
    }
    Ok(OmegaLimit {
        superoperator: p,
        confidence: Confidence::Reduced,
        peripheral: Vec::new(),
        idempotency_defect: defect,
        diagnostics: Some(reason),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BistEjReport {
    pub k: usize,
    /// Each tested order with `||(e_pi)^omega - E||_F`.
    pub permutations: Vec<(Vec<usize>, f64)>,
    /// `(||e_i E - E||_F, ||E e_i - E||_F)` per map.
    pub absorption: Vec<(f64, f64)>,
    pub max_permutation_deviation: f64,
    pub max_absorption_deviation: f64,
    pub confidence: Confidence,
}

impl BistEjReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_permutation_deviation.max(self.max_absorption_deviation)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_deviation() <= tol
    }

    pub fn to_json(&self) -> Value {
        json!({
            "k": self.k,
            "permutations": self.permutations.iter().map(|(p, d)| json!({"order": p, "deviation": d})).collect::<Vec<_>>(),
            "absorption": self.absorption.iter().map(|(l, r)| json!({"left": l, "right": r})).collect::<Vec<_>>(),
            "max_permutation_deviation": self.max_permutation_deviation,
            "max_absorption_deviation": self.max_absorption_deviation,
            "max_deviation": self.max_deviation(),
            "confidence": self.confidence.as_str(),
        })
    }
}

fn product(maps: &[CMatrix], order: &[usize]) -> CMatrix {
    let n = maps[0].nrows();
    order.iter().fold(CMatrix::identity(n, n), |acc, &i| acc * &maps[i])
}

/// Compares `(e_1 ... e_k)^omega` with the omega-limit of the product in the
/// identity, reversed and `samples` random orders, and checks that every
/// `e_i` is absorbed by it on both sides.
pub fn verify_bist_ej<R: Rng>(
    maps: &[CMatrix],
    samples: usize,
    rng: &mut R,
    opts: &OmegaOptions,
    exec: Execution,
) -> Result<BistEjReport, QuantumError> {
    if maps.is_empty() {
        return Err(QuantumError::EmptyKraus);
    }
    let n = maps[0].nrows();
    for (index, e) in maps.iter().enumerate() {
        if e.shape() != (n, n) {
            return Err(QuantumError::Shape {
                index,
                rows: e.nrows(),
                cols: e.ncols(),
                exp_rows: n,
                exp_cols: n,
            });
        }
        let deviation = idempotency_defect(e);
        if deviation > opts.idempotent_tol {
            return Err(QuantumError::NotIdempotent { index, deviation });
        }
    }
    let k = maps.len();
    let identity: Vec<usize> = (0..k).collect();
    let mut orders = vec![identity.clone()];
    let reversed: Vec<usize> = identity.iter().rev().copied().collect();
    if reversed != identity {
        orders.push(reversed);
    }
    for _ in 0..samples {
        let mut p = identity.clone();
        p.shuffle(rng);
        if !orders.contains(&p) {
            orders.push(p);
        }
    }
    let limits = exec.map(&orders, |o| omega_of_superoperator(&product(maps, o), opts));
    let limits: Vec<OmegaLimit> = limits.into_iter().collect::<Result<_, _>>()?;
    let e = &limits[0].superoperator;
    let confidence = if limits.iter().all(|l| l.confidence == Confidence::Spectral) {
        Confidence::Spectral
    } else {
        Confidence::Reduced
    };
    let permutations: Vec<(Vec<usize>, f64)> = orders
        .iter()
        .zip(&limits)
        .map(|(o, l)| (o.clone(), (&l.superoperator - e).norm()))
        .collect();
    let absorption: Vec<(f64, f64)> = maps.iter().map(|m| ((m * e - e).norm(), (e * m - e).norm())).collect();
    let max_permutation_deviation = permutations.iter().map(|p| p.1).fold(0.0, f64::max);
    let max_absorption_deviation = absorption.iter().map(|(a, b)| a.max(*b)).fold(0.0, f64::max);
    Ok(BistEjReport {
        k,
        permutations,
        absorption,
        max_permutation_deviation,
        max_absorption_deviation,
        confidence,
    })
}

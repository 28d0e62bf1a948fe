//! Measure-many and measure-once simulation of quantum automata.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::Zero;

use crate::automata::{tape, MmBqfa, Mmqfa, ModelError, Role};
use crate::band::Word;
use crate::sim::{check_word, HaltingDistribution, SimError, FLOAT_RESIDUAL_TOL};

fn drained(dist: HaltingDistribution<f64>) -> Result<HaltingDistribution<f64>, SimError> {
    let residual = dist.residual();
    if residual.abs() >= FLOAT_RESIDUAL_TOL {
        return Err(ModelError::ResidualMass { residual }.into());
    }
    Ok(dist)
}

/// Pure-state MM-QFA run on `# w $`: after each unitary the halting
/// amplitudes are measured off and the non-halting part continues
/// unnormalised.
pub fn run_mmqfa(a: &Mmqfa, w: &Word) -> Result<HaltingDistribution<f64>, SimError> {
    check_word(&a.alphabet, w)?;
    let n = a.partition.len();
    let mut psi = vec![Complex64::zero(); n];
    let mut next = vec![Complex64::zero(); n];
    let mut marked = vec![false; n];
    let mut live = vec![a.partition.initial()];
    let mut touched = Vec::new();
    psi[a.partition.initial()] = Complex64::new(1.0, 0.0);
    let (mut p_acc, mut p_rej) = (0.0, 0.0);
    for sym in tape(&a.alphabet, w) {
        let u = &a.transitions[sym];
        for &q in &live {
            let amp = std::mem::take(&mut psi[q]);
            for (to, x) in u.column(q) {
                if !marked[*to] {
                    marked[*to] = true;
                    touched.push(*to);
                }
                next[*to] += x * amp;
            }
        }
        live.clear();
        for &t in &touched {
            marked[t] = false;
            let amp = std::mem::take(&mut next[t]);
            match a.partition.role(t) {
                Role::Non => {
                    if !amp.is_zero() {
                        psi[t] = amp;
                        live.push(t);
                    }
                }
                Role::Acc => p_acc += amp.norm_sqr(),
                Role::Rej => p_rej += amp.norm_sqr(),
            }
        }
        touched.clear();
    }
    drained(HaltingDistribution {
        live: live.iter().map(|&q| (q, psi[q].norm_sqr())).collect(),
        p_acc,
        p_rej,
    })
}

/// Sparse scaled mixed state of an [`MmBqfa`] run together with the halting
/// probability measured so far.
#[derive(Clone, Debug)]
pub struct BqfaRun<'a> {
    automaton: &'a MmBqfa,
    rho: BTreeMap<(usize, usize), Complex64>,
    pub p_acc: f64,
    pub p_rej: f64,
}

impl<'a> BqfaRun<'a> {
    pub fn new(automaton: &'a MmBqfa) -> Self {
        let q0 = automaton.partition.initial();
        let mut rho = BTreeMap::new();
        rho.insert((q0, q0), Complex64::new(1.0, 0.0));
        BqfaRun {
            automaton,
            rho,
            p_acc: 0.0,
            p_rej: 0.0,
        }
    }

    /// `rho <- Phi_sym(rho)`.
    pub fn apply(&mut self, sym: usize) {
        let mut out: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for v in &self.automaton.kraus[sym] {
            for (&(i, j), x) in &self.rho {
                for (a, va) in v.column(i) {
                    let left = va * x;
                    for (b, vb) in v.column(j) {
                        *out.entry((*a, *b)).or_insert_with(Complex64::zero) += left * vb.conj();
                    }
                }
            }
        }
        out.retain(|_, x| !x.is_zero());
        self.rho = out;
    }

    /// Moves `Tr(P_acc rho P_acc)` and `Tr(P_rej rho P_rej)` into the
    /// accumulators and keeps `P_non rho P_non`.
    pub fn measure(&mut self) {
        let partition = &self.automaton.partition;
        for (&(i, j), x) in &self.rho {
            if i == j {
                match partition.role(i) {
                    Role::Acc => self.p_acc += x.re,
                    Role::Rej => self.p_rej += x.re,
                    Role::Non => {}
                }
            }
        }
        self.rho
            .retain(|&(i, j), _| partition.role(i) == Role::Non && partition.role(j) == Role::Non);
    }

    pub fn step(&mut self, sym: usize) {
        self.apply(sym);
        self.measure();
    }

    pub fn trace(&self) -> f64 {
        self.rho.iter().filter(|((i, j), _)| i == j).map(|(_, x)| x.re).sum()
    }

    pub fn diagonal(&self) -> BTreeMap<usize, f64> {
        self.rho
            .iter()
            .filter(|((i, j), _)| i == j)
            .map(|(&(i, _), x)| (i, x.re))
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.rho.len()
    }
}

/// Measure-many run of an [`MmBqfa`] on `# w $`.
pub fn run_mmbqfa(a: &MmBqfa, w: &Word) -> Result<HaltingDistribution<f64>, SimError> {
    check_word(&a.alphabet, w)?;
    let mut run = BqfaRun::new(a);
    for sym in tape(&a.alphabet, w) {
        run.step(sym);
    }
    drained(HaltingDistribution {
        live: run.diagonal(),
        p_acc: run.p_acc,
        p_rej: run.p_rej,
    })
}

/// Measure-once run: the channels of `# w $` are applied without
/// intermediate measurement and `Tr(P_acc rho P_acc)` is returned.
pub fn run_mobqfa(a: &MmBqfa, w: &Word) -> Result<f64, SimError> {
    check_word(&a.alphabet, w)?;
    let mut run = BqfaRun::new(a);
    for sym in tape(&a.alphabet, w) {
        run.apply(sym);
    }
    run.measure();
    Ok(run.p_acc)
}

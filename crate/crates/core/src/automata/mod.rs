//! Decide-and-halt automata models and the constructions that realise a
//! consistent inequality system.
//!
//! All models share a [`StatePartition`] and store one column-sparse matrix
//! (or Kraus family) per symbol, indexed by [`Alphabet`] letter with the begin
//! marker `#` at index 0 and the end marker `$` last.

mod birkhoff;
mod bounds;
mod build;
mod json;
mod layout;

pub use birkhoff::{birkhoff, lift_to_bqfa, BirkhoffDecomposition, BirkhoffError};
pub use bounds::{
    certify_n, component_probabilities, composite_bounds, dhpra_bounds, mmqfa_gap_floor, mmqfa_scaled_bounds,
    Certificate, ModelKind,
};
pub use build::{
    alpha, build_composite, build_dhpra, build_dhpra_component, build_level_automaton, build_mmqfa,
    build_mmqfa_component, dft_matrix, dhpra_state_count, h_matrix, mmqfa_exponent, mmqfa_state_count, BuildError,
    Solution,
};
pub use json::Automaton;

use std::collections::HashMap;

use num_complex::Complex64;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::band::{Alphabet, Letter, Word, BEGIN_MARKER, END_MARKER};
use crate::error::InputError;
use crate::rational::Rational;
use crate::sparse::{SparseMatrix, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Non,
    Acc,
    Rej,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Non => "non",
            Role::Acc => "acc",
            Role::Rej => "rej",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "non" => Some(Role::Non),
            "acc" => Some(Role::Acc),
            "rej" => Some(Role::Rej),
            _ => None,
        }
    }

    pub fn is_halting(self) -> bool {
        self != Role::Non
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub id: String,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatePartition {
    states: Vec<State>,
    initial: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("initial state {0} is not non-halting")]
    HaltingInitial(String),
    #[error("duplicate state id {0}")]
    DuplicateState(String),
    #[error("expected {expected} transition tables, found {found}")]
    SymbolCount { expected: usize, found: usize },
    #[error("transition table for '{symbol}' has dimension {found}, expected {expected}")]
    Dimension {
        symbol: char,
        expected: usize,
        found: usize,
    },
    #[error("distribution out of state {state} on '{symbol}' sums to {sum}")]
    NotStochastic { state: String, symbol: char, sum: String },
    #[error("non-halting state {state} has no transition on '{symbol}'")]
    Undefined { state: String, symbol: char },
    #[error("matrix for '{0}' is not doubly stochastic")]
    NotDoublyStochastic(char),
    #[error("matrix for '{symbol}' is not unitary (defect {defect:e})")]
    NotUnitary { symbol: char, defect: f64 },
    #[error("channel for '{0}' is not bistochastic")]
    NotBistochastic(char),
    #[error("live mass {residual} remains after the end marker")]
    ResidualMass { residual: f64 },
    #[error(transparent)]
    Input(#[from] InputError),
}

impl StatePartition {
    pub fn new(states: Vec<State>, initial: usize) -> Result<Self, ModelError> {
        let mut seen = std::collections::HashSet::new();
        for s in &states {
            if !seen.insert(s.id.as_str()) {
                return Err(ModelError::DuplicateState(s.id.clone()));
            }
        }
        match states.get(initial) {
            Some(s) if s.role == Role::Non => Ok(StatePartition { states, initial }),
            Some(s) => Err(ModelError::HaltingInitial(s.id.clone())),
            None => Err(ModelError::HaltingInitial(format!("#{initial}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn role(&self, i: usize) -> Role {
        self.states[i].role
    }

    pub fn id(&self, i: usize) -> &str {
        &self.states[i].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s.id == id)
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(move |&i| self.states[i].role == role)
    }

    /// Swaps accepting and rejecting roles.
    pub fn complement(&self) -> Self {
        let states = self
            .states
            .iter()
            .map(|s| State {
                id: s.id.clone(),
                role: match s.role {
                    Role::Acc => Role::Rej,
                    Role::Rej => Role::Acc,
                    Role::Non => Role::Non,
                },
            })
            .collect();
        StatePartition {
            states,
            initial: self.initial,
        }
    }
}

/// Number of transition tables for an alphabet: `#`, the letters, `$`.
pub fn symbol_count(alphabet: &Alphabet) -> usize {
    alphabet.len() + 2
}

pub fn symbol_char(alphabet: &Alphabet, index: usize) -> char {
    if index == 0 {
        BEGIN_MARKER
    } else if index == alphabet.len() + 1 {
        END_MARKER
    } else {
        alphabet.letter((index - 1) as Letter)
    }
}

pub fn symbol_index(alphabet: &Alphabet, c: char) -> Option<usize> {
    match c {
        BEGIN_MARKER => Some(0),
        END_MARKER => Some(alphabet.len() + 1),
        _ => alphabet.index_of(c).map(|l| l as usize + 1),
    }
}

/// Symbol indices of `# w $`.
pub fn tape(alphabet: &Alphabet, w: &Word) -> Vec<usize> {
    let mut t = Vec::with_capacity(w.len() + 2);
    t.push(0);
    t.extend(w.letters().iter().map(|&l| l as usize + 1));
    t.push(alphabet.len() + 1);
    t
}

fn check_tables<T>(
    alphabet: &Alphabet,
    partition: &StatePartition,
    tables: &[SparseMatrix<T>],
) -> Result<(), ModelError>
where
    T: Clone + num_traits::Num,
{
    let expected = symbol_count(alphabet);
    if tables.len() != expected {
        return Err(ModelError::SymbolCount {
            expected,
            found: tables.len(),
        });
    }
    for (i, t) in tables.iter().enumerate() {
        if t.dim() != partition.len() {
            return Err(ModelError::Dimension {
                symbol: symbol_char(alphabet, i),
                expected: partition.len(),
                found: t.dim(),
            });
        }
    }
    Ok(())
}

/// Halting probabilistic automaton; halting states have no outgoing transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbAutomaton {
    pub alphabet: Alphabet,
    pub partition: StatePartition,
    pub transitions: Vec<SparseMatrix<Rational>>,
}

impl ProbAutomaton {
    pub fn new(
        alphabet: Alphabet,
        partition: StatePartition,
        mut transitions: Vec<SparseMatrix<Rational>>,
    ) -> Result<Self, ModelError> {
        check_tables(&alphabet, &partition, &transitions)?;
        for table in transitions.iter_mut() {
            for q in 0..partition.len() {
                if partition.role(q).is_halting() {
                    table.clear_column(q);
                }
            }
        }
        let a = ProbAutomaton {
            alphabet,
            partition,
            transitions,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (si, table) in self.transitions.iter().enumerate() {
            let symbol = symbol_char(&self.alphabet, si);
            for q in self.partition.with_role(Role::Non) {
                let col = table.column(q);
                if col.is_empty() {
                    return Err(ModelError::Undefined {
                        state: self.partition.id(q).to_string(),
                        symbol,
                    });
                }
                let sum = col.iter().fold(Rational::zero(), |acc, (_, v)| acc + v);
                let negative = col.iter().any(|(_, v)| *v < Rational::zero());
                if negative || !sum.is_one() {
                    return Err(ModelError::NotStochastic {
                        state: self.partition.id(q).to_string(),
                        symbol,
                        sum: crate::rational::format(&sum),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn complement(&self) -> Self {
        ProbAutomaton {
            partition: self.partition.complement(),
            ..self.clone()
        }
    }
}

/// Decide-and-halt probabilistic reversible automaton: every table is doubly stochastic.
#[derive(Clone, Debug, PartialEq)]
pub struct DhPra<T = Rational> {
    pub alphabet: Alphabet,
    pub partition: StatePartition,
    pub transitions: Vec<SparseMatrix<T>>,
}

impl<T: Weight> DhPra<T> {
    pub fn new(
        alphabet: Alphabet,
        partition: StatePartition,
        transitions: Vec<SparseMatrix<T>>,
    ) -> Result<Self, ModelError> {
        check_tables(&alphabet, &partition, &transitions)?;
        let d = DhPra {
            alphabet,
            partition,
            transitions,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (si, t) in self.transitions.iter().enumerate() {
            if !t.is_doubly_stochastic(1e-12) {
                return Err(ModelError::NotDoublyStochastic(symbol_char(&self.alphabet, si)));
            }
        }
        Ok(())
    }

    pub fn complement(&self) -> Self {
        DhPra {
            alphabet: self.alphabet.clone(),
            partition: self.partition.complement(),
            transitions: self.transitions.clone(),
        }
    }

    pub fn to_f64(&self) -> DhPra<f64> {
        DhPra {
            alphabet: self.alphabet.clone(),
            partition: self.partition.clone(),
            transitions: self.transitions.iter().map(|t| t.map(|v| v.to_f64())).collect(),
        }
    }
}

/// Measure-many quantum finite automaton with one unitary per symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Mmqfa {
    pub alphabet: Alphabet,
    pub partition: StatePartition,
    pub transitions: Vec<SparseMatrix<Complex64>>,
}

pub const UNITARY_TOL: f64 = 1e-12;

impl Mmqfa {
    pub fn new(
        alphabet: Alphabet,
        partition: StatePartition,
        transitions: Vec<SparseMatrix<Complex64>>,
    ) -> Result<Self, ModelError> {
        check_tables(&alphabet, &partition, &transitions)?;
        let a = Mmqfa {
            alphabet,
            partition,
            transitions,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (si, t) in self.transitions.iter().enumerate() {
            let defect = t.unitarity_defect();
            if defect > UNITARY_TOL {
                return Err(ModelError::NotUnitary {
                    symbol: symbol_char(&self.alphabet, si),
                    defect,
                });
            }
        }
        Ok(())
    }

    pub fn complement(&self) -> Self {
        Mmqfa {
            partition: self.partition.complement(),
            ..self.clone()
        }
    }

    /// The same automaton with each unitary viewed as a one-operator channel.
    pub fn to_bqfa(&self) -> MmBqfa {
        MmBqfa {
            alphabet: self.alphabet.clone(),
            partition: self.partition.clone(),
            kraus: self.transitions.iter().map(|u| vec![u.clone()]).collect(),
        }
    }
}

/// Measure-many bistochastic QFA: a Kraus family per symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct MmBqfa {
    pub alphabet: Alphabet,
    pub partition: StatePartition,
    pub kraus: Vec<Vec<SparseMatrix<Complex64>>>,
}

impl MmBqfa {
    pub fn new(
        alphabet: Alphabet,
        partition: StatePartition,
        kraus: Vec<Vec<SparseMatrix<Complex64>>>,
    ) -> Result<Self, ModelError> {
        let expected = symbol_count(&alphabet);
        if kraus.len() != expected {
            return Err(ModelError::SymbolCount {
                expected,
                found: kraus.len(),
            });
        }
        for (i, family) in kraus.iter().enumerate() {
            check_tables(&alphabet, &partition, family).or_else(|e| match e {
                ModelError::SymbolCount { .. } => Ok(()),
                other => Err(other),
            })?;
            if family.is_empty() {
                return Err(ModelError::NotBistochastic(symbol_char(&alphabet, i)));
            }
        }
        let a = MmBqfa {
            alphabet,
            partition,
            kraus,
        };
        a.validate()?;
        Ok(a)
    }

    /// Each channel satisfies `sum V*V = sum V V* = I` within `1e-10`.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (si, family) in self.kraus.iter().enumerate() {
            if !kraus_is_bistochastic(family, self.partition.len(), 1e-10) {
                return Err(ModelError::NotBistochastic(symbol_char(&self.alphabet, si)));
            }
        }
        Ok(())
    }

    pub fn complement(&self) -> Self {
        MmBqfa {
            partition: self.partition.complement(),
            ..self.clone()
        }
    }
}

fn kraus_is_bistochastic(family: &[SparseMatrix<Complex64>], dim: usize, tol: f64) -> bool {
    // sum_V (V*V)[j][k] = sum_V sum_t conj(V[t][j]) V[t][k], accumulated row by row.
    let gram_is_identity = |ops: &[SparseMatrix<Complex64>]| {
        let mut acc: HashMap<(usize, usize), Complex64> = HashMap::new();
        for v in ops {
            let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
            for (to, from, x) in v.entries() {
                rows[to].push((from, *x));
            }
            for row in &rows {
                for (j, a) in row {
                    for (k, b) in row {
                        *acc.entry((*j, *k)).or_insert_with(Complex64::zero) += a.conj() * b;
                    }
                }
            }
        }
        (0..dim).all(|i| acc.contains_key(&(i, i)))
            && acc.iter().all(|(&(j, k), v)| {
                let target = if j == k { Complex64::one() } else { Complex64::zero() };
                (*v - target).norm() <= tol
            })
    };
    let adjoints: Vec<SparseMatrix<Complex64>> = family.iter().map(|v| v.conj_transpose()).collect();
    gram_is_identity(family) && gram_is_identity(&adjoints)
}

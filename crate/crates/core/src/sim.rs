//! Decide-and-halt simulation of probabilistic automata and interval
//! recognition over word corpora.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use thiserror::Error;

use crate::automata::{tape, DhPra, ModelError, ProbAutomaton, Role, StatePartition};
use crate::band::{Alphabet, R1Language, Word};
use crate::error::InputError;
use crate::exec::Execution;
use crate::rational::Rational;
use crate::sparse::{SparseMatrix, Weight};

/// Live mass tolerated after `$` in floating-point runs.
pub const FLOAT_RESIDUAL_TOL: f64 = 1e-9;

/// Live mass per non-halting state plus the accumulated halting mass.
#[derive(Clone, Debug, PartialEq)]
pub struct HaltingDistribution<T> {
    pub live: BTreeMap<usize, T>,
    pub p_acc: T,
    pub p_rej: T,
}

impl<T: Weight> HaltingDistribution<T> {
    pub fn start(initial: usize) -> Self {
        let mut live = BTreeMap::new();
        live.insert(initial, T::one());
        HaltingDistribution {
            live,
            p_acc: T::zero(),
            p_rej: T::zero(),
        }
    }

    pub fn residual(&self) -> T {
        self.live.values().fold(T::zero(), |a, b| a + b.clone())
    }

    pub fn total(&self) -> T {
        self.residual() + self.p_acc.clone() + self.p_rej.clone()
    }

    pub fn to_json(&self, word: &str) -> Value {
        json!({
            "word": word,
            "p_acc": self.p_acc.to_json(),
            "p_rej": self.p_rej.to_json(),
            "residual": self.residual().to_json(),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("corpus of {count} words exceeds the cap of {cap}")]
    CorpusTooLarge { count: u128, cap: u128 },
}

pub(crate) fn check_word(alphabet: &Alphabet, w: &Word) -> Result<(), InputError> {
    match w.letters().iter().find(|&&l| l as usize >= alphabet.len()) {
        Some(&l) => Err(InputError::UnknownLetterIndex(l as usize)),
        None => Ok(()),
    }
}

/// One symbol: push live mass through `table`, then collect halting mass.
pub fn step<T: Weight>(
    partition: &StatePartition,
    table: &SparseMatrix<T>,
    dist: &mut HaltingDistribution<T>,
    symbol: char,
) -> Result<(), ModelError> {
    let mut next: BTreeMap<usize, T> = BTreeMap::new();
    for (q, p) in std::mem::take(&mut dist.live) {
        let col = table.column(q);
        if col.is_empty() {
            return Err(ModelError::Undefined {
                state: partition.id(q).to_string(),
                symbol,
            });
        }
        for (to, w) in col {
            let add = p.clone() * w.clone();
            match next.get_mut(to) {
                Some(v) => *v = v.clone() + add,
                None => {
                    next.insert(*to, add);
                }
            }
        }
    }
    for (q, p) in next {
        match partition.role(q) {
            Role::Non => {
                if !p.is_zero() {
                    dist.live.insert(q, p);
                }
            }
            Role::Acc => dist.p_acc = dist.p_acc.clone() + p,
            Role::Rej => dist.p_rej = dist.p_rej.clone() + p,
        }
    }
    Ok(())
}

fn run_tables<T: Weight>(
    alphabet: &Alphabet,
    partition: &StatePartition,
    tables: &[SparseMatrix<T>],
    w: &Word,
) -> Result<HaltingDistribution<T>, SimError> {
    check_word(alphabet, w)?;
    let mut dist = HaltingDistribution::start(partition.initial());
    for sym in tape(alphabet, w) {
        step(
            partition,
            &tables[sym],
            &mut dist,
            crate::automata::symbol_char(alphabet, sym),
        )?;
    }
    let residual = dist.residual();
    let drained = if T::is_exact() {
        residual.is_zero()
    } else {
        residual.to_f64().abs() < FLOAT_RESIDUAL_TOL
    };
    if !drained {
        return Err(ModelError::ResidualMass {
            residual: residual.to_f64(),
        }
        .into());
    }
    Ok(dist)
}

/// Exact run of a halting probabilistic automaton on `# w $`.
pub fn run_prob(a: &ProbAutomaton, w: &Word) -> Result<HaltingDistribution<Rational>, SimError> {
    run_tables(&a.alphabet, &a.partition, &a.transitions, w)
}

/// Run of a DH-PRA on `# w $`, exact or floating depending on `T`.
pub fn run_dhpra<T: Weight>(d: &DhPra<T>, w: &Word) -> Result<HaltingDistribution<T>, SimError> {
    run_tables(&d.alphabet, &d.partition, &d.transitions, w)
}

/// Default cap on corpus size.
pub const DEFAULT_CORPUS_CAP: u128 = 1_000_000;

/// Every word of length `0..=max_len`, refusing corpora above `cap` words.
pub fn corpus(alphabet: &Alphabet, max_len: usize, cap: u128) -> Result<Vec<Word>, SimError> {
    let n = alphabet.len() as u128;
    let mut count: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..=max_len {
        count = count.saturating_add(layer);
        layer = layer.saturating_mul(n);
    }
    if count > cap {
        return Err(SimError::CorpusTooLarge { count, cap });
    }
    Ok(crate::band::words_up_to(alphabet, max_len))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordOutcome<T> {
    pub word: Word,
    pub member: bool,
    pub p_acc: T,
}

/// Acceptance probabilities over a corpus and the interval they realise.
///
/// `p1` (sup over non-members) and `p2` (inf over members) are relative to
/// the tested words only.
#[derive(Clone, Debug, PartialEq)]
pub struct RecognitionReport<T> {
    pub outcomes: Vec<WordOutcome<T>>,
    pub p1: Option<T>,
    pub p2: Option<T>,
    pub recognized: bool,
    /// The corpus contains every band word, so for automata whose acceptance
    /// depends only on `tau(u)` the interval holds on all of `A*`.
    pub covers_band: bool,
}

impl<T: Weight> RecognitionReport<T> {
    pub fn gap(&self) -> Option<T> {
        match (&self.p1, &self.p2) {
            (Some(p1), Some(p2)) => Some(p2.clone() - p1.clone()),
            _ => None,
        }
    }

    pub fn to_json(&self, alphabet: &Alphabet, include_words: bool) -> Value {
        let opt = |v: &Option<T>| v.as_ref().map(|x| x.to_json()).unwrap_or(Value::Null);
        let mut out = json!({
            "words": self.outcomes.len(),
            "p1": opt(&self.p1),
            "p2": opt(&self.p2),
            "gap": opt(&self.gap()),
            "recognized": self.recognized,
            "corpus_relative": true,
            "covers_band": self.covers_band,
        });
        if include_words {
            out["table"] = Value::Array(
                self.outcomes
                    .iter()
                    .map(|o| {
                        json!({
                            "word": alphabet.render(o.word.letters()),
                            "member": o.member,
                            "p_acc": o.p_acc.to_json(),
                        })
                    })
                    .collect(),
            );
        }
        out
    }
}

/// Runs `accept` on every word (in parallel when `exec` allows) and reports
/// the realised interval for `language`.
pub fn verify_recognition<T, E, F>(
    language: &R1Language,
    words: &[Word],
    exec: Execution,
    accept: F,
) -> Result<RecognitionReport<T>, E>
where
    T: Weight,
    E: Send,
    F: Fn(&Word) -> Result<T, E> + Sync + Send,
    E: From<InputError>,
{
    let results = exec.map(words, |w| -> Result<WordOutcome<T>, E> {
        let member = language.member(w)?;
        Ok(WordOutcome {
            word: w.clone(),
            member,
            p_acc: accept(w)?,
        })
    });
    let outcomes: Vec<WordOutcome<T>> = results.into_iter().collect::<Result<_, E>>()?;
    let mut p1: Option<T> = None;
    let mut p2: Option<T> = None;
    for o in &outcomes {
        if o.member {
            if p2.as_ref().is_none_or(|x| o.p_acc < *x) {
                p2 = Some(o.p_acc.clone());
            }
        } else if p1.as_ref().is_none_or(|x| o.p_acc > *x) {
            p1 = Some(o.p_acc.clone());
        }
    }
    let recognized = match (&p1, &p2) {
        (Some(a), Some(b)) => a < b,
        _ => true,
    };
    let max_len = words.iter().map(Word::len).max().unwrap_or(0);
    Ok(RecognitionReport {
        outcomes,
        p1,
        p2,
        recognized,
        covers_band: max_len >= language.alphabet().len(),
    })
}

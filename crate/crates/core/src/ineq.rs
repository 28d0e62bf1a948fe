//! The linear inequality system attached to an R1 language.
//!
//! Each band word `v = a1..ak` contributes the expression
//! `X0 + X({}, a1) + X({a1}, a2) + ... + X({a1..a(k-1)}, ak) + Y({a1..ak})`,
//! bounded below by `P2` when `v` is accepted and above by `P1` otherwise.
//! The system closes with the strict constraint `P1 < P2`.
//!
//! Variables are keyed by letter sets rather than by representative words:
//! two prefix steps share an `X` variable exactly when the letter sets before
//! and after the step agree, and two words share a `Y` variable exactly when
//! they have the same letter set.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::band::{enumerate_band, Alphabet, BandWord, Letter, LetterSet, R1Language, MAX_LETTERS};
use crate::error::InputError;
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    X0,
    /// A step reading `letter` after a prefix with letter set `prefix`.
    X {
        prefix: LetterSet,
        letter: Letter,
    },
    /// The end-marker step from a word with this letter set.
    Y(LetterSet),
    P1,
    P2,
}

impl VarKey {
    /// Text form used by the JSON formats: `x0`, `x:{b}|a`, `y:{a,b}`, `p1`, `p2`.
    pub fn name(&self, alphabet: &Alphabet) -> String {
        match self {
            VarKey::X0 => "x0".into(),
            VarKey::X { prefix, letter } => {
                format!("x:{}|{}", alphabet.render_set(*prefix), alphabet.letter(*letter))
            }
            VarKey::Y(s) => format!("y:{}", alphabet.render_set(*s)),
            VarKey::P1 => "p1".into(),
            VarKey::P2 => "p2".into(),
        }
    }

    pub fn parse(s: &str, alphabet: &Alphabet) -> Result<VarKey, InputError> {
        let bad = || InputError::BadVariable(s.to_string());
        match s {
            "x0" => return Ok(VarKey::X0),
            "p1" => return Ok(VarKey::P1),
            "p2" => return Ok(VarKey::P2),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("x:") {
            let (set, letter) = rest.rsplit_once('|').ok_or_else(bad)?;
            let prefix = alphabet.parse_set(set)?;
            let mut chars = letter.chars();
            let c = chars.next().ok_or_else(bad)?;
            if chars.next().is_some() {
                return Err(bad());
            }
            let letter = alphabet.index_of(c).ok_or(InputError::UnknownSymbol(c))?;
            if prefix.contains(letter) {
                return Err(bad());
            }
            return Ok(VarKey::X { prefix, letter });
        }
        if let Some(rest) = s.strip_prefix("y:") {
            return Ok(VarKey::Y(alphabet.parse_set(rest)?));
        }
        Err(bad())
    }
}

/// A linear form with exact rational coefficients; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinExpr {
    terms: BTreeMap<VarKey, Rational>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(key: VarKey) -> Self {
        let mut e = Self::new();
        e.add_term(key, Rational::one());
        e
    }

    pub fn add_term(&mut self, key: VarKey, coeff: Rational) {
        let entry = self.terms.entry(key).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn plus(mut self, other: &LinExpr) -> LinExpr {
        for (k, c) in &other.terms {
            self.add_term(*k, c.clone());
        }
        self
    }

    pub fn minus(mut self, other: &LinExpr) -> LinExpr {
        for (k, c) in &other.terms {
            self.add_term(*k, -c.clone());
        }
        self
    }

    pub fn terms(&self) -> &BTreeMap<VarKey, Rational> {
        &self.terms
    }

    pub fn coeff(&self, key: &VarKey) -> Rational {
        self.terms.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluates with missing variables read as zero.
    pub fn eval(&self, assignment: &BTreeMap<VarKey, Rational>) -> Rational {
        let mut acc = Rational::zero();
        for (k, c) in &self.terms {
            if let Some(v) = assignment.get(k) {
                acc += c * v;
            }
        }
        acc
    }

    pub fn to_json(&self, alphabet: &Alphabet) -> Value {
        let mut m = Map::new();
        for (k, c) in &self.terms {
            m.insert(k.name(alphabet), Value::String(rational::format(c)));
        }
        Value::Object(m)
    }

    pub fn from_json(v: &Value, alphabet: &Alphabet) -> Result<Self, InputError> {
        let obj = v
            .as_object()
            .ok_or_else(|| InputError::Json("expected object".into()))?;
        let mut e = LinExpr::new();
        for (name, c) in obj {
            let c = c
                .as_str()
                .ok_or_else(|| InputError::Json("expected rational string".into()))?;
            e.add_term(VarKey::parse(name, alphabet)?, rational::parse(c)?);
        }
        Ok(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Ge,
    Le,
    Lt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Lt => "<",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            ">=" => Some(Relation::Ge),
            "<=" => Some(Relation::Le),
            "<" => Some(Relation::Lt),
            _ => None,
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Ge => lhs >= rhs,
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub lhs: LinExpr,
    pub rel: Relation,
    pub rhs: LinExpr,
}

impl Constraint {
    pub fn holds(&self, assignment: &BTreeMap<VarKey, Rational>) -> bool {
        self.rel.holds(&self.lhs.eval(assignment), &self.rhs.eval(assignment))
    }
}

/// The expression attached to a band word.
pub fn expression_for(v: &BandWord) -> LinExpr {
    let mut e = LinExpr::var(VarKey::X0);
    let mut prefix = LetterSet::EMPTY;
    for &letter in v.letters() {
        e.add_term(VarKey::X { prefix, letter }, Rational::one());
        prefix = prefix.with(letter);
    }
    e.add_term(VarKey::Y(prefix), Rational::one());
    e
}

/// All variables of the system for an alphabet of `n` letters, in canonical order.
pub fn all_variables(n: usize) -> Vec<VarKey> {
    let subsets = LetterSet::all_subsets(n);
    let mut vars = vec![VarKey::X0];
    for &prefix in &subsets {
        for letter in 0..n as Letter {
            if !prefix.contains(letter) {
                vars.push(VarKey::X { prefix, letter });
            }
        }
    }
    vars.extend(subsets.iter().map(|&s| VarKey::Y(s)));
    vars.push(VarKey::P1);
    vars.push(VarKey::P2);
    vars
}

#[derive(Clone, Debug)]
pub struct InequalitySystem {
    language: R1Language,
    variables: Vec<VarKey>,
    /// One constraint per band word (same order as `words`), then `P1 < P2`.
    constraints: Vec<Constraint>,
    words: Vec<BandWord>,
}

impl InequalitySystem {
    pub fn build(language: &R1Language) -> Result<Self, InputError> {
        let alphabet = language.alphabet();
        let words = enumerate_band(alphabet, MAX_LETTERS)?;
        let mut constraints = Vec::with_capacity(words.len() + 1);
        for v in &words {
            let lhs = expression_for(v);
            let (rel, rhs) = if language.contains_band(v) {
                (Relation::Ge, VarKey::P2)
            } else {
                (Relation::Le, VarKey::P1)
            };
            constraints.push(Constraint {
                lhs,
                rel,
                rhs: LinExpr::var(rhs),
            });
        }
        constraints.push(Constraint {
            lhs: LinExpr::var(VarKey::P1),
            rel: Relation::Lt,
            rhs: LinExpr::var(VarKey::P2),
        });
        Ok(InequalitySystem {
            language: language.clone(),
            variables: all_variables(alphabet.len()),
            constraints,
            words,
        })
    }

    pub fn language(&self) -> &R1Language {
        &self.language
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.language.alphabet()
    }

    pub fn variables(&self) -> &[VarKey] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// The band word behind constraint `i`, or `None` for the strict constraint.
    pub fn word_of(&self, i: usize) -> Option<&BandWord> {
        self.words.get(i)
    }

    pub fn words(&self) -> &[BandWord] {
        &self.words
    }

    /// Maximal number of variables in one expression, `|A| + 2`.
    pub fn max_terms(&self) -> usize {
        self.alphabet().len() + 2
    }

    pub fn validate_assignment(&self, assignment: &BTreeMap<VarKey, Rational>) -> ValidationReport {
        let missing: Vec<VarKey> = self
            .variables
            .iter()
            .filter(|k| !assignment.contains_key(k))
            .copied()
            .collect();
        let checks: Vec<ConstraintCheck> = self
            .constraints
            .iter()
            .enumerate()
            .map(|(index, c)| {
                let lhs = c.lhs.eval(assignment);
                let rhs = c.rhs.eval(assignment);
                ConstraintCheck {
                    index,
                    satisfied: c.rel.holds(&lhs, &rhs),
                    lhs,
                    rhs,
                }
            })
            .collect();
        ValidationReport {
            all_satisfied: checks.iter().all(|c| c.satisfied),
            checks,
            missing,
        }
    }

    pub fn to_json(&self) -> Value {
        let alphabet = self.alphabet();
        let constraints: Vec<Value> = self
            .constraints
            .iter()
            .map(|c| {
                json!({
                    "lhs": c.lhs.to_json(alphabet),
                    "rel": c.rel.symbol(),
                    "rhs": c.rhs.to_json(alphabet),
                })
            })
            .collect();
        json!({
            "language": self.language.to_json_value(),
            "variables": self.variables.iter().map(|k| k.name(alphabet)).collect::<Vec<_>>(),
            "constraints": constraints,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintCheck {
    pub index: usize,
    pub lhs: Rational,
    pub rhs: Rational,
    pub satisfied: bool,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<ConstraintCheck>,
    /// Variables the assignment did not mention; they were read as zero.
    pub missing: Vec<VarKey>,
    pub all_satisfied: bool,
}

impl ValidationReport {
    pub fn violated(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }
}

/// Parses an assignment object `{"x:{}|a": "1/2", ...}`.
pub fn assignment_from_json(v: &Value, alphabet: &Alphabet) -> Result<BTreeMap<VarKey, Rational>, InputError> {
    let obj = v
        .as_object()
        .ok_or_else(|| InputError::Json("expected object".into()))?;
    obj.iter()
        .map(|(k, c)| {
            let c = c
                .as_str()
                .ok_or_else(|| InputError::Json("expected rational string".into()))?;
            Ok((VarKey::parse(k, alphabet)?, rational::parse(c)?))
        })
        .collect()
}

pub fn assignment_to_json(a: &BTreeMap<VarKey, Rational>, alphabet: &Alphabet) -> Value {
    let mut m = Map::new();
    for (k, v) in a {
        m.insert(k.name(alphabet), Value::String(rational::format(v)));
    }
    Value::Object(m)
}

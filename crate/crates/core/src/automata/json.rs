//! JSON files for all automaton models.
//!
//! Probabilistic automata store, per symbol, a distribution for every
//! source state keyed by state id. Matrix models store `[row, col, value]`
//! triples over state indices, with rationals as `"num/den"` and complex
//! numbers as `[re, im]`.

use serde_json::{json, Map, Value};

use num_complex::Complex64;

use crate::band::Alphabet;
use crate::error::InputError;
use crate::rational::{self, Rational};
use crate::sparse::SparseMatrix;

use super::{
    symbol_char, symbol_count, DhPra, MmBqfa, Mmqfa, ModelError, ModelKind, ProbAutomaton, Role, State, StatePartition,
};

#[derive(Clone, Debug, PartialEq)]
pub enum Automaton {
    Prob(ProbAutomaton),
    DhPra(DhPra<Rational>),
    MmQfa(Mmqfa),
    MmBqfa(MmBqfa),
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Input(InputError::Json(msg.into()))
}

fn complex_json(z: &Complex64) -> Value {
    json!([z.re, z.im])
}

fn complex_from(v: &Value) -> Result<Complex64, ModelError> {
    match v {
        Value::Number(x) => Ok(Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(bad("complex entry must be [re, im]")),
        },
        _ => Err(bad("complex entry must be [re, im]")),
    }
}

fn rational_from(v: &Value) -> Result<Rational, ModelError> {
    match v {
        Value::String(s) => Ok(rational::parse(s)?),
        Value::Number(n) if n.is_i64() => Ok(rational::int(n.as_i64().unwrap_or(0))),
        _ => Err(bad("rational entry must be a \"num/den\" string")),
    }
}

fn triples<T>(m: &SparseMatrix<T>, entry: impl Fn(&T) -> Value) -> Value
where
    T: Clone + num_traits::Num,
{
    let mut rows: Vec<(usize, usize, Value)> = m.entries().map(|(to, from, v)| (to, from, entry(v))).collect();
    rows.sort_by_key(|(to, from, _)| (*from, *to));
    Value::Array(rows.into_iter().map(|(to, from, v)| json!([to, from, v])).collect())
}

fn triples_from<T>(
    v: &Value,
    dim: usize,
    entry: impl Fn(&Value) -> Result<T, ModelError>,
) -> Result<SparseMatrix<T>, ModelError>
where
    T: Clone + num_traits::Num,
{
    let list = v
        .as_array()
        .ok_or_else(|| bad("matrix must be a list of [row, col, value]"))?;
    let mut m = SparseMatrix::zeros(dim);
    for t in list {
        let t = t
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| bad("matrix entry must be [row, col, value]"))?;
        let idx = |x: &Value| {
            x.as_u64()
                .map(|i| i as usize)
                .filter(|&i| i < dim)
                .ok_or_else(|| bad(format!("state index {x} out of range")))
        };
        m.set(idx(&t[0])?, idx(&t[1])?, entry(&t[2])?);
    }
    Ok(m)
}

impl Automaton {
    pub fn kind(&self) -> ModelKind {
        match self {
            Automaton::Prob(_) => ModelKind::Prob,
            Automaton::DhPra(_) => ModelKind::DhPra,
            Automaton::MmQfa(_) => ModelKind::MmQfa,
            Automaton::MmBqfa(_) => ModelKind::MmBqfa,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        match self {
            Automaton::Prob(a) => &a.alphabet,
            Automaton::DhPra(a) => &a.alphabet,
            Automaton::MmQfa(a) => &a.alphabet,
            Automaton::MmBqfa(a) => &a.alphabet,
        }
    }

    pub fn partition(&self) -> &StatePartition {
        match self {
            Automaton::Prob(a) => &a.partition,
            Automaton::DhPra(a) => &a.partition,
            Automaton::MmQfa(a) => &a.partition,
            Automaton::MmBqfa(a) => &a.partition,
        }
    }

    pub fn complement(&self) -> Automaton {
        match self {
            Automaton::Prob(a) => Automaton::Prob(a.complement()),
            Automaton::DhPra(a) => Automaton::DhPra(a.complement()),
            Automaton::MmQfa(a) => Automaton::MmQfa(a.complement()),
            Automaton::MmBqfa(a) => Automaton::MmBqfa(a.complement()),
        }
    }

    pub fn to_json(&self) -> Value {
        let alphabet = self.alphabet();
        let partition = self.partition();
        let symbols: Vec<String> = (0..symbol_count(alphabet))
            .map(|i| symbol_char(alphabet, i).to_string())
            .collect();
        let mut transitions = Map::new();
        match self {
            Automaton::Prob(a) => {
                for (s, t) in symbols.iter().zip(&a.transitions) {
                    let mut by_source = Map::new();
                    for from in 0..partition.len() {
                        if t.column(from).is_empty() {
                            continue;
                        }
                        let mut dist = Map::new();
                        for (to, v) in t.column(from) {
                            dist.insert(partition.id(*to).to_string(), json!(rational::format(v)));
                        }
                        by_source.insert(partition.id(from).to_string(), Value::Object(dist));
                    }
                    transitions.insert(s.clone(), Value::Object(by_source));
                }
            }
            Automaton::DhPra(a) => {
                for (s, t) in symbols.iter().zip(&a.transitions) {
                    transitions.insert(s.clone(), triples(t, |v| json!(rational::format(v))));
                }
            }
            Automaton::MmQfa(a) => {
                for (s, t) in symbols.iter().zip(&a.transitions) {
                    transitions.insert(s.clone(), triples(t, complex_json));
                }
            }
            Automaton::MmBqfa(a) => {
                for (s, family) in symbols.iter().zip(&a.kraus) {
                    transitions.insert(
                        s.clone(),
                        Value::Array(family.iter().map(|v| triples(v, complex_json)).collect()),
                    );
                }
            }
        }
        let key = if matches!(self, Automaton::MmBqfa(_)) {
            "kraus"
        } else {
            "transitions"
        };
        let mut out = Map::new();
        out.insert("model".into(), json!(self.kind().as_str()));
        out.insert(
            "alphabet".into(),
            json!(alphabet.letters().iter().map(|c| c.to_string()).collect::<Vec<_>>()),
        );
        out.insert(
            "states".into(),
            Value::Array(
                partition
                    .states()
                    .iter()
                    .map(|s| json!({"id": s.id, "role": s.role.as_str()}))
                    .collect(),
            ),
        );
        out.insert("initial".into(), json!(partition.id(partition.initial())));
        out.insert(key.into(), Value::Object(transitions));
        Value::Object(out)
    }

    pub fn from_json(text: &str) -> Result<Automaton, ModelError> {
        let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        Automaton::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Automaton, ModelError> {
        let model = v
            .get("model")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing \"model\""))?;
        let kind = ModelKind::parse(model).ok_or_else(|| bad(format!("unknown model {model:?}")))?;
        let letters = v
            .get("alphabet")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"alphabet\""))?;
        let mut chars = Vec::with_capacity(letters.len());
        for l in letters {
            let s = l.as_str().ok_or_else(|| bad("alphabet entries must be strings"))?;
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(InputError::NotSingleChar(s.to_string()).into()),
            }
        }
        let alphabet = Alphabet::new(chars)?;
        let states = v
            .get("states")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"states\""))?;
        let mut parsed = Vec::with_capacity(states.len());
        for s in states {
            let id = s
                .get("id")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("state needs an \"id\""))?;
            let role = s
                .get("role")
                .and_then(Value::as_str)
                .and_then(Role::parse)
                .ok_or_else(|| bad(format!("state {id} needs a role non|acc|rej")))?;
            parsed.push(State {
                id: id.to_string(),
                role,
            });
        }
        let initial = v
            .get("initial")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing \"initial\""))?;
        let initial = parsed
            .iter()
            .position(|s| s.id == initial)
            .ok_or_else(|| bad(format!("initial state {initial} is not listed")))?;
        let partition = StatePartition::new(parsed, initial)?;
        let dim = partition.len();
        let key = if kind == ModelKind::MmBqfa {
            "kraus"
        } else {
            "transitions"
        };
        let table = v
            .get(key)
            .and_then(Value::as_object)
            .ok_or_else(|| bad(format!("missing \"{key}\" object")))?;
        let per_symbol = |i: usize| {
            let c = symbol_char(&alphabet, i).to_string();
            table.get(&c).ok_or_else(|| bad(format!("no transitions for '{c}'")))
        };
        let n_sym = symbol_count(&alphabet);
        Ok(match kind {
            ModelKind::Prob => {
                let mut tables = Vec::with_capacity(n_sym);
                for i in 0..n_sym {
                    let obj = per_symbol(i)?
                        .as_object()
                        .ok_or_else(|| bad("prob transitions map source ids to distributions"))?;
                    let mut m = SparseMatrix::zeros(dim);
                    for (from, dist) in obj {
                        let f = partition
                            .index_of(from)
                            .ok_or_else(|| bad(format!("unknown state {from}")))?;
                        let dist = dist
                            .as_object()
                            .ok_or_else(|| bad("distribution must map target ids to rationals"))?;
                        for (to, p) in dist {
                            let t = partition
                                .index_of(to)
                                .ok_or_else(|| bad(format!("unknown state {to}")))?;
                            m.set(t, f, rational_from(p)?);
                        }
                    }
                    tables.push(m);
                }
                Automaton::Prob(ProbAutomaton::new(alphabet, partition, tables)?)
            }
            ModelKind::DhPra => {
                let tables = (0..n_sym)
                    .map(|i| triples_from(per_symbol(i)?, dim, rational_from))
                    .collect::<Result<Vec<_>, _>>()?;
                Automaton::DhPra(DhPra::new(alphabet, partition, tables)?)
            }
            ModelKind::MmQfa => {
                let tables = (0..n_sym)
                    .map(|i| triples_from(per_symbol(i)?, dim, complex_from))
                    .collect::<Result<Vec<_>, _>>()?;
                Automaton::MmQfa(Mmqfa::new(alphabet, partition, tables)?)
            }
            ModelKind::MmBqfa => {
                let mut kraus = Vec::with_capacity(n_sym);
                for i in 0..n_sym {
                    let ops = per_symbol(i)?
                        .as_array()
                        .ok_or_else(|| bad("kraus entry must be a list of matrices"))?;
                    kraus.push(
                        ops.iter()
                            .map(|op| triples_from(op, dim, complex_from))
                            .collect::<Result<Vec<_>, _>>()?,
                    );
                }
                Automaton::MmBqfa(MmBqfa::new(alphabet, partition, kraus)?)
            }
        })
    }
}

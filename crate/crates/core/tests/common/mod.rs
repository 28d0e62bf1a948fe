#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use r1qfa::band::{enumerate_band, Alphabet, BandWord, R1Language};
use r1qfa::ineq::{InequalitySystem, Relation, VarKey};
use r1qfa::Rational;

/// `sum coeffs * x  (< or <=)  bound`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Row {
    coeffs: BTreeMap<VarKey, Rational>,
    bound: Rational,
    strict: bool,
}

impl Row {
    fn normalized(mut self) -> Row {
        if let Some(scale) = self.coeffs.values().next().map(|c| c.abs()) {
            for c in self.coeffs.values_mut() {
                *c /= &scale;
            }
            self.bound /= scale;
        }
        self
    }
}

/// Feasibility of the raw system over the reals by Fourier-Motzkin
/// elimination with strictness tracking.
pub fn fm_feasible(sys: &InequalitySystem) -> bool {
    let mut rows: Vec<Row> = sys
        .constraints()
        .iter()
        .map(|c| {
            let (expr, strict) = match c.rel {
                Relation::Ge => (c.rhs.clone().minus(&c.lhs), false),
                Relation::Le => (c.lhs.clone().minus(&c.rhs), false),
                Relation::Lt => (c.lhs.clone().minus(&c.rhs), true),
            };
            let coeffs = expr
                .terms()
                .iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|(k, v)| (*k, v.clone()))
                .collect();
            Row {
                coeffs,
                bound: Rational::zero(),
                strict,
            }
            .normalized()
        })
        .collect();
    loop {
        let vars: BTreeSet<VarKey> = rows.iter().flat_map(|r| r.coeffs.keys().copied()).collect();
        let Some(&var) = vars.iter().min_by_key(|v| {
            let pos = rows
                .iter()
                .filter(|r| r.coeffs.get(v).is_some_and(|c| c.is_positive()))
                .count();
            let neg = rows
                .iter()
                .filter(|r| r.coeffs.get(v).is_some_and(|c| c.is_negative()))
                .count();
            pos * neg
        }) else {
            break;
        };
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            match r.coeffs.get(&var) {
                Some(c) if c.is_positive() => pos.push(r),
                Some(_) => neg.push(r),
                None => rest.push(r),
            }
        }
        for p in &pos {
            for n in &neg {
                let (cp, cn) = (p.coeffs[&var].abs(), n.coeffs[&var].abs());
                let mut coeffs: BTreeMap<VarKey, Rational> = BTreeMap::new();
                for (k, v) in &p.coeffs {
                    *coeffs.entry(*k).or_insert_with(Rational::zero) += v / &cp;
                }
                for (k, v) in &n.coeffs {
                    *coeffs.entry(*k).or_insert_with(Rational::zero) += v / &cn;
                }
                coeffs.retain(|_, v| !v.is_zero());
                rest.push(
                    Row {
                        coeffs,
                        bound: &p.bound / &cp + &n.bound / &cn,
                        strict: p.strict || n.strict,
                    }
                    .normalized(),
                );
            }
        }
        // Keep only the tightest row per coefficient vector.
        let mut best: BTreeMap<BTreeMap<VarKey, Rational>, (Rational, bool)> = BTreeMap::new();
        for r in rest {
            let e = best.entry(r.coeffs).or_insert((r.bound.clone(), r.strict));
            if r.bound < e.0 || (r.bound == e.0 && r.strict) {
                *e = (r.bound, r.strict);
            }
        }
        rows = best
            .into_iter()
            .map(|(coeffs, (bound, strict))| Row { coeffs, bound, strict })
            .collect();
    }
    rows.iter().all(|r| {
        if r.strict {
            r.bound.is_positive()
        } else {
            !r.bound.is_negative()
        }
    })
}

/// Every R1 language over `alphabet`, indexed by subsets of the band.
pub fn all_languages(alphabet: &Alphabet) -> Vec<R1Language> {
    let band: Vec<BandWord> = enumerate_band(alphabet, 8).unwrap();
    (0u64..1 << band.len())
        .map(|mask| {
            let accept = band
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, v)| v.clone())
                .collect();
            R1Language::new(alphabet.clone(), accept).unwrap()
        })
        .collect()
}

pub fn five_letter_language() -> R1Language {
    R1Language::parse(
        "abcde",
        &["aedbc", "beca", "beda", "bedac", "eacb", "eacbd", "eadbc", "ebca"],
    )
    .unwrap()
}

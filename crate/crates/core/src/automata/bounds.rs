//! Closed-form bounds relating the simulations to the level automata, and the
//! smallest replication parameter they certify.

use num_traits::{One, Zero};

use crate::band::{enumerate_band, BandWord, LetterSet, R1Language, MAX_LETTERS};
use crate::rational::{self, Rational};

use super::build::{alpha, mmqfa_exponent, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Prob,
    DhPra,
    MmQfa,
    MmBqfa,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Prob => "prob",
            ModelKind::DhPra => "dh-pra",
            ModelKind::MmQfa => "mm-qfa",
            ModelKind::MmBqfa => "mm-bqfa",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "prob" => Some(ModelKind::Prob),
            "dh-pra" => Some(ModelKind::DhPra),
            "mm-qfa" => Some(ModelKind::MmQfa),
            "mm-bqfa" => Some(ModelKind::MmBqfa),
            _ => None,
        }
    }
}

/// Acceptance probability of `v` in each level automaton `A_1 .. A_|A|`.
pub fn component_probabilities(sol: &Solution, v: &BandWord) -> Vec<Rational> {
    let n = sol.alphabet().len();
    let mut out = Vec::with_capacity(n);
    let mut prefix = LetterSet::EMPTY;
    for i in 1..=n {
        let p = if i <= v.len() {
            let a = v.letters()[i - 1];
            let p = sol.rate(prefix, a as usize + 1);
            prefix = prefix.with(a);
            p
        } else if i == v.len() + 1 {
            sol.rate(prefix, n + 1)
        } else {
            Rational::zero()
        };
        out.push(p);
    }
    out
}

fn power(r: &Rational, e: usize) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * r)
}

/// Bounds on `p_{w, S_{i,n}}` given `p = p_{w, A_i}` and `|omega(w)|`.
pub fn dhpra_bounds(p: &Rational, i: usize, n: usize, omega_len: usize) -> (Rational, Rational) {
    if omega_len + 1 < i {
        return (Rational::zero(), Rational::zero());
    }
    let rho = rational::ratio(n as i64, n as i64 + 1);
    let r = power(&rho, i - 1);
    let lo = &r * p;
    let hi = Rational::one() - &r * (Rational::one() - p);
    (lo, hi)
}

/// Bounds on `n^alpha(|A|-1) * p_{w, U_{i,n}}`.
pub fn mmqfa_scaled_bounds(
    p: &Rational,
    i: usize,
    n: usize,
    n_letters: usize,
    omega_len: usize,
) -> (Rational, Rational) {
    if omega_len + 1 < i {
        return (Rational::zero(), Rational::zero());
    }
    if i == 1 {
        return (p.clone(), p.clone());
    }
    let g = num_bigint::BigInt::from(n).pow(mmqfa_exponent(n_letters, i));
    let rho = Rational::new(g.clone(), g + 1);
    let r1 = power(&rho, i - 1);
    let r2 = &r1 * &r1;
    let lo = &r2 * p;
    let hi = &lo + &r1 - &r2;
    (lo, hi)
}

/// Composite bounds `(1/|A|) sum_i` of the per-component bounds.
pub fn composite_bounds(sol: &Solution, kind: ModelKind, v: &BandWord, n: usize) -> (Rational, Rational) {
    let k = sol.alphabet().len();
    let probs = component_probabilities(sol, v);
    let mut lo = Rational::zero();
    let mut hi = Rational::zero();
    for (idx, p) in probs.iter().enumerate() {
        let i = idx + 1;
        let (l, h) = match kind {
            ModelKind::MmQfa => mmqfa_scaled_bounds(p, i, n, k, v.len()),
            ModelKind::Prob => (p.clone(), p.clone()),
            ModelKind::DhPra | ModelKind::MmBqfa => dhpra_bounds(p, i, n, v.len()),
        };
        lo += l;
        hi += h;
    }
    let share = rational::ratio(1, k as i64);
    (lo * &share, hi * share)
}

/// `n^-alpha(|A|-1) * (p2 - p1) / 3`: the recognition gap the construction
/// guarantees once `n` is large enough.
pub fn mmqfa_gap_floor(sol: &Solution, n: usize) -> Rational {
    let z = (sol.p2() - sol.p1()) / rational::int(3);
    let a = alpha(sol.alphabet().len() as u64 - 1) as u32;
    let scale = num_bigint::BigInt::from(n).pow(a);
    z / Rational::from_integer(scale)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub n: usize,
    /// Smallest certified lower bound over accepted band words.
    pub member_lower: Option<Rational>,
    /// Largest certified upper bound over rejected band words.
    pub nonmember_upper: Option<Rational>,
}

/// Smallest `n` in `1, 2, 4, ...` (up to `max_n`) whose bounds separate the
/// language: every member's lower bound exceeds every non-member's upper
/// bound. Bounds depend only on `tau(w)`, so checking `F(A)` covers `A*`.
pub fn certify_n(sol: &Solution, language: &R1Language, kind: ModelKind, max_n: usize) -> Option<Certificate> {
    let words = enumerate_band(language.alphabet(), MAX_LETTERS).ok()?;
    let mut n = 1;
    while n <= max_n {
        let mut member_lower: Option<Rational> = None;
        let mut nonmember_upper: Option<Rational> = None;
        for v in &words {
            let (lo, hi) = composite_bounds(sol, kind, v, n);
            if language.contains_band(v) {
                if member_lower.as_ref().is_none_or(|m| lo < *m) {
                    member_lower = Some(lo);
                }
            } else if nonmember_upper.as_ref().is_none_or(|m| hi > *m) {
                nonmember_upper = Some(hi);
            }
        }
        let separated = match (&member_lower, &nonmember_upper) {
            (Some(lo), Some(hi)) => lo > hi,
            _ => true,
        };
        if separated {
            return Some(Certificate {
                n,
                member_lower,
                nonmember_upper,
            });
        }
        n *= 2;
    }
    None
}

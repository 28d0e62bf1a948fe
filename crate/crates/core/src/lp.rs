//! Exact rational linear programming: bounded-variable primal simplex with
//! Bland's rule, and the boxed maximisation of `p2 - p1` used to decide
//! whether an inequality system is consistent.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::band::{Alphabet, R1Language};
use crate::error::InputError;
use crate::ineq::{assignment_to_json, InequalitySystem, LinExpr, Relation, VarKey};
use crate::rational::{self, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("objective is unbounded")]
    Unbounded,
    #[error("strict constraints cannot be passed to the solver")]
    StrictConstraint,
    #[error("bounds of {0} are inverted")]
    InvertedBounds(String),
    #[error(transparent)]
    Input(#[from] InputError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpRel {
    Le,
    Ge,
    Eq,
}

/// `expr rel rhs`.
#[derive(Clone, Debug)]
pub struct LpConstraint {
    pub expr: LinExpr,
    pub rel: LpRel,
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub lo: Option<Rational>,
    pub hi: Option<Rational>,
}

impl Bounds {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        Bounds {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn fixed(v: Rational) -> Self {
        Bounds::new(v.clone(), v)
    }

    pub fn free() -> Self {
        Bounds { lo: None, hi: None }
    }
}

/// Maximise `objective` subject to `constraints` and per-variable `bounds`.
/// Variables that appear without an entry in `bounds` are free.
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub objective: LinExpr,
    pub constraints: Vec<LpConstraint>,
    pub bounds: BTreeMap<VarKey, Bounds>,
}

impl LpProblem {
    pub fn variables(&self) -> Vec<VarKey> {
        let mut vars: BTreeSet<VarKey> = self.bounds.keys().copied().collect();
        vars.extend(self.objective.terms().keys().copied());
        for c in &self.constraints {
            vars.extend(c.expr.terms().keys().copied());
        }
        vars.into_iter().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub optimum: Option<Rational>,
    pub assignment: BTreeMap<VarKey, Rational>,
    pub pivots: usize,
}

/// The boxed problem: maximise `p2 - p1` over the non-strict part of the
/// system, with `p1 <= p2`, `x0 = y(A) = 0`, other `x`/`y` in `[0, 1/|A|]`
/// and `p1, p2` in `[0, 1]`.
pub fn boxify(sys: &InequalitySystem) -> LpProblem {
    let n = sys.alphabet().len().max(1) as i64;
    let full = sys.alphabet().full_set();
    let cap = rational::ratio(1, n);
    let mut bounds = BTreeMap::new();
    for &v in sys.variables() {
        let b = match v {
            VarKey::X0 => Bounds::fixed(Rational::zero()),
            VarKey::Y(s) if s == full => Bounds::fixed(Rational::zero()),
            VarKey::X { .. } | VarKey::Y(_) => Bounds::new(Rational::zero(), cap.clone()),
            VarKey::P1 | VarKey::P2 => Bounds::new(Rational::zero(), Rational::one()),
        };
        bounds.insert(v, b);
    }
    let mut constraints = Vec::with_capacity(sys.constraints().len());
    for c in sys.constraints() {
        let expr = c.lhs.clone().minus(&c.rhs);
        let rel = match c.rel {
            Relation::Ge => LpRel::Ge,
            // p1 < p2 is relaxed to p1 <= p2; strictness is read off the optimum.
            Relation::Le | Relation::Lt => LpRel::Le,
        };
        constraints.push(LpConstraint {
            expr,
            rel,
            rhs: Rational::zero(),
        });
    }
    LpProblem {
        objective: LinExpr::var(VarKey::P2).minus(&LinExpr::var(VarKey::P1)),
        constraints,
        bounds,
    }
}

/// How an original variable is expressed through solver columns.
#[derive(Clone, Debug)]
enum Column {
    /// `x = offset + col`.
    Shift { col: usize, offset: Rational },
    /// `x = offset - col`.
    Mirror { col: usize, offset: Rational },
    /// `x = plus - minus`.
    Split { plus: usize, minus: usize },
}

struct Tableau {
    /// `rows[i]` is row `i` of `B^-1 A` over all columns.
    rows: Vec<Vec<Rational>>,
    /// Value of the basic variable of each row.
    beta: Vec<Rational>,
    basis: Vec<usize>,
    /// Upper bound of each column (all lower bounds are zero).
    upper: Vec<Option<Rational>>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    /// Columns that may not enter the basis.
    blocked: Vec<bool>,
    pivots: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.upper.len()
    }

    fn value_of_nonbasic(&self, j: usize) -> Rational {
        if self.at_upper[j] {
            self.upper[j].clone().expect("at upper implies finite bound")
        } else {
            Rational::zero()
        }
    }

    /// Reduced costs `c_j - c_B B^-1 A_j` for a maximisation objective.
    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut d = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in row.iter().enumerate() {
                if !a.is_zero() {
                    d[j] -= cb * a;
                }
            }
        }
        d
    }

    #[allow(clippy::needless_range_loop)]
    fn step(&mut self, d: &mut [Rational]) -> Step {
        // Bland: first improving column.
        let mut entering = None;
        for j in 0..self.ncols() {
            if self.is_basic[j] || self.blocked[j] || d[j].is_zero() {
                continue;
            }
            if self.upper[j].as_ref().is_some_and(|u| u.is_zero()) {
                continue;
            }
            let up = !self.at_upper[j] && d[j].is_positive();
            let down = self.at_upper[j] && d[j].is_negative();
            if up || down {
                entering = Some((j, up));
                break;
            }
        }
        let Some((q, increasing)) = entering else {
            return Step::Optimal;
        };

        // Ratio test. `delta_i` is the change of basic `i` per unit step.
        let mut best: Option<Rational> = self.upper[q].clone();
        let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
        for i in 0..self.rows.len() {
            let a = &self.rows[i][q];
            if a.is_zero() {
                continue;
            }
            let delta = if increasing { -a.clone() } else { a.clone() };
            let b = self.basis[i];
            let (limit, to_upper) = if delta.is_negative() {
                (&self.beta[i] / -delta, false)
            } else {
                match &self.upper[b] {
                    Some(u) => ((u - &self.beta[i]) / delta, true),
                    None => continue,
                }
            };
            let better = match &best {
                None => true,
                Some(t) => limit < *t || (limit == *t && leave.is_some_and(|(r, _)| self.basis[r] > b)),
            };
            if better {
                best = Some(limit);
                leave = Some((i, to_upper));
            }
        }
        let Some(theta) = best else {
            return Step::Unbounded;
        };

        let signed = if increasing { theta.clone() } else { -theta.clone() };
        if !signed.is_zero() {
            for i in 0..self.rows.len() {
                let a = &self.rows[i][q];
                if !a.is_zero() {
                    let change = a * &signed;
                    self.beta[i] -= change;
                }
            }
        }

        match leave {
            None => {
                self.at_upper[q] = increasing;
            }
            Some((r, to_upper)) => {
                let entering_value = if increasing {
                    theta
                } else {
                    self.upper[q].clone().unwrap() - theta
                };
                let old = self.basis[r];
                self.pivot(r, q, d);
                self.beta[r] = entering_value;
                self.is_basic[old] = false;
                self.at_upper[old] = to_upper;
                self.is_basic[q] = true;
                self.at_upper[q] = false;
            }
        }
        Step::Moved
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [Rational]) {
        self.pivots += 1;
        let p = self.rows[r][q].clone();
        if !p.is_one() {
            for a in self.rows[r].iter_mut() {
                if !a.is_zero() {
                    *a /= &p;
                }
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let support: Vec<usize> = (0..pivot_row.len()).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[q].is_zero() {
                continue;
            }
            let f = row[q].clone();
            for &j in &support {
                let t = &f * &pivot_row[j];
                row[j] -= t;
            }
        }
        if !d[q].is_zero() {
            let f = d[q].clone();
            for &j in &support {
                let t = &f * &pivot_row[j];
                d[j] -= t;
            }
        }
        self.rows[r] = pivot_row;
        self.basis[r] = q;
    }

    fn run(&mut self, cost: &[Rational]) -> Result<(), LpError> {
        let mut d = self.reduced_costs(cost);
        loop {
            match self.step(&mut d) {
                Step::Optimal => return Ok(()),
                Step::Unbounded => return Err(LpError::Unbounded),
                Step::Moved => {}
            }
        }
    }

    fn column_values(&self) -> Vec<Rational> {
        let mut x: Vec<Rational> = (0..self.ncols()).map(|j| self.value_of_nonbasic(j)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.beta[i].clone();
        }
        x
    }
}

/// Solves `p` exactly. Returns `Infeasible` status rather than an error when
/// no point satisfies the constraints.
pub fn solve(p: &LpProblem) -> Result<LpOutcome, LpError> {
    let vars = p.variables();
    let zero = Rational::zero();

    // Map each variable to non-negative columns.
    let mut columns = Vec::with_capacity(vars.len());
    let mut upper: Vec<Option<Rational>> = Vec::new();
    for v in &vars {
        let b = p.bounds.get(v).cloned().unwrap_or_else(Bounds::free);
        if let (Some(lo), Some(hi)) = (&b.lo, &b.hi) {
            if lo > hi {
                return Err(LpError::InvertedBounds(format!("{v:?}")));
            }
        }
        let col = upper.len();
        let c = match (b.lo, b.hi) {
            (Some(lo), hi) => {
                upper.push(hi.map(|h| h - &lo));
                Column::Shift { col, offset: lo }
            }
            (None, Some(hi)) => {
                upper.push(None);
                Column::Mirror { col, offset: hi }
            }
            (None, None) => {
                upper.push(None);
                upper.push(None);
                Column::Split {
                    plus: col,
                    minus: col + 1,
                }
            }
        };
        columns.push(c);
    }
    let index: BTreeMap<VarKey, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let nstruct = upper.len();

    // Rows over structural columns with shifted right-hand sides.
    let mut rows: Vec<(BTreeMap<usize, Rational>, LpRel, Rational)> = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let mut coeffs: BTreeMap<usize, Rational> = BTreeMap::new();
        let mut rhs = c.rhs.clone();
        for (k, a) in c.expr.terms() {
            match &columns[index[k]] {
                Column::Shift { col, offset } => {
                    rhs -= a * offset;
                    *coeffs.entry(*col).or_insert_with(Rational::zero) += a;
                }
                Column::Mirror { col, offset } => {
                    rhs -= a * offset;
                    *coeffs.entry(*col).or_insert_with(Rational::zero) -= a;
                }
                Column::Split { plus, minus } => {
                    *coeffs.entry(*plus).or_insert_with(Rational::zero) += a;
                    *coeffs.entry(*minus).or_insert_with(Rational::zero) -= a;
                }
            }
        }
        coeffs.retain(|_, a| !a.is_zero());
        let (rel, rhs) = if rhs.is_negative() {
            for a in coeffs.values_mut() {
                *a = -a.clone();
            }
            let rel = match c.rel {
                LpRel::Le => LpRel::Ge,
                LpRel::Ge => LpRel::Le,
                LpRel::Eq => LpRel::Eq,
            };
            (rel, -rhs)
        } else {
            (c.rel, rhs)
        };
        rows.push((coeffs, rel, rhs));
    }

    // Slack/surplus columns, then artificials for rows without a unit slack.
    let m = rows.len();
    let mut slack_of = vec![None; m];
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        if *rel != LpRel::Eq {
            slack_of[i] = Some(upper.len());
            upper.push(None);
        }
    }
    let mut artificial_of = vec![None; m];
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        if *rel != LpRel::Le {
            artificial_of[i] = Some(upper.len());
            upper.push(None);
        }
    }
    let ncols = upper.len();
    let mut t = Tableau {
        rows: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        at_upper: vec![false; ncols],
        is_basic: vec![false; ncols],
        blocked: vec![false; ncols],
        upper,
        pivots: 0,
    };
    for (i, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
        let mut row = vec![zero.clone(); ncols];
        for (j, a) in coeffs {
            row[j] = a;
        }
        if let Some(s) = slack_of[i] {
            row[s] = if rel == LpRel::Le {
                Rational::one()
            } else {
                -Rational::one()
            };
        }
        let basic = match artificial_of[i] {
            Some(a) => {
                row[a] = Rational::one();
                a
            }
            None => slack_of[i].unwrap(),
        };
        t.is_basic[basic] = true;
        t.basis.push(basic);
        t.beta.push(rhs);
        t.rows.push(row);
    }

    let artificials: Vec<usize> = artificial_of.iter().flatten().copied().collect();
    if !artificials.is_empty() {
        let mut cost = vec![zero.clone(); ncols];
        for &a in &artificials {
            cost[a] = -Rational::one();
        }
        t.run(&cost)?;
        let infeasible = t
            .basis
            .iter()
            .zip(&t.beta)
            .any(|(b, v)| artificials.contains(b) && !v.is_zero());
        if infeasible {
            return Ok(LpOutcome {
                status: LpStatus::Infeasible,
                optimum: None,
                assignment: BTreeMap::new(),
                pivots: t.pivots,
            });
        }
        for &a in &artificials {
            t.blocked[a] = true;
        }
        // Drive zero-valued artificials out of the basis where possible.
        for r in 0..m {
            if !artificials.contains(&t.basis[r]) {
                continue;
            }
            if let Some(q) = (0..ncols).find(|&j| !t.is_basic[j] && !t.blocked[j] && !t.rows[r][j].is_zero()) {
                let old = t.basis[r];
                let mut dummy = vec![zero.clone(); ncols];
                let entering_value = t.value_of_nonbasic(q);
                t.pivot(r, q, &mut dummy);
                t.beta[r] = entering_value;
                t.is_basic[old] = false;
                t.is_basic[q] = true;
                t.at_upper[q] = false;
            }
        }
    }

    let mut cost = vec![zero.clone(); ncols];
    let mut constant = Rational::zero();
    for (k, c) in p.objective.terms() {
        match &columns[index[k]] {
            Column::Shift { col, offset } => {
                cost[*col] += c;
                constant += c * offset;
            }
            Column::Mirror { col, offset } => {
                cost[*col] -= c;
                constant += c * offset;
            }
            Column::Split { plus, minus } => {
                cost[*plus] += c;
                cost[*minus] -= c;
            }
        }
    }
    t.run(&cost)?;

    let x = t.column_values();
    let mut assignment = BTreeMap::new();
    let mut optimum = constant;
    for (j, c) in cost.iter().enumerate().take(nstruct) {
        if !c.is_zero() {
            optimum += c * &x[j];
        }
    }
    for (v, c) in vars.iter().zip(&columns) {
        let value = match c {
            Column::Shift { col, offset } => offset + &x[*col],
            Column::Mirror { col, offset } => offset - &x[*col],
            Column::Split { plus, minus } => &x[*plus] - &x[*minus],
        };
        assignment.insert(*v, value);
    }
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        optimum: Some(optimum),
        assignment,
        pivots: t.pivots,
    })
}

/// Checks an outcome against every constraint and bound with exact arithmetic.
pub fn check_outcome(p: &LpProblem, out: &LpOutcome) -> bool {
    if out.status != LpStatus::Optimal {
        return true;
    }
    let constraints_hold = p.constraints.iter().all(|c| {
        let v = c.expr.eval(&out.assignment);
        match c.rel {
            LpRel::Le => v <= c.rhs,
            LpRel::Ge => v >= c.rhs,
            LpRel::Eq => v == c.rhs,
        }
    });
    let bounds_hold = p.bounds.iter().all(|(k, b)| {
        let v = out.assignment.get(k).cloned().unwrap_or_else(Rational::zero);
        b.lo.as_ref().is_none_or(|lo| v >= *lo) && b.hi.as_ref().is_none_or(|hi| v <= *hi)
    });
    let objective_matches = out.optimum.as_ref() == Some(&p.objective.eval(&out.assignment));
    constraints_hold && bounds_hold && objective_matches
}

#[derive(Clone, Debug)]
pub struct Consistency {
    pub consistent: bool,
    /// Optimal `p2 - p1` of the boxed problem.
    pub gap: Rational,
    pub witness: BTreeMap<VarKey, Rational>,
    pub pivots: usize,
}

impl Consistency {
    pub fn p1(&self) -> Rational {
        self.witness.get(&VarKey::P1).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn p2(&self) -> Rational {
        self.witness.get(&VarKey::P2).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn to_json(&self, alphabet: &Alphabet) -> Value {
        json!({
            "status": "optimal",
            "consistent": self.consistent,
            "optimum": rational::format(&self.gap),
            "assignment": assignment_to_json(&self.witness, alphabet),
        })
    }
}

pub fn decide_system(sys: &InequalitySystem) -> Result<Consistency, LpError> {
    let problem = boxify(sys);
    let out = solve(&problem)?;
    // The origin satisfies every boxed constraint, so the problem is feasible.
    let gap = out.optimum.clone().expect("boxed problems are feasible");
    Ok(Consistency {
        consistent: gap.is_positive(),
        gap,
        witness: out.assignment,
        pivots: out.pivots,
    })
}

/// Consistent iff the boxed optimum of `p2 - p1` is positive.
pub fn decide_consistency(l: &R1Language) -> Result<Consistency, LpError> {
    decide_system(&InequalitySystem::build(l)?)
}

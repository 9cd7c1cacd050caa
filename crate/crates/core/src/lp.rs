//! A small dense linear-program solver: two-phase simplex with Bland's
//! rule, run either on exact rationals or on `f64` with a fixed tolerance.
//! The pivot rule is deterministic, so identical models give identical
//! solutions.

use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One sparse constraint row; variable indices must be unique.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarBound {
    /// `x >= 0` (the default).
    NonNegative,
    /// `x >= lb`.
    LowerBound(Rational),
    Free,
}

/// A minimization problem over sparse rows.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub num_vars: usize,
    pub bounds: Vec<VarBound>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, Rational)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("model is infeasible")]
    Infeasible,
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone)]
pub struct LpSolution<S: Scalar> {
    pub values: Vec<S>,
    pub objective: S,
}

impl LpModel {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            bounds: vec![VarBound::NonNegative; num_vars],
            constraints: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Residual check of a candidate point: max violation over all rows.
    pub fn max_violation<S: Scalar>(&self, values: &[S]) -> S {
        let mut worst = S::zero();
        for c in &self.constraints {
            let lhs = c
                .coeffs
                .iter()
                .fold(S::zero(), |acc, (j, a)| acc + S::from_rat(a) * values[*j].clone());
            let rhs = S::from_rat(&c.rhs);
            let violation = match c.relation {
                Relation::Le => lhs - rhs,
                Relation::Ge => rhs - lhs,
                Relation::Eq => (lhs - rhs).abs(),
            };
            if violation > worst {
                worst = violation;
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            let lb = match b {
                VarBound::NonNegative => S::zero(),
                VarBound::LowerBound(lb) => S::from_rat(lb),
                VarBound::Free => continue,
            };
            let violation = lb - values[j].clone();
            if violation > worst {
                worst = violation;
            }
        }
        worst
    }

    pub fn objective_value<S: Scalar>(&self, values: &[S]) -> S {
        self.objective
            .iter()
            .fold(S::zero(), |acc, (j, c)| acc + S::from_rat(c) * values[*j].clone())
    }

    /// Writes the model in the CPLEX LP text format for cross-checking with
    /// external solvers. `names[j]` labels variable `j`.
    pub fn to_lp_format(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.num_vars);
        let term = |out: &mut String, coeff: &Rational, name: &str| {
            if coeff.is_negative() {
                let _ = write!(out, " - {} {}", format_coeff(&-coeff.clone()), name);
            } else {
                let _ = write!(out, " + {} {}", format_coeff(coeff), name);
            }
        };
        let mut out = String::from("Minimize\n obj:");
        if self.objective.is_empty() {
            out.push_str(" 0 ");
            out.push_str(names.first().map(String::as_str).unwrap_or("x0"));
        }
        for (j, c) in &self.objective {
            term(&mut out, c, &names[*j]);
        }
        out.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{}:", i);
            if c.coeffs.is_empty() {
                let _ = write!(out, " 0 {}", names.first().map(String::as_str).unwrap_or("x0"));
            }
            for (j, a) in &c.coeffs {
                term(&mut out, a, &names[*j]);
            }
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, " {} {}", rel, format_coeff(&c.rhs));
        }
        out.push_str("Bounds\n");
        for (j, b) in self.bounds.iter().enumerate() {
            match b {
                VarBound::NonNegative => {}
                VarBound::LowerBound(lb) => {
                    let _ = writeln!(out, " {} >= {}", names[j], format_coeff(lb));
                }
                VarBound::Free => {
                    let _ = writeln!(out, " {} free", names[j]);
                }
            }
        }
        out.push_str("End\n");
        out
    }
}

fn format_coeff(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        // LP format has no fractions; emit enough decimals to round-trip
        // typical coefficients and keep the dump human-readable.
        let f = num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN);
        format!("{f:.12}")
    }
}

/// A caller-supplied starting basis, one entry per constraint row.
///
/// `Variable(j)` puts model variable `j` into the basis for that row;
/// `Slack` keeps the row's own slack basic; `Redundant` drops a row that is
/// linearly implied by the others (the final feasibility check still covers
/// it). If the seed turns out unusable the solver falls back to the
/// ordinary two-phase method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisSeed {
    Variable(usize),
    Slack,
    Redundant,
}

/// Solves `min c.x` over the model's rows and bounds.
pub fn minimize<S: Scalar>(model: &LpModel) -> Result<LpSolution<S>, LpError> {
    let mut tableau = Tableau::build(model)?;
    tableau.phase_one()?;
    let p1 = tableau.pivots;
    tableau.phase_two()?;
    if std::env::var("LP_DEBUG").is_ok() {
        eprintln!("lp: {} rows x {} cols, phase1 {} pivots, phase2 {} pivots",
            tableau.rows.len(), tableau.ncols, p1, tableau.pivots - p1);
    }
    finish(model, &tableau)
}

/// Solves starting from a known feasible basis, skipping phase one.
pub fn minimize_seeded<S: Scalar>(
    model: &LpModel,
    seed: &[BasisSeed],
) -> Result<LpSolution<S>, LpError> {
    match Tableau::build_seeded(model, seed) {
        Ok(Some(mut tableau)) => {
            tableau.phase_two()?;
            if std::env::var("LP_DEBUG").is_ok() {
                eprintln!(
                    "lp(seeded): {} rows x {} cols, {} pivots",
                    tableau.rows.len(),
                    tableau.ncols,
                    tableau.pivots
                );
            }
            finish(model, &tableau)
        }
        // Seed unusable; solve from scratch.
        Ok(None) => minimize(model),
        Err(e) => Err(e),
    }
}

fn finish<S: Scalar>(model: &LpModel, tableau: &Tableau<S>) -> Result<LpSolution<S>, LpError> {
    let values = tableau.extract(model);
    let objective = model.objective_value::<S>(&values);
    let residual = model.max_violation(&values);
    if S::EXACT {
        assert!(
            residual <= S::zero(),
            "exact simplex returned an infeasible point"
        );
    } else if residual > S::tol_zero() {
        return Err(LpError::Numerical(format!(
            "solution residual {residual:?} exceeds tolerance"
        )));
    }
    Ok(LpSolution { values, objective })
}

/// Column bookkeeping for one model variable.
#[derive(Debug, Clone)]
enum ColMap<S> {
    /// `x = col + shift`.
    Shifted { col: usize, shift: S },
    /// `x = plus - minus`.
    Split { plus: usize, minus: usize },
}

struct Tableau<S: Scalar> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    /// Phase-2 reduced-cost row and its negated objective value.
    cost: Vec<S>,
    cost_val: S,
    /// Phase-1 reduced-cost row while artificials may be basic.
    art_cost: Vec<S>,
    art_cost_val: S,
    ncols: usize,
    first_artificial: usize,
    col_map: Vec<ColMap<S>>,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn build(model: &LpModel) -> Result<Self, LpError> {
        let mut col_map = Vec::with_capacity(model.num_vars);
        let mut ncols = 0usize;
        for bound in &model.bounds {
            match bound {
                VarBound::NonNegative => {
                    col_map.push(ColMap::Shifted { col: ncols, shift: S::zero() });
                    ncols += 1;
                }
                VarBound::LowerBound(lb) => {
                    col_map.push(ColMap::Shifted { col: ncols, shift: S::from_rat(lb) });
                    ncols += 1;
                }
                VarBound::Free => {
                    col_map.push(ColMap::Split { plus: ncols, minus: ncols + 1 });
                    ncols += 2;
                }
            }
        }
        let nstruct = ncols;

        // Dense structural rows with shifted rhs; empty rows are checked and
        // dropped here.
        let mut dense_rows: Vec<(Vec<S>, Relation, S)> = Vec::new();
        for c in &model.constraints {
            let mut row = vec![S::zero(); nstruct];
            let mut rhs = S::from_rat(&c.rhs);
            for (j, a) in &c.coeffs {
                let a = S::from_rat(a);
                match &col_map[*j] {
                    ColMap::Shifted { col, shift } => {
                        row[*col] = row[*col].clone() + a.clone();
                        rhs = rhs - a * shift.clone();
                    }
                    ColMap::Split { plus, minus } => {
                        row[*plus] = row[*plus].clone() + a.clone();
                        row[*minus] = row[*minus].clone() - a;
                    }
                }
            }
            if row.iter().all(Zero::is_zero) {
                let ok = match c.relation {
                    Relation::Le => rhs >= -S::tol_zero(),
                    Relation::Ge => rhs <= S::tol_zero(),
                    Relation::Eq => rhs.is_zeroish(),
                };
                if !ok {
                    return Err(LpError::Infeasible);
                }
                continue;
            }
            dense_rows.push((row, c.relation, rhs));
        }

        // Normalize to rhs >= 0, then add slack and artificial columns.
        for (row, rel, rhs) in &mut dense_rows {
            if *rhs < S::zero() {
                for v in row.iter_mut() {
                    *v = -v.clone();
                }
                *rhs = -rhs.clone();
                *rel = flip(*rel);
            }
        }
        let m = dense_rows.len();
        let mut n_slack = 0usize;
        let mut n_art = 0usize;
        for (_, rel, _) in &dense_rows {
            match rel {
                Relation::Le | Relation::Ge => n_slack += 1,
                Relation::Eq => {}
            }
            if *rel != Relation::Le {
                n_art += 1;
            }
        }
        let first_slack = nstruct;
        let first_artificial = nstruct + n_slack;
        let total = first_artificial + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut rhs_col = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack_at = first_slack;
        let mut art_at = first_artificial;
        for (mut row, rel, rhs) in dense_rows {
            row.resize(total, S::zero());
            match rel {
                Relation::Le => {
                    row[slack_at] = S::one();
                    basis.push(slack_at);
                    slack_at += 1;
                }
                Relation::Ge => {
                    row[slack_at] = -S::one();
                    slack_at += 1;
                    row[art_at] = S::one();
                    basis.push(art_at);
                    art_at += 1;
                }
                Relation::Eq => {
                    row[art_at] = S::one();
                    basis.push(art_at);
                    art_at += 1;
                }
            }
            rows.push(row);
            rhs_col.push(rhs);
        }

        // Phase-2 reduced costs for the initial basis (slacks and
        // artificials have zero phase-2 cost, so no elimination is needed).
        let mut cost = vec![S::zero(); total];
        for (j, c) in &model.objective {
            let c = S::from_rat(c);
            match &col_map[*j] {
                ColMap::Shifted { col, .. } => cost[*col] = cost[*col].clone() + c,
                ColMap::Split { plus, minus } => {
                    cost[*plus] = cost[*plus].clone() + c.clone();
                    cost[*minus] = cost[*minus].clone() - c;
                }
            }
        }

        // Phase-1 reduced costs: minimize the sum of artificials, with the
        // artificial basics eliminated.
        let mut art_cost = vec![S::zero(); total];
        for a in first_artificial..total {
            art_cost[a] = S::one();
        }
        let mut art_cost_val = S::zero();
        for (i, b) in basis.iter().enumerate() {
            if *b >= first_artificial {
                for j in 0..total {
                    art_cost[j] = art_cost[j].clone() - rows[i][j].clone();
                }
                art_cost_val = art_cost_val - rhs_col[i].clone();
            }
        }

        Ok(Self {
            rows,
            rhs: rhs_col,
            basis,
            cost,
            cost_val: S::zero(),
            art_cost,
            art_cost_val,
            ncols: total,
            first_artificial,
            col_map,
            pivots: 0,
        })
    }

    fn pivot(&mut self, row: usize, col: usize) {
        // Take the pivot row out so the update loops can borrow it while
        // mutating the others.
        let mut prow = std::mem::take(&mut self.rows[row]);
        let pivot = prow[col].clone();
        debug_assert!(!pivot.is_zero());
        if !pivot.is_one() {
            for v in prow.iter_mut() {
                if !v.is_zero() {
                    v.div_assign_ref(&pivot);
                }
            }
            self.rhs[row].div_assign_ref(&pivot);
        }
        let nonzeros: Vec<usize> = prow
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(j, _)| j)
            .collect();
        let pivot_rhs = self.rhs[row].clone();

        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col].clone();
            if factor.is_zero() {
                continue;
            }
            let target = &mut self.rows[r];
            for &j in &nonzeros {
                target[j].sub_prod_assign(&factor, &prow[j]);
            }
            target[col] = S::zero();
            self.rhs[r].sub_prod_assign(&factor, &pivot_rhs);
        }
        for (target_row, target_val) in [
            (&mut self.cost, &mut self.cost_val),
            (&mut self.art_cost, &mut self.art_cost_val),
        ] {
            let factor = target_row[col].clone();
            if !factor.is_zero() {
                for &j in &nonzeros {
                    target_row[j].sub_prod_assign(&factor, &prow[j]);
                }
                target_row[col] = S::zero();
                target_val.sub_prod_assign(&factor, &pivot_rhs);
            }
        }
        self.rows[row] = prow;
        self.basis[row] = col;
    }

    /// Pivot selection: Dantzig's most-negative-reduced-cost rule for
    /// speed, falling back to Bland's rule (lowest eligible index) for as
    /// long as the iteration is stuck on degenerate pivots — Bland's rule
    /// cannot cycle, so the combination terminates. The leaving row always
    /// uses the Bland tie-break (lowest basic column among minimal ratios),
    /// keeping the whole rule deterministic.
    fn run_simplex(&mut self, phase_one: bool) -> Result<(), LpError> {
        let col_limit = if phase_one { self.ncols } else { self.first_artificial };
        const STALL_LIMIT: usize = 12;
        let mut degenerate_streak = 0usize;
        loop {
            let reduced = if phase_one { &self.art_cost } else { &self.cost };
            let entering = if degenerate_streak >= STALL_LIMIT {
                (0..col_limit).find(|&j| reduced[j] < -S::tol_zero())
            } else {
                let mut best: Option<(usize, &S)> = None;
                for (j, c) in reduced.iter().enumerate().take(col_limit) {
                    if *c < -S::tol_zero() && best.is_none_or(|(_, b)| *c < *b) {
                        best = Some((j, c));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, S)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if *a <= S::tol_zero() {
                    continue;
                }
                let ratio = self.rhs[r].clone() / a.clone();
                match &leave {
                    None => leave = Some((r, ratio)),
                    Some((best_r, best)) => {
                        if ratio < *best
                            || (ratio == *best && self.basis[r] < self.basis[*best_r])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
            match leave {
                Some((row, ratio)) => {
                    if ratio.is_zeroish() {
                        degenerate_streak += 1;
                    } else {
                        degenerate_streak = 0;
                    }
                    self.pivot(row, col);
                    self.pivots += 1;
                }
                None => {
                    return if phase_one {
                        Err(LpError::Numerical(
                            "phase one unbounded; basis is degenerate".into(),
                        ))
                    } else {
                        Err(LpError::Unbounded)
                    };
                }
            }
        }
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        if self.first_artificial == self.ncols {
            return Ok(());
        }
        self.run_simplex(true)?;
        // Objective value of phase 1 is -art_cost_val.
        let infeasibility = -self.art_cost_val.clone();
        if infeasibility > S::tol_zero() {
            return Err(LpError::Infeasible);
        }
        // Pivot remaining artificials out of the basis; fully zero rows are
        // redundant and dropped.
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.first_artificial {
                let col = (0..self.first_artificial)
                    .find(|&j| !self.rows[r][j].is_zeroish());
                match col {
                    Some(col) => self.pivot(r, col),
                    None => {
                        self.rows.remove(r);
                        self.rhs.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        Ok(())
    }

    fn phase_two(&mut self) -> Result<(), LpError> {
        self.run_simplex(false)
    }

    fn extract(&self, model: &LpModel) -> Vec<S> {
        let mut col_values = vec![S::zero(); self.ncols];
        for (r, b) in self.basis.iter().enumerate() {
            col_values[*b] = self.rhs[r].clone();
        }
        (0..model.num_vars)
            .map(|j| match &self.col_map[j] {
                ColMap::Shifted { col, shift } => col_values[*col].clone() + shift.clone(),
                ColMap::Split { plus, minus } => {
                    col_values[*plus].clone() - col_values[*minus].clone()
                }
            })
            .collect()
    }
}

fn flip(rel: Relation) -> Relation {
    match rel {
        Relation::Le => Relation::Ge,
        Relation::Ge => Relation::Le,
        Relation::Eq => Relation::Eq,
    }
}

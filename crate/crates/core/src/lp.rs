//! Dense bounded-variable primal simplex for box-bounded LPs.
//!
//! Every variable lives in a box `[lo, hi] ⊆ [0, 1]`; variables with
//! `lo == hi` are treated as constants and never enter the tableau.
//! Upper bounds are handled by complementing (`x = u - x'`), so all
//! nonbasic columns always sit at zero in the working coordinates.

use crate::error::{Error, Result};

/// Feasibility and optimality tolerance.
pub const FEAS_TOL: f64 = 1e-7;
/// Tolerance for comparing reported objective values.
pub const CMP_TOL: f64 = 1e-6;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn token(self) -> &'static str {
        match self {
            Sense::Le => "le",
            Sense::Eq => "eq",
            Sense::Ge => "ge",
        }
    }

    pub fn from_token(s: &str) -> Option<Sense> {
        match s {
            "le" => Some(Sense::Le),
            "eq" => Some(Sense::Eq),
            "ge" => Some(Sense::Ge),
            _ => None,
        }
    }

    /// Whether `lhs (sense) rhs` holds within `tol`.
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

/// One linear row `coeffs · x (sense) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        Constraint { coeffs, sense, rhs }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }
}

/// `maximize objective · x` subject to the constraints and per-variable boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// An LP with every variable in `[0, 1]`.
    pub fn new(objective: Vec<f64>, constraints: Vec<Constraint>) -> Self {
        let bounds = vec![(0.0, 1.0); objective.len()];
        LinearProgram { objective, constraints, bounds }
    }

    pub fn n(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.bounds.len() != n {
            return Err(Error::Dimension(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                n
            )));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::Dimension(format!(
                    "row {} has {} coefficients, expected {}",
                    r,
                    c.coeffs.len(),
                    n
                )));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::Range(format!("bounds [{lo}, {hi}] of variable {j}")));
            }
        }
        Ok(())
    }

    /// Whether `x` satisfies every row and box within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n()
            && self
                .bounds
                .iter()
                .zip(x)
                .all(|(&(lo, hi), &v)| v >= lo - tol && v <= hi + tol)
            && self
                .constraints
                .iter()
                .all(|c| c.sense.holds(c.lhs(x), c.rhs, tol))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Result of an LP solve. `x` is empty and `objective` is `-inf` when infeasible.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn infeasible() -> Self {
        LpSolution { status: LpStatus::Infeasible, x: Vec::new(), objective: f64::NEG_INFINITY }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Outcome of a budgeted solve.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSolve {
    /// Final iterate; `status` is `Optimal` whenever a feasible point was reached.
    pub solution: LpSolution,
    /// True when the final iterate is proven optimal.
    pub proven_optimal: bool,
    /// Phase II iterations performed (pivots and bound flips).
    pub pivots: usize,
}

/// Solves the LP to optimality.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let start = vec![false; lp.n()];
    Ok(run(lp, &start, None)?.solution)
}

/// Runs at most `max_pivots` Phase II iterations (`None` = unlimited).
///
/// Nonbasic variables start at whichever bound is nearer to `warm_start`;
/// a Phase I restoration runs first if that start is infeasible and is not
/// charged to the budget. The reported objective is `c · x` at the last iterate.
pub fn partial_solve(
    lp: &LinearProgram,
    warm_start: &[f64],
    max_pivots: Option<usize>,
) -> Result<PartialSolve> {
    if warm_start.len() != lp.n() {
        return Err(Error::Dimension(format!(
            "warm start has {} entries, expected {}",
            warm_start.len(),
            lp.n()
        )));
    }
    let start: Vec<bool> = lp
        .bounds
        .iter()
        .zip(warm_start)
        .map(|(&(lo, hi), &w)| w - lo > hi - w)
        .collect();
    run(lp, &start, max_pivots)
}

enum Outcome {
    Optimal,
    Budget,
}

struct Tableau {
    ncols: usize,
    t: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<Option<usize>>,
    upper: Vec<f64>,
    flipped: Vec<bool>,
    banned: Vec<bool>,
    d: Vec<f64>,
    z: f64,
    cost: Vec<f64>,
    cost_const: f64,
}

impl Tableau {
    fn complement(&mut self, k: usize) {
        let u = self.upper[k];
        for (row, bi) in self.t.iter_mut().zip(self.b.iter_mut()) {
            *bi -= row[k] * u;
            row[k] = -row[k];
        }
        if let Some(r) = self.row_of[k] {
            for v in self.t[r].iter_mut() {
                *v = -*v;
            }
            self.b[r] = -self.b[r];
        }
        self.z += self.d[k] * u;
        self.d[k] = -self.d[k];
        self.cost_const += self.cost[k] * u;
        self.cost[k] = -self.cost[k];
        self.flipped[k] = !self.flipped[k];
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        self.b[r] /= p;
        self.t[r][j] = 1.0;
        let (pivot_row, br) = (self.t[r].clone(), self.b[r]);
        for i in 0..self.t.len() {
            if i == r {
                continue;
            }
            let f = self.t[i][j];
            if f != 0.0 {
                for (v, pv) in self.t[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.t[i][j] = 0.0;
                self.b[i] -= f * br;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, pv) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.d[j] = 0.0;
            self.z += f * br;
        }
        let old = self.basis[r];
        self.row_of[old] = None;
        self.basis[r] = j;
        self.row_of[j] = Some(r);
    }

    fn set_costs(&mut self, costs: &[f64], konst: f64) {
        self.d = costs.to_vec();
        self.z = konst;
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = costs[bv];
            if cb != 0.0 {
                for (dj, tij) in self.d.iter_mut().zip(&self.t[i]) {
                    *dj -= cb * tij;
                }
                self.z += cb * self.b[i];
            }
        }
        for &bv in &self.basis {
            self.d[bv] = 0.0;
        }
    }

    fn iterate(
        &mut self,
        budget: Option<usize>,
        count: &mut usize,
        stop_at: Option<f64>,
    ) -> Result<Outcome> {
        loop {
            if let Some(th) = stop_at {
                if self.z >= th {
                    return Ok(Outcome::Optimal);
                }
            }
            let entering = (0..self.ncols).find(|&j| {
                self.row_of[j].is_none() && !self.banned[j] && self.d[j] > COST_TOL
            });
            let Some(j) = entering else {
                return Ok(Outcome::Optimal);
            };
            if let Some(cap) = budget {
                if *count >= cap {
                    return Ok(Outcome::Budget);
                }
            }
            *count += 1;

            let mut best = f64::INFINITY;
            let mut ratios = Vec::with_capacity(self.t.len());
            for (i, row) in self.t.iter().enumerate() {
                let a = row[j];
                let bv = self.basis[i];
                let r = if a > PIVOT_TOL {
                    Some((self.b[i].max(0.0) / a, false))
                } else if a < -PIVOT_TOL && self.upper[bv].is_finite() {
                    Some(((self.upper[bv] - self.b[i]).max(0.0) / -a, true))
                } else {
                    None
                };
                if let Some((ratio, _)) = r {
                    best = best.min(ratio);
                }
                ratios.push(r);
            }
            let uj = self.upper[j];
            if uj <= best {
                if !uj.is_finite() {
                    return Err(Error::Unbounded);
                }
                self.complement(j);
                continue;
            }
            let mut leave: Option<(usize, bool)> = None;
            for (i, r) in ratios.iter().enumerate() {
                if let Some((ratio, at_upper)) = *r {
                    if ratio <= best + RATIO_TIE
                        && leave.is_none_or(|(l, _)| self.basis[i] < self.basis[l])
                    {
                        leave = Some((i, at_upper));
                    }
                }
            }
            let (r, at_upper) = leave.expect("finite ratio implies a leaving row");
            if at_upper {
                self.complement(self.basis[r]);
            }
            self.pivot(r, j);
        }
    }
}

fn run(lp: &LinearProgram, start_upper: &[bool], budget: Option<usize>) -> Result<PartialSolve> {
    lp.validate()?;
    let n = lp.n();
    let free: Vec<usize> = (0..n).filter(|&j| lp.bounds[j].1 - lp.bounds[j].0 > 1e-12).collect();
    let k = free.len();
    let m = lp.constraints.len();

    let mut slack_col = vec![None; m];
    let mut ns = 0;
    for (r, c) in lp.constraints.iter().enumerate() {
        if c.sense != Sense::Eq {
            slack_col[r] = Some(k + ns);
            ns += 1;
        }
    }

    // Rows over structural + slack columns; artificials appended later.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut b: Vec<f64> = Vec::with_capacity(m);
    for (r, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![0.0; k + ns];
        for (col, &j) in free.iter().enumerate() {
            row[col] = c.coeffs[j];
        }
        if let Some(s) = slack_col[r] {
            row[s] = if c.sense == Sense::Le { 1.0 } else { -1.0 };
        }
        let shift: f64 = c.coeffs.iter().zip(&lp.bounds).map(|(a, &(lo, _))| a * lo).sum();
        rows.push(row);
        b.push(c.rhs - shift);
    }

    let mut cost = vec![0.0; k + ns];
    let mut flipped = vec![false; k + ns];
    let mut cost_const: f64 = lp.objective.iter().zip(&lp.bounds).map(|(c, &(lo, _))| c * lo).sum();
    let mut upper = vec![f64::INFINITY; k + ns];
    for (col, &j) in free.iter().enumerate() {
        let u = lp.bounds[j].1 - lp.bounds[j].0;
        upper[col] = u;
        cost[col] = lp.objective[j];
        if start_upper[j] {
            for (row, bi) in rows.iter_mut().zip(b.iter_mut()) {
                *bi -= row[col] * u;
                row[col] = -row[col];
            }
            cost_const += cost[col] * u;
            cost[col] = -cost[col];
            flipped[col] = true;
        }
    }
    for (row, bi) in rows.iter_mut().zip(b.iter_mut()) {
        if *bi < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            *bi = -*bi;
        }
    }

    let mut basis = vec![0; m];
    let mut art_rows = Vec::new();
    for r in 0..m {
        match slack_col[r] {
            Some(s) if rows[r][s] > 0.0 => basis[r] = s,
            _ => art_rows.push(r),
        }
    }
    let na = art_rows.len();
    let ncols = k + ns + na;
    for row in rows.iter_mut() {
        row.resize(ncols, 0.0);
    }
    for (a, &r) in art_rows.iter().enumerate() {
        rows[r][k + ns + a] = 1.0;
        basis[r] = k + ns + a;
    }
    cost.resize(ncols, 0.0);
    flipped.resize(ncols, false);
    upper.resize(ncols, f64::INFINITY);
    let mut row_of = vec![None; ncols];
    for (r, &bv) in basis.iter().enumerate() {
        row_of[bv] = Some(r);
    }

    let scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut tab = Tableau {
        ncols,
        t: rows,
        b,
        basis,
        row_of,
        upper,
        flipped,
        banned: vec![false; ncols],
        d: vec![0.0; ncols],
        z: 0.0,
        cost,
        cost_const,
    };

    let mut phase1_count = 0;
    if na > 0 {
        let mut p1 = vec![0.0; ncols];
        for a in 0..na {
            p1[k + ns + a] = -1.0;
        }
        tab.set_costs(&p1, 0.0);
        tab.iterate(None, &mut phase1_count, Some(-1e-12 * scale))?;
        if tab.z < -FEAS_TOL * scale {
            return Ok(PartialSolve {
                solution: LpSolution::infeasible(),
                proven_optimal: true,
                pivots: 0,
            });
        }
        for a in 0..na {
            let col = k + ns + a;
            tab.banned[col] = true;
            tab.upper[col] = 0.0;
            if let Some(r) = tab.row_of[col] {
                let repl = (0..k + ns)
                    .find(|&j| tab.row_of[j].is_none() && tab.t[r][j].abs() > PIVOT_TOL);
                if let Some(j) = repl {
                    tab.pivot(r, j);
                }
            }
        }
    }

    let costs = tab.cost.clone();
    tab.set_costs(&costs, tab.cost_const);
    let mut pivots = 0;
    let outcome = tab.iterate(budget, &mut pivots, None)?;

    let mut x: Vec<f64> = lp.bounds.iter().map(|&(lo, _)| lo).collect();
    for (col, &j) in free.iter().enumerate() {
        let v = tab.row_of[col].map_or(0.0, |r| tab.b[r]);
        let t = if tab.flipped[col] { tab.upper[col] - v } else { v };
        let (lo, hi) = lp.bounds[j];
        x[j] = (lo + t).clamp(lo, hi);
    }
    let objective = lp.value(&x);
    Ok(PartialSolve {
        solution: LpSolution { status: LpStatus::Optimal, x, objective },
        proven_optimal: matches!(outcome, Outcome::Optimal),
        pivots,
    })
}

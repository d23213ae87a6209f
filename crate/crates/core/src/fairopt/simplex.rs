//! Dense tableau simplex for small linear programs.
//!
//! Primal and dual pivoting both follow Bland's smallest-index rule, so runs
//! are deterministic and cannot cycle. The tableau can take extra `<=` rows
//! after an optimal solve and re-optimize with dual simplex, which is how the
//! fair benchmark adds envy constraints lazily.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("pivot limit reached")]
    IterationLimit,
}

/// `maximize objective . x  s.t.  constraints x <= bounds,  x >= lower`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub bounds: Vec<f64>,
    pub lower: Vec<f64>,
}

impl LinearProgram {
    /// Program over `vars` variables, all bounded below by zero.
    pub fn new(objective: Vec<f64>) -> Self {
        let vars = objective.len();
        Self { objective, constraints: Vec::new(), bounds: Vec::new(), lower: vec![0.0; vars] }
    }

    pub fn le(mut self, row: Vec<f64>, bound: f64) -> Self {
        self.constraints.push(row);
        self.bounds.push(bound);
        self
    }

    pub fn ge(self, row: Vec<f64>, bound: f64) -> Self {
        self.le(row.into_iter().map(|v| -v).collect(), -bound)
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.lower.len() != n {
            return Err(LpError::DimensionMismatch(format!("{} lower bounds for {n} variables", self.lower.len())));
        }
        if self.constraints.len() != self.bounds.len() {
            return Err(LpError::DimensionMismatch(format!(
                "{} constraint rows but {} bounds",
                self.constraints.len(),
                self.bounds.len()
            )));
        }
        if let Some(i) = self.constraints.iter().position(|r| r.len() != n) {
            return Err(LpError::DimensionMismatch(format!("row {i} has {} coefficients", self.constraints[i].len())));
        }
        let finite = self.objective.iter().chain(&self.bounds).chain(&self.lower).all(|v| v.is_finite())
            && self.constraints.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(LpError::NonFinite);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub point: Vec<f64>,
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let vars = lp.objective.len();
    // shift x = lower + z so that every variable is bounded below by zero
    let shifted: Vec<f64> = lp
        .constraints
        .iter()
        .zip(&lp.bounds)
        .map(|(row, b)| b - row.iter().zip(&lp.lower).map(|(a, l)| a * l).sum::<f64>())
        .collect();
    let offset: f64 = lp.objective.iter().zip(&lp.lower).map(|(c, l)| c * l).sum();

    let mut tab = if shifted.iter().all(|&b| b >= 0.0) {
        Tableau::new(&lp.objective, &lp.constraints, &shifted)
    } else {
        Tableau::two_phase(&lp.objective, &lp.constraints, &shifted)?
    };
    tab.optimize()?;
    let z = tab.primal(vars);
    let point = z.iter().zip(&lp.lower).map(|(z, l)| z + l).collect();
    Ok(LpSolution { value: tab.value() + offset, point })
}

/// Simplex tableau in maximization form with an explicit reduced-cost row.
#[derive(Clone, Debug)]
pub(crate) struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// `cost[j] < 0` means column `j` improves the objective.
    cost: Vec<f64>,
    value: f64,
    structural: usize,
}

impl Tableau {
    /// Slack-basis tableau for `max c.z, A z <= b, z >= 0` with `b >= 0`.
    pub(crate) fn new(objective: &[f64], a: &[Vec<f64>], b: &[f64]) -> Self {
        let structural = objective.len();
        let cols = structural + a.len();
        let rows = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut full = vec![0.0; cols];
                full[..structural].copy_from_slice(row);
                full[structural + i] = 1.0;
                full
            })
            .collect();
        let mut cost = vec![0.0; cols];
        for (c, v) in cost.iter_mut().zip(objective) {
            *c = -v;
        }
        Self {
            rows,
            rhs: b.to_vec(),
            basis: (structural..cols).collect(),
            cost,
            value: 0.0,
            structural,
        }
    }

    /// Phase one with artificial columns for rows whose bound is negative.
    fn two_phase(objective: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<Self, LpError> {
        let structural = objective.len();
        let m = a.len();
        let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
        let cols = structural + m + negative.len();
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let mut full = vec![0.0; cols];
            full[..structural].copy_from_slice(&a[i]);
            full[structural + i] = 1.0;
            let mut bound = b[i];
            if let Some(k) = negative.iter().position(|&j| j == i) {
                for v in full.iter_mut() {
                    *v = -*v;
                }
                bound = -bound;
                full[structural + m + k] = 1.0;
                basis.push(structural + m + k);
            } else {
                basis.push(structural + i);
            }
            rows.push(full);
            rhs.push(bound);
        }
        // phase-one objective: maximize minus the sum of artificials
        let mut cost = vec![0.0; cols];
        for k in 0..negative.len() {
            cost[structural + m + k] = 1.0;
        }
        let mut tab = Self { rows, rhs, basis, cost, value: 0.0, structural };
        for (r, &col) in tab.basis.clone().iter().enumerate() {
            if tab.cost[col] != 0.0 {
                let f = tab.cost[col];
                for (c, v) in tab.cost.iter_mut().zip(&tab.rows[r]) {
                    *c -= f * v;
                }
                tab.value -= f * tab.rhs[r];
            }
        }
        tab.optimize()?;
        if tab.value < -1e-9 {
            return Err(LpError::Infeasible);
        }

        let first_artificial = structural + m;
        // drive remaining artificials out of the basis
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= first_artificial {
                match (0..first_artificial).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL) {
                    Some(j) => tab.pivot(r, j),
                    None => {
                        tab.rows.remove(r);
                        tab.rhs.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for row in &mut tab.rows {
            row.truncate(first_artificial);
        }
        tab.cost = vec![0.0; first_artificial];
        for (c, v) in tab.cost.iter_mut().zip(objective) {
            *c = -v;
        }
        tab.value = 0.0;
        for r in 0..tab.rows.len() {
            let col = tab.basis[r];
            let f = tab.cost[col];
            if f != 0.0 {
                for (c, v) in tab.cost.iter_mut().zip(&tab.rows[r]) {
                    *c -= f * v;
                }
                tab.value -= f * tab.rhs[r];
            }
        }
        Ok(tab)
    }

    pub(crate) fn value(&self) -> f64 {
        self.value
    }

    /// Values of the first `vars` structural variables.
    pub(crate) fn primal(&self, vars: usize) -> Vec<f64> {
        let mut x = vec![0.0; vars];
        for (r, &col) in self.basis.iter().enumerate() {
            if col < vars {
                x[col] = self.rhs[r];
            }
        }
        x
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        self.rows[r][j] = 1.0;
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let pivot_rhs = self.rhs[r];
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[j] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.cost[j];
        if f != 0.0 {
            for (c, p) in self.cost.iter_mut().zip(&pivot_row) {
                *c -= f * p;
            }
            self.cost[j] = 0.0;
            self.value -= f * pivot_rhs;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = j;
    }

    /// Primal simplex from a primal-feasible basis.
    pub(crate) fn optimize(&mut self) -> Result<(), LpError> {
        for _ in 0..MAX_PIVOTS {
            let Some(j) = self.cost.iter().position(|&c| c < -COST_TOL) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[j];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[r].max(0.0) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bv)) => {
                            if ratio < bv - 1e-15 || (ratio <= bv + 1e-15 && self.basis[r] < self.basis[br]) {
                                Some((r, ratio))
                            } else {
                                Some((br, bv))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, j),
                None => return Err(LpError::Unbounded),
            }
        }
        Err(LpError::IterationLimit)
    }

    /// Appends `coeffs . z <= bound` over the structural variables.
    pub(crate) fn add_row(&mut self, coeffs: &[f64], bound: f64) {
        for row in &mut self.rows {
            row.push(0.0);
        }
        self.cost.push(0.0);
        let cols = self.cost.len();
        let mut row = vec![0.0; cols];
        row[..coeffs.len()].copy_from_slice(coeffs);
        row[cols - 1] = 1.0;
        let mut rhs = bound;
        for (r, &col) in self.basis.iter().enumerate() {
            let f = row[col];
            if f != 0.0 {
                for (v, b) in row.iter_mut().zip(&self.rows[r]) {
                    *v -= f * b;
                }
                row[col] = 0.0;
                rhs -= f * self.rhs[r];
            }
        }
        self.rows.push(row);
        self.rhs.push(rhs);
        self.basis.push(cols - 1);
    }

    /// Dual simplex from a dual-feasible basis.
    pub(crate) fn reoptimize(&mut self) -> Result<(), LpError> {
        for _ in 0..MAX_PIVOTS {
            let leaving = (0..self.rows.len())
                .filter(|&r| self.rhs[r] < -FEAS_TOL)
                .min_by_key(|&r| self.basis[r]);
            let Some(r) = leaving else {
                // dual phase done; a primal pass mops up any cost drift
                return self.optimize();
            };
            let row = &self.rows[r];
            let mut best: Option<(usize, f64)> = None;
            for (j, &a) in row.iter().enumerate() {
                if a < -PIVOT_TOL {
                    let ratio = self.cost[j].max(0.0) / -a;
                    if best.map_or(true, |(_, bv)| ratio < bv - 1e-15) {
                        best = Some((j, ratio));
                    }
                }
            }
            match best {
                Some((j, _)) => self.pivot(r, j),
                None => return Err(LpError::Infeasible),
            }
        }
        Err(LpError::IterationLimit)
    }

    #[allow(dead_code)]
    pub(crate) fn structural(&self) -> usize {
        self.structural
    }
}

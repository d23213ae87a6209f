//! Checks for sharing incentive (SI), envy-freeness (EF), Pareto optimality
//! (PO) and non-wastefulness, plus a grid search for profitable misreports.
//!
//! The misreport search is evidence only: it covers a finite grid of reports.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::model::{check_shape, utility, Allocation, DemandVector, Instance};

/// Smallest gain from a misreport that counts as a manipulation.
pub const GAIN_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiReport {
    pub pass: bool,
    pub worst_agent: usize,
    /// `1/n - u_worst`, clamped at zero.
    pub shortfall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Envy {
    pub envious: usize,
    pub envied: usize,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfReport {
    pub pass: bool,
    pub envy: Vec<Envy>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoReport {
    pub pass: bool,
    pub max_column_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonWastefulReport {
    pub pass: bool,
    pub worst_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub si: SiReport,
    pub ef: EfReport,
    /// Absent when the allocation is wasteful, since the test does not apply.
    pub po: Option<PoReport>,
    pub non_wasteful: NonWastefulReport,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.si.pass && self.ef.pass && self.non_wasteful.pass && self.po.as_ref().is_some_and(|p| p.pass)
    }
}

pub fn verify(allocation: &Allocation, instance: &Instance, eps: f64) -> Result<PropertyReport> {
    let non_wasteful = check_non_wasteful(allocation, instance, eps)?;
    let po = match check_po(allocation, instance, eps) {
        Ok(report) => Some(report),
        Err(Error::NotNonWasteful { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(PropertyReport {
        si: check_si(allocation, instance, eps)?,
        ef: check_ef(allocation, instance, eps)?,
        po,
        non_wasteful,
    })
}

pub fn check_si(allocation: &Allocation, instance: &Instance, eps: f64) -> Result<SiReport> {
    check_shape(instance, &allocation.matrix)?;
    let floor = 1.0 / instance.agents() as f64;
    let (worst_agent, worst) = (0..instance.agents())
        .map(|i| (i, utility(allocation.row(i), instance.demand(i).as_slice())))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(SiReport { pass: worst >= floor - eps, worst_agent, shortfall: (floor - worst).max(0.0) })
}

/// Compares every ordered pair; works for wasteful allocations too.
pub fn check_ef(allocation: &Allocation, instance: &Instance, eps: f64) -> Result<EfReport> {
    check_shape(instance, &allocation.matrix)?;
    let n = instance.agents();
    let mut envy = Vec::new();
    for i in 0..n {
        let d = instance.demand(i).as_slice();
        let own = utility(allocation.row(i), d);
        for j in (0..n).filter(|&j| j != i) {
            let magnitude = utility(allocation.row(j), d) - own;
            if magnitude > eps {
                envy.push(Envy { envious: i, envied: j, magnitude });
            }
        }
    }
    Ok(EfReport { pass: envy.is_empty(), envy })
}

/// Envy-freeness of a non-wasteful allocation given only the shares:
/// `y_i >= y_j * min_r d_jr / d_ir` for every pair.
pub fn ef_share_form(shares: &[f64], instance: &Instance, eps: f64) -> bool {
    let n = instance.agents();
    (0..n).all(|i| {
        let di = instance.demand(i).as_slice();
        (0..n).filter(|&j| j != i).all(|j| {
            let c = instance.demand(j).as_slice().iter().zip(di).map(|(a, b)| a / b).fold(f64::INFINITY, f64::min);
            shares[i] >= shares[j] * c - eps
        })
    })
}

/// For a non-wasteful allocation PO holds exactly when some resource is used up.
pub fn check_po(allocation: &Allocation, instance: &Instance, eps: f64) -> Result<PoReport> {
    let wasteful = check_non_wasteful(allocation, instance, eps)?;
    if !wasteful.pass {
        return Err(Error::NotNonWasteful { deviation: wasteful.worst_deviation });
    }
    let max_column_sum = allocation.column_sums().into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(PoReport { pass: max_column_sum >= 1.0 - eps, max_column_sum })
}

pub fn check_non_wasteful(allocation: &Allocation, instance: &Instance, eps: f64) -> Result<NonWastefulReport> {
    check_shape(instance, &allocation.matrix)?;
    if allocation.shares.len() != instance.agents() {
        return Err(Error::ShapeMismatch(format!(
            "{} shares for {} agents",
            allocation.shares.len(),
            instance.agents()
        )));
    }
    let worst_deviation = allocation.waste_deviation(instance);
    Ok(NonWastefulReport { pass: worst_deviation <= eps, worst_deviation })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManipulationFinding {
    pub agent: usize,
    pub report: Vec<f64>,
    pub truthful_utility: f64,
    pub manipulated_utility: f64,
    pub gain: f64,
}

/// Candidate misreports: every vector with one entry pinned at 1 and the
/// others on `{1/k, 2/k, ..., 1}`, deduplicated, in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandGrid {
    reports: Vec<Vec<f64>>,
}

impl DemandGrid {
    pub fn pinned(m: usize, k: usize) -> Self {
        let levels: Vec<f64> = (1..=k).map(|j| j as f64 / k as f64).collect();
        let mut reports = Vec::new();
        for pinned in 0..m {
            let free = m - 1;
            let total = k.pow(free as u32);
            for code in 0..total {
                let mut rest = code;
                let mut row = Vec::with_capacity(m);
                for r in 0..m {
                    if r == pinned {
                        row.push(1.0);
                    } else {
                        row.push(levels[rest % k]);
                        rest /= k;
                    }
                }
                reports.push(row);
            }
        }
        reports.sort_by(|a, b| lex_cmp(a, b));
        reports.dedup();
        Self { reports }
    }

    pub fn from_reports(mut reports: Vec<Vec<f64>>) -> Self {
        reports.sort_by(|a, b| lex_cmp(a, b));
        reports.dedup();
        Self { reports }
    }

    pub fn reports(&self) -> &[Vec<f64>] {
        &self.reports
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len()))
}

/// Runs `mechanism` with `agent`'s row replaced by each grid report and
/// returns the most profitable one (judged by the true demand), if any gain
/// exceeds [`GAIN_TOL`]. Ties go to the lexicographically smallest report.
pub fn sp_probe(
    mechanism: &Mechanism,
    instance: &Instance,
    agent: usize,
    grid: &DemandGrid,
) -> Result<Option<ManipulationFinding>> {
    if grid.is_empty() {
        return Err(Error::BadParams("empty report grid".into()));
    }
    if agent >= instance.agents() {
        return Err(Error::ShapeMismatch(format!("agent {agent} of {}", instance.agents())));
    }
    let truth = instance.demand(agent).as_slice();
    let truthful = utility(mechanism.run(instance)?.allocation.row(agent), truth);
    let outcomes: Vec<Result<f64>> = grid
        .reports()
        .par_iter()
        .map(|report| {
            let tagged = |e: Error| Error::Manipulation { report: report.clone(), source: Box::new(e) };
            let lie = DemandVector::new(report.clone()).map_err(tagged)?;
            let altered = instance.with_report(agent, lie).map_err(tagged)?;
            let result = mechanism.run(&altered).map_err(tagged)?;
            Ok(utility(result.allocation.row(agent), truth))
        })
        .collect();

    let mut best: Option<ManipulationFinding> = None;
    for (report, outcome) in grid.reports().iter().zip(outcomes) {
        let manipulated = outcome?;
        let gain = manipulated - truthful;
        if gain > GAIN_TOL && best.as_ref().map_or(true, |b| gain > b.gain) {
            best = Some(ManipulationFinding {
                agent,
                report: report.clone(),
                truthful_utility: truthful,
                manipulated_utility: manipulated,
                gain,
            });
        }
    }
    Ok(best)
}

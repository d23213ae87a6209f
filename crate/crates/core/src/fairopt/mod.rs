//! Optimal fair benchmark: the best social welfare or utilization reachable
//! by any allocation that satisfies sharing incentive and envy-freeness.
//!
//! Only non-wasteful allocations are searched, so the decision variables are
//! the dominant shares `y`. Agents with identical demand vectors are merged
//! into one variable weighted by multiplicity (the feasible set is convex and
//! symmetric under permuting identical agents, so averaging their shares loses
//! nothing). Envy constraints are added lazily and the tableau is re-optimized
//! with dual simplex after each batch.

mod simplex;

pub use simplex::{solve_lp, LinearProgram, LpError, LpSolution};

use std::collections::HashMap;

use serde::Serialize;
use simplex::Tableau;

use crate::error::{Error, Result};
use crate::mechanisms::{Mechanism, MechanismResult};
use crate::model::{utilization, Instance, EPS};

const CUT_TOL: f64 = 1e-12;
const CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FairBenchmark {
    pub sw_opt: f64,
    pub util_opt: f64,
    pub y_sw: Vec<f64>,
    pub y_util: Vec<f64>,
}

/// Fair benchmark for both objectives.
pub fn fair_benchmark(instance: &Instance) -> Result<FairBenchmark> {
    let types = DemandTypes::new(instance);
    let (sw_opt, y_sw) = types.solve(Objective::Welfare)?;
    let (util_opt, y_util) = types.solve(Objective::Utilization)?;
    Ok(FairBenchmark { sw_opt, util_opt, y_sw, y_util })
}

pub fn max_fair_sw(instance: &Instance) -> Result<(f64, Vec<f64>)> {
    DemandTypes::new(instance).solve(Objective::Welfare)
}

pub fn max_fair_util(instance: &Instance) -> Result<(f64, Vec<f64>)> {
    DemandTypes::new(instance).solve(Objective::Utilization)
}

/// `(benchmark SW / mechanism SW, benchmark utilization / mechanism utilization)`.
pub fn fair_ratio(result: &MechanismResult, benchmark: &FairBenchmark) -> Result<(f64, f64)> {
    let sw: f64 = result.allocation.shares.iter().sum();
    let util = utilization(&result.allocation);
    for value in [sw, util] {
        if value <= EPS {
            return Err(Error::DegenerateDenominator { value });
        }
    }
    Ok((benchmark.sw_opt / sw, benchmark.util_opt / util))
}

/// Worst-case welfare and utilization ratios from the closed forms.
/// Unbounded utilization is reported as `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioBounds {
    pub sw: f64,
    pub util: f64,
}

pub fn theoretical_ratios(
    mechanism: &Mechanism,
    alpha: f64,
    beta: Option<f64>,
    n: usize,
    m: usize,
) -> Result<RatioBounds> {
    let nf = n as f64;
    if n == 0 {
        return Err(Error::OutOfDomain("n must be positive".into()));
    }
    if m == 2 {
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(Error::OutOfDomain(format!("alpha {alpha} outside (0, 1/2]")));
        }
        let a = alpha;
        let bounds = match mechanism {
            Mechanism::Drf => RatioBounds { sw: 2.0 - a, util: 1.0 / a },
            Mechanism::F1 | Mechanism::GeneralizedF1(_) => RatioBounds { sw: 1.0 + a, util: 1.0 / (1.0 - a) },
            Mechanism::F2 => RatioBounds { sw: (4.0 - 2.0 * a) / (3.0 - a), util: 2.0 / (1.0 + a) },
            Mechanism::F2Star => RatioBounds {
                sw: (4.0 - 2.0 * a) / (3.0 - a - 1.0 / nf),
                util: 2.0 / (1.0 + a - 1.0 / nf),
            },
            Mechanism::HybridSw | Mechanism::HybridUtil => RatioBounds {
                sw: 3.0 - 3f64.sqrt() + 1.0 / (2.0 * nf),
                util: 3.0 / (2.0 - 1.0 / nf),
            },
            Mechanism::Fg(_) => return Err(Error::OutOfDomain(format!("no closed form for {mechanism}"))),
        };
        return Ok(bounds);
    }
    let Some(b) = beta else {
        return Err(Error::OutOfDomain("beta is required when m >= 3".into()));
    };
    if !(alpha > 0.0 && alpha < 1.0 && b > 0.0 && b < 1.0) {
        return Err(Error::OutOfDomain(format!("alpha {alpha}, beta {b} outside (0, 1)")));
    }
    let (a, mf) = (alpha, m as f64);
    let base = mf - a * b - (1.0 - a);
    let sw = match mechanism {
        Mechanism::GeneralizedF1(_) => base.max((mf - a * b) / (1.0 + (1.0 - b) / b * a)),
        Mechanism::Drf => base.max((mf - a * b) * (1.0 - a * (1.0 - b))),
        _ => return Err(Error::OutOfDomain(format!("no closed form for {mechanism} with m = {m}"))),
    };
    Ok(RatioBounds { sw, util: f64::INFINITY })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Objective {
    Welfare,
    Utilization,
}

/// Distinct demand vectors with their multiplicities.
struct DemandTypes<'a> {
    instance: &'a Instance,
    demands: Vec<&'a [f64]>,
    count: Vec<f64>,
    of_agent: Vec<usize>,
}

impl<'a> DemandTypes<'a> {
    fn new(instance: &'a Instance) -> Self {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut demands = Vec::new();
        let mut count = Vec::new();
        let mut of_agent = Vec::with_capacity(instance.agents());
        for d in instance.demands() {
            let key: Vec<u64> = d.as_slice().iter().map(|v| v.to_bits()).collect();
            let t = *index.entry(key).or_insert_with(|| {
                demands.push(d.as_slice());
                count.push(0.0);
                demands.len() - 1
            });
            count[t] += 1.0;
            of_agent.push(t);
        }
        Self { instance, demands, count, of_agent }
    }

    /// Largest `c` with `y_i >= c * y_j` being the envy-free condition for `i` toward `j`.
    fn envy_coefficient(&self, i: usize, j: usize) -> f64 {
        self.demands[j].iter().zip(self.demands[i]).map(|(dj, di)| dj / di).fold(f64::INFINITY, f64::min)
    }

    fn solve(&self, objective: Objective) -> Result<(f64, Vec<f64>)> {
        let n = self.instance.agents();
        let m = self.instance.resources();
        let types = self.demands.len();
        let floor = 1.0 / n as f64;
        // Variables are z_t = y_t - 1/n, plus the utilization level when needed.
        let vars = types + usize::from(objective == Objective::Utilization);
        let mut rows = Vec::with_capacity(2 * m);
        let mut bounds = Vec::with_capacity(2 * m);
        for r in 0..m {
            let coeffs: Vec<f64> = (0..types).map(|t| self.count[t] * self.demands[t][r]).collect();
            let at_floor: f64 = coeffs.iter().sum::<f64>() * floor;
            let mut row = coeffs.clone();
            row.resize(vars, 0.0);
            rows.push(row);
            bounds.push((1.0 - at_floor).max(0.0));
            if objective == Objective::Utilization {
                let mut row: Vec<f64> = coeffs.iter().map(|c| -c).collect();
                row.push(1.0);
                rows.push(row);
                bounds.push(at_floor);
            }
        }
        if m == 2 {
            self.push_chain(vars, floor, &mut rows, &mut bounds);
        }
        let mut weights = vec![0.0; vars];
        match objective {
            Objective::Welfare => weights[..types].copy_from_slice(&self.count),
            Objective::Utilization => weights[types] = 1.0,
        }
        let mut tab = Tableau::new(&weights, &rows, &bounds);
        tab.optimize()?;

        let coefficients: Vec<Vec<f64>> =
            (0..types).map(|i| (0..types).map(|j| self.envy_coefficient(i, j)).collect()).collect();
        loop {
            let z = tab.primal(vars);
            let y: Vec<f64> = z[..types].iter().map(|v| v + floor).collect();
            let mut cuts = 0;
            for i in 0..types {
                let worst = (0..types)
                    .filter(|&j| j != i)
                    .map(|j| (j, coefficients[i][j] * y[j] - y[i]))
                    .fold(None, |best: Option<(usize, f64)>, (j, v)| match best {
                        Some((_, bv)) if bv >= v => best,
                        _ => Some((j, v)),
                    });
                if let Some((j, violation)) = worst {
                    if violation > CUT_TOL {
                        let c = coefficients[i][j];
                        let mut row = vec![0.0; types];
                        row[i] = -1.0;
                        row[j] = c;
                        tab.add_row(&row, (1.0 - c) * floor);
                        cuts += 1;
                    }
                }
            }
            if cuts == 0 {
                break;
            }
            tab.reoptimize()?;
        }

        let z = tab.primal(vars);
        let y_type: Vec<f64> = z[..types].iter().map(|v| (v + floor).max(floor)).collect();
        self.verify(&y_type, &coefficients)?;
        let y: Vec<f64> = self.of_agent.iter().map(|&t| y_type[t]).collect();
        let value = match objective {
            Objective::Welfare => y.iter().sum(),
            Objective::Utilization => (0..m)
                .map(|r| y.iter().zip(self.instance.demands()).map(|(y, d)| y * d[r]).sum::<f64>())
                .fold(f64::INFINITY, f64::min),
        };
        Ok((value, y))
    }

    /// With two resources, sorting types by `d_1 / d_0` turns envy-freeness
    /// into two monotone chains: resource-0 holdings fall and resource-1
    /// holdings rise along the order. Consecutive links imply the rest.
    fn push_chain(&self, vars: usize, floor: f64, rows: &mut Vec<Vec<f64>>, bounds: &mut Vec<f64>) {
        let mut order: Vec<usize> = (0..self.demands.len()).collect();
        order.sort_by(|&a, &b| {
            let slope = |t: usize| self.demands[t][1] / self.demands[t][0];
            slope(a).total_cmp(&slope(b))
        });
        for pair in order.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            for (r, from, to) in [(0, hi, lo), (1, lo, hi)] {
                // holdings of `from` on r must not exceed those of `to`
                let mut row = vec![0.0; vars];
                row[from] += self.demands[from][r];
                row[to] -= self.demands[to][r];
                rows.push(row);
                bounds.push(((self.demands[to][r] - self.demands[from][r]) * floor).max(0.0));
            }
        }
    }

    /// Re-substitutes the solution into every constraint family.
    fn verify(&self, y: &[f64], coefficients: &[Vec<f64>]) -> Result<()> {
        let m = self.instance.resources();
        for r in 0..m {
            let used: f64 = (0..y.len()).map(|t| self.count[t] * self.demands[t][r] * y[t]).sum();
            if used > 1.0 + CHECK_TOL {
                return Err(Error::Lp(LpError::Infeasible));
            }
        }
        for i in 0..y.len() {
            for j in 0..y.len() {
                if i != j && coefficients[i][j] * y[j] - y[i] > CHECK_TOL {
                    return Err(Error::Lp(LpError::Infeasible));
                }
            }
        }
        Ok(())
    }
}

//! The monotone-score family of mechanisms.
//!
//! A strictly monotone score `g` induces a mechanism: after the equal step,
//! the agents with the lowest `g(A_i)` are scaled up together, keeping their
//! scores equal, until they reach the next score level or a resource runs
//! out. A coordinate score gives the generalized F1 mechanism; the
//! dominant-share score gives DRF.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{remaining, MechanismResult, Round};
use crate::error::{Error, Result};
use crate::model::{partition, Instance};

/// A score on bundles that must be strictly increasing under componentwise
/// strict increase.
pub trait Score {
    fn score(&self, bundle: &[f64]) -> f64;

    /// `score(c * v) == c * score(v)` for `c >= 0`; enables closed-form steps.
    fn is_homogeneous(&self) -> bool {
        false
    }
}

/// Built-in scores, parseable from the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ScoreSpec {
    /// `g(v) = v_r`.
    Coordinate(usize),
    /// `g(v) = w . v` with positive weights.
    Linear(Vec<f64>),
    /// `g(v) = max_r v_r`, the dominant share of a non-wasteful bundle.
    DominantShare,
    /// `g(v) = sum_r sqrt(v_r)`; not homogeneous, exercises the bisection path.
    SqrtSum,
}

impl Score for ScoreSpec {
    fn score(&self, v: &[f64]) -> f64 {
        match self {
            Self::Coordinate(r) => v[*r],
            Self::Linear(w) => w.iter().zip(v).map(|(a, b)| a * b).sum(),
            Self::DominantShare => v.iter().copied().fold(f64::MIN, f64::max),
            Self::SqrtSum => v.iter().map(|x| x.max(0.0).sqrt()).sum(),
        }
    }

    fn is_homogeneous(&self) -> bool {
        !matches!(self, Self::SqrtSum)
    }
}

impl fmt::Display for ScoreSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Coordinate(r) => write!(f, "coord:{r}"),
            Self::Linear(w) => {
                let parts: Vec<String> = w.iter().map(f64::to_string).collect();
                write!(f, "linear:{}", parts.join(","))
            }
            Self::DominantShare => f.write_str("max"),
            Self::SqrtSum => f.write_str("sqrt"),
        }
    }
}

impl FromStr for ScoreSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad score function {s:?}"));
        match s.split_once(':') {
            Some(("coord", r)) => Ok(Self::Coordinate(r.parse().map_err(|_| bad())?)),
            Some(("linear", w)) => {
                let weights = w
                    .split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Linear(weights))
            }
            None if s == "max" => Ok(Self::DominantShare),
            None if s == "sqrt" => Ok(Self::SqrtSum),
            _ => Err(bad()),
        }
    }
}

fn validate_spec(spec: &ScoreSpec, m: usize) -> Result<()> {
    match spec {
        ScoreSpec::Coordinate(r) if *r >= m => {
            Err(Error::OutOfDomain(format!("score coordinate {r} with {m} resources")))
        }
        ScoreSpec::Linear(w) if w.len() != m => {
            Err(Error::ShapeMismatch(format!("{} weights for {m} resources", w.len())))
        }
        _ => Ok(()),
    }
}

/// Runs the family member induced by `g`.
pub fn f_g(instance: &Instance, g: &dyn Score) -> Result<MechanismResult> {
    water_fill(instance, g, crate::model::EPS)
}

/// Generalized F1: the family member with `g(v) = v_special`. Without an
/// explicit resource the largest dominant-resource group is special.
pub fn generalized_f1(instance: &Instance, special: Option<usize>) -> Result<MechanismResult> {
    run_generalized(instance, special, crate::model::EPS)
}

pub(super) fn run(instance: &Instance, spec: &ScoreSpec, eps: f64) -> Result<MechanismResult> {
    validate_spec(spec, instance.resources())?;
    water_fill(instance, spec, eps)
}

pub(super) fn run_generalized(instance: &Instance, special: Option<usize>, eps: f64) -> Result<MechanismResult> {
    let special = special.unwrap_or_else(|| partition(instance).largest_group());
    run(instance, &ScoreSpec::Coordinate(special), eps)
}

/// Sampled strict-monotonicity check along each agent's demand ray.
fn check_monotone(instance: &Instance, g: &dyn Score) -> Result<()> {
    let n = instance.agents() as f64;
    for (agent, d) in instance.demands().iter().enumerate() {
        for scale in [1.0 / n, 0.5, 1.0] {
            let v: Vec<f64> = d.as_slice().iter().map(|x| x * scale).collect();
            let w: Vec<f64> = v.iter().map(|x| x * 1.001 + 1e-6).collect();
            let (gv, gw) = (g.score(&v), g.score(&w));
            if !gv.is_finite() || !gw.is_finite() || gw <= gv {
                return Err(Error::NonMonotoneScore { agent });
            }
        }
    }
    Ok(())
}

/// Dominant share at which the agent's score reaches `level`.
fn share_at_level(g: &dyn Score, demand: &[f64], level: f64) -> f64 {
    let at = |y: f64| {
        let v: Vec<f64> = demand.iter().map(|d| d * y).collect();
        g.score(&v)
    };
    if g.is_homogeneous() {
        return level / at(1.0);
    }
    let mut hi = 1.0;
    for _ in 0..64 {
        if at(hi) >= level {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
        if at(hi) - at(lo) <= 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn water_fill(instance: &Instance, g: &dyn Score, eps: f64) -> Result<MechanismResult> {
    check_monotone(instance, g)?;
    let n = instance.agents();
    let m = instance.resources();
    let mut shares = vec![1.0 / n as f64; n];
    let full_level = g.score(&vec![1.0; m]);
    let mut trace = Vec::new();

    let level_of = |shares: &[f64], i: usize| {
        let v: Vec<f64> = instance.demand(i).as_slice().iter().map(|d| d * shares[i]).collect();
        g.score(&v)
    };

    for _ in 0..=2 * n + 2 {
        let left = remaining(instance, &shares);
        if left.iter().any(|&c| c <= eps) {
            break;
        }
        let levels: Vec<f64> = (0..n).map(|i| level_of(&shares, i)).collect();
        let lowest = levels.iter().copied().fold(f64::INFINITY, f64::min);
        let tie = eps * (1.0 + lowest.abs());
        let frontier: Vec<usize> = (0..n).filter(|&i| levels[i] <= lowest + tie).collect();
        let next = if frontier.len() == n {
            full_level
        } else {
            (0..n).filter(|i| !frontier.contains(i)).map(|i| levels[i]).fold(f64::INFINITY, f64::min)
        };

        let raised = |level: f64| -> Vec<f64> {
            frontier
                .iter()
                .map(|&i| share_at_level(g, instance.demand(i).as_slice(), level).max(shares[i]))
                .collect()
        };
        let fits = |new: &[f64]| {
            (0..m).all(|r| {
                let used: f64 = frontier
                    .iter()
                    .zip(new)
                    .map(|(&i, &y)| (y - shares[i]) * instance.demand(i)[r])
                    .sum();
                used <= left[r]
            })
        };

        let at_next = raised(next);
        if frontier.len() < n && fits(&at_next) {
            for (&i, &y) in frontier.iter().zip(&at_next) {
                shares[i] = y;
            }
            trace.push(Round { frontier, steps: vec![next - lowest] });
            continue;
        }

        let target = if g.is_homogeneous() {
            // Shares are linear in the level: y_i(L) = L / g(d_i).
            let slopes: Vec<f64> =
                frontier.iter().map(|&i| 1.0 / g.score(instance.demand(i).as_slice())).collect();
            (0..m)
                .map(|r| {
                    let held: f64 = frontier.iter().map(|&i| shares[i] * instance.demand(i)[r]).sum();
                    let rate: f64 =
                        frontier.iter().zip(&slopes).map(|(&i, s)| s * instance.demand(i)[r]).sum();
                    (left[r] + held) / rate
                })
                .fold(next, f64::min)
        } else {
            let (mut lo, mut hi) = (lowest, next);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if fits(&raised(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
                    break;
                }
            }
            lo
        };
        let new = raised(target);
        for (&i, &y) in frontier.iter().zip(&new) {
            shares[i] = y;
        }
        trace.push(Round { frontier, steps: vec![target - lowest] });
        break;
    }
    Ok(MechanismResult::from_shares(instance, shares, trace, eps))
}

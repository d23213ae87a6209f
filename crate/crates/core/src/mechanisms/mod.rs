//! Allocation mechanisms.
//!
//! All mechanisms share the same two-step shape: every agent first receives a
//! dominant share of `1/n`, then the leftover capacity is handed out according
//! to a mechanism-specific water-filling rule until some resource runs out.
//! The outputs are always non-wasteful, so an agent's bundle is its dominant
//! share times its demand vector.

mod drf;
mod f1;
mod f2;
mod family;
mod hybrid;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, EPS};

pub use drf::drf;
pub use f1::f1;
pub use f2::{f2, f2star};
pub use family::{f_g, generalized_f1, Score, ScoreSpec};
pub use hybrid::{hybrid_sw, hybrid_util, sw_switch_point, util_switch_point};

/// One step-2 round: the agents raised together and the step sizes applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Round {
    pub frontier: Vec<usize>,
    pub steps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismResult {
    pub allocation: Allocation,
    /// Resources whose column sum is at least `1 - eps`.
    pub exhausted: Vec<usize>,
    pub trace: Vec<Round>,
    /// Set by the hybrid mechanisms to the branch that produced the allocation.
    pub dispatched: Option<Mechanism>,
}

impl MechanismResult {
    pub(crate) fn from_shares(instance: &Instance, shares: Vec<f64>, trace: Vec<Round>, eps: f64) -> Self {
        let allocation = Allocation::from_shares(instance, shares);
        let exhausted = allocation
            .column_sums()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >= 1.0 - eps)
            .map(|(r, _)| r)
            .collect();
        Self { allocation, exhausted, trace, dispatched: None }
    }

    pub fn shares(&self) -> &[f64] {
        &self.allocation.shares
    }

    pub fn max_column_sum(&self) -> f64 {
        self.allocation.column_sums().into_iter().fold(0.0, f64::max)
    }
}

/// Remaining capacity of every resource for the given dominant shares.
pub(crate) fn remaining(instance: &Instance, shares: &[f64]) -> Vec<f64> {
    let mut left = vec![1.0; instance.resources()];
    for (d, &y) in instance.demands().iter().zip(shares) {
        for (c, v) in left.iter_mut().zip(d.as_slice()) {
            *c -= y * v;
        }
    }
    left
}

pub(crate) fn require_two(instance: &Instance, mechanism: &'static str) -> Result<()> {
    if instance.resources() != 2 {
        return Err(Error::WrongArity { mechanism, expected: "exactly 2", got: instance.resources() });
    }
    Ok(())
}

/// Selectable mechanism, as named on the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Mechanism {
    Drf,
    F1,
    F2,
    F2Star,
    Fg(ScoreSpec),
    /// Generalized F1; `None` picks the largest dominant-resource group.
    GeneralizedF1(Option<usize>),
    HybridSw,
    HybridUtil,
}

impl Mechanism {
    pub fn run(&self, instance: &Instance) -> Result<MechanismResult> {
        self.run_with_eps(instance, EPS)
    }

    pub fn run_with_eps(&self, instance: &Instance, eps: f64) -> Result<MechanismResult> {
        match self {
            Self::Drf => Ok(drf::run(instance, eps)),
            Self::F1 => f1::run(instance, eps),
            Self::F2 => f2::run(instance, f2::Ratio::Remaining, eps),
            Self::F2Star => f2::run(instance, f2::Ratio::Starred, eps),
            Self::Fg(score) => family::run(instance, score, eps),
            Self::GeneralizedF1(special) => family::run_generalized(instance, *special, eps),
            Self::HybridSw => hybrid::run(instance, hybrid::Objective::Welfare, eps),
            Self::HybridUtil => hybrid::run(instance, hybrid::Objective::Utilization, eps),
        }
    }

    /// Whether the mechanism is only defined for two resources.
    pub fn two_resource_only(&self) -> bool {
        matches!(self, Self::F1 | Self::F2 | Self::F2Star | Self::HybridSw | Self::HybridUtil)
    }

    pub fn tag(&self) -> String {
        match self {
            Self::Drf => "drf".into(),
            Self::F1 => "f1".into(),
            Self::F2 => "f2".into(),
            Self::F2Star => "f2star".into(),
            Self::Fg(score) => format!("fg:{score}"),
            Self::GeneralizedF1(None) => "gf1".into(),
            Self::GeneralizedF1(Some(r)) => format!("gf1:{r}"),
            Self::HybridSw => "hybrid-sw".into(),
            Self::HybridUtil => "hybrid-util".into(),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    /// Parses `drf`, `f1`, `f2`, `f2star`, `fg[:score]`, `gf1[:resource]`,
    /// `hybrid-sw` and `hybrid-util`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let mech = match (head.to_ascii_lowercase().as_str(), arg) {
            ("drf", None) => Self::Drf,
            ("f1", None) => Self::F1,
            ("f2", None) => Self::F2,
            ("f2star" | "f2*", None) => Self::F2Star,
            ("fg", None) => Self::Fg(ScoreSpec::Coordinate(0)),
            ("fg", Some(g)) => Self::Fg(g.parse()?),
            ("gf1", None) => Self::GeneralizedF1(None),
            ("gf1", Some(r)) => Self::GeneralizedF1(Some(
                r.parse().map_err(|_| Error::Config(format!("bad resource index in {s:?}")))?,
            )),
            ("hybrid-sw", None) => Self::HybridSw,
            ("hybrid-util", None) => Self::HybridUtil,
            _ => return Err(Error::Config(format!("unknown mechanism {s:?}"))),
        };
        Ok(mech)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for tag in ["drf", "f1", "f2", "f2star", "fg:coord:1", "fg:linear:0.3,0.7", "fg:max", "fg:sqrt", "gf1", "gf1:2", "hybrid-sw", "hybrid-util"] {
            let m: Mechanism = tag.parse().unwrap();
            assert_eq!(m.tag(), tag);
        }
        assert!("nope".parse::<Mechanism>().is_err());
    }
}

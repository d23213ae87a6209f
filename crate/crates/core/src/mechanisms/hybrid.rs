use super::{f1, f2, require_two, Mechanism, MechanismResult};
use crate::error::Result;
use crate::model::{partition, Instance};

#[derive(Clone, Copy, Debug)]
pub(super) enum Objective {
    Welfare,
    Utilization,
}

/// Minor-group fraction up to which the welfare hybrid runs F1.
pub fn sw_switch_point(n: usize) -> f64 {
    2.0 - 3f64.sqrt() + 1.0 / (2.0 * n as f64)
}

/// Minor-group fraction up to which the utilization hybrid runs F1.
pub fn util_switch_point(n: usize) -> f64 {
    1.0 / 3.0 + 1.0 / (3.0 * n as f64)
}

pub fn hybrid_sw(instance: &Instance) -> Result<MechanismResult> {
    run(instance, Objective::Welfare, crate::model::EPS)
}

pub fn hybrid_util(instance: &Instance) -> Result<MechanismResult> {
    run(instance, Objective::Utilization, crate::model::EPS)
}

pub(super) fn run(instance: &Instance, objective: Objective, eps: f64) -> Result<MechanismResult> {
    let name = match objective {
        Objective::Welfare => "hybrid-sw",
        Objective::Utilization => "hybrid-util",
    };
    require_two(instance, name)?;
    let n = instance.agents();
    let switch = match objective {
        Objective::Welfare => sw_switch_point(n),
        Objective::Utilization => util_switch_point(n),
    };
    let (mut result, branch) = if partition(instance).alpha <= switch {
        (f1::run(instance, eps)?, Mechanism::F1)
    } else {
        (f2::run(instance, f2::Ratio::Starred, eps)?, Mechanism::F2Star)
    };
    result.dispatched = Some(branch);
    Ok(result)
}

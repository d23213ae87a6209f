//! Runs mechanisms with the two-resource relabeling applied: when fewer
//! agents are dominant on resource 0 than on resource 1, the columns are
//! swapped before the mechanism runs and swapped back afterwards, so the
//! larger group always sits on resource 0.

use crate::error::Result;
use crate::mechanisms::{Mechanism, MechanismResult};
use crate::model::{partition, Instance};

/// Whether the harness would swap the two resources of `instance`.
pub fn needs_relabel(mechanism: &Mechanism, instance: &Instance) -> bool {
    if !mechanism.two_resource_only() || instance.resources() != 2 {
        return false;
    }
    let groups = partition(instance).groups;
    groups[0].len() < groups[1].len()
}

pub fn run_canonical(mechanism: &Mechanism, instance: &Instance, eps: f64) -> Result<MechanismResult> {
    if !needs_relabel(mechanism, instance) {
        return mechanism.run_with_eps(instance, eps);
    }
    let mut result = mechanism.run_with_eps(&instance.swap_resources(0, 1), eps)?;
    for row in &mut result.allocation.matrix {
        row.swap(0, 1);
    }
    for r in &mut result.exhausted {
        *r = 1 - *r;
    }
    result.exhausted.sort_unstable();
    Ok(result)
}

use super::MechanismResult;
use crate::model::Instance;

/// Dominant resource fairness: every agent gets the common dominant share
/// `1 / max_r sum_i d_ir`.
pub fn drf(instance: &Instance) -> MechanismResult {
    run(instance, crate::model::EPS)
}

pub(super) fn run(instance: &Instance, eps: f64) -> MechanismResult {
    let worst = instance.demand_column_sums().into_iter().fold(0.0, f64::max);
    let share = 1.0 / worst;
    MechanismResult::from_shares(instance, vec![share; instance.agents()], Vec::new(), eps)
}

use super::{remaining, require_two, MechanismResult, Round};
use crate::error::Result;
use crate::model::{partition, Instance};

/// Two-resource mechanism that spends step 2 entirely on the second group,
/// always raising the agents holding the least of resource 0.
pub fn f1(instance: &Instance) -> Result<MechanismResult> {
    run(instance, crate::model::EPS)
}

pub(super) fn run(instance: &Instance, eps: f64) -> Result<MechanismResult> {
    require_two(instance, "f1")?;
    let n = instance.agents();
    let groups = partition(instance).groups;
    let second = &groups[1];
    let mut shares = vec![1.0 / n as f64; n];
    let mut trace = Vec::new();
    let d0 = |i: usize| instance.demand(i)[0];

    for _ in 0..=n {
        let left = remaining(instance, &shares);
        if second.is_empty() || left[0] <= eps || left[1] <= eps {
            break;
        }
        let level = |i: usize| shares[i] * d0(i);
        let lowest = second.iter().map(|&i| level(i)).fold(f64::INFINITY, f64::min);
        let frontier: Vec<usize> = second.iter().copied().filter(|&i| level(i) <= lowest + eps).collect();

        let next_level = (0..n)
            .filter(|i| !frontier.contains(i))
            .map(level)
            .fold(f64::INFINITY, f64::min);
        let to_next = next_level - lowest;
        let until_first = left[0] / frontier.len() as f64;
        let until_second = left[1] / frontier.iter().map(|&i| 1.0 / d0(i)).sum::<f64>();
        let step = to_next.min(until_first).min(until_second);

        let target = lowest + step;
        for &i in &frontier {
            shares[i] = shares[i].max(target / d0(i));
        }
        trace.push(Round { frontier, steps: vec![step] });
        if until_first <= to_next || until_second <= to_next {
            break;
        }
    }
    Ok(MechanismResult::from_shares(instance, shares, trace, eps))
}

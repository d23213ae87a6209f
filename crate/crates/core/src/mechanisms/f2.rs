//! Coupled two-group water-filling.
//!
//! Both groups are raised in step 2: inside each group the agents holding the
//! least of their non-dominant resource move together, and the two groups'
//! dominant-share increments are kept in a fixed ratio. With
//! [`Ratio::Remaining`] the ratio is the leftover capacity after step 1; with
//! [`Ratio::Starred`] each leftover is padded by the step-1 bundle of the
//! opposite group's smallest demander, which removes the incentive to
//! misreport.

use super::{drf, remaining, require_two, MechanismResult, Round};
use crate::error::Result;
use crate::model::{partition, Instance};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Ratio {
    Remaining,
    Starred,
}

pub fn f2(instance: &Instance) -> Result<MechanismResult> {
    run(instance, Ratio::Remaining, crate::model::EPS)
}

pub fn f2star(instance: &Instance) -> Result<MechanismResult> {
    run(instance, Ratio::Starred, crate::model::EPS)
}

pub(super) fn run(instance: &Instance, ratio: Ratio, eps: f64) -> Result<MechanismResult> {
    require_two(instance, if ratio == Ratio::Remaining { "f2" } else { "f2star" })?;
    let n = instance.agents();
    let nf = n as f64;
    let groups = partition(instance).groups;
    if groups.iter().any(Vec::is_empty) {
        return Ok(drf::run(instance, eps));
    }

    let mut shares = vec![1.0 / nf; n];
    let after_step1 = remaining(instance, &shares);
    if after_step1[0] <= eps || after_step1[1] <= eps {
        return Ok(MechanismResult::from_shares(instance, shares, Vec::new(), eps));
    }
    // weights[k] is the target share of step-2 growth for group k
    let weights = match ratio {
        Ratio::Remaining => after_step1.clone(),
        Ratio::Starred => {
            let min_other = |k: usize| {
                groups[k].iter().map(|&i| instance.demand(i)[1 - k]).fold(f64::INFINITY, f64::min)
            };
            vec![after_step1[0] + min_other(1) / nf, after_step1[1] + min_other(0) / nf]
        }
    };

    // Group k is dominant on resource k and is levelled on resource 1 - k.
    let d = |i: usize, r: usize| instance.demand(i)[r];
    let mut trace = Vec::new();
    for _ in 0..=2 * n + 2 {
        let left = remaining(instance, &shares);
        if left[0] <= eps || left[1] <= eps {
            break;
        }
        let level = |i: usize, r: usize| shares[i] * d(i, r);

        let mut frontiers: [Vec<usize>; 2] = Default::default();
        let mut lowest = [0.0; 2];
        let mut steps = [0.0; 2];
        let mut inverse_sum = [0.0; 2];
        let mut capacity_bound = [false; 2];
        for k in 0..2 {
            let other = 1 - k;
            lowest[k] = groups[k].iter().map(|&i| level(i, other)).fold(f64::INFINITY, f64::min);
            frontiers[k] = groups[k].iter().copied().filter(|&i| level(i, other) <= lowest[k] + eps).collect();
            let next = (0..n)
                .filter(|i| !frontiers[k].contains(i))
                .map(|i| level(i, other))
                .fold(f64::INFINITY, f64::min);
            let to_next = next - lowest[k];
            inverse_sum[k] = frontiers[k].iter().map(|&i| 1.0 / d(i, other)).sum();
            let until_out = left[other]
                / (frontiers[k].len() as f64 + inverse_sum[k] * weights[other] / weights[k]);
            capacity_bound[k] = until_out <= to_next;
            steps[k] = to_next.min(until_out);
        }

        // Scale one side down so that the growth ratio matches the weights.
        let binding = if steps[0] * inverse_sum[0] * weights[1] <= steps[1] * inverse_sum[1] * weights[0] {
            steps[1] = steps[0] * inverse_sum[0] / inverse_sum[1] * weights[1] / weights[0];
            0
        } else {
            steps[0] = steps[1] * inverse_sum[1] / inverse_sum[0] * weights[0] / weights[1];
            1
        };

        for k in 0..2 {
            let target = lowest[k] + steps[k];
            for &i in &frontiers[k] {
                shares[i] = shares[i].max(target / d(i, 1 - k));
            }
        }
        trace.push(Round { frontier: frontiers.concat(), steps: steps.to_vec() });
        if capacity_bound[binding] {
            break;
        }
    }
    Ok(MechanismResult::from_shares(instance, shares, trace, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::testutil::*;
    use crate::model::social_welfare;

    fn increments(inst: &Instance, res: &MechanismResult, agent: usize) -> (f64, f64) {
        let base = 1.0 / inst.agents() as f64;
        let a = res.allocation.row(agent);
        (a[0] - base * inst.demand(agent)[0], a[1] - base * inst.demand(agent)[1])
    }

    #[test]
    fn f2_example1() {
        let inst = example1();
        let res = f2(&inst).unwrap();
        let (a, b) = increments(&inst, &res, 1);
        assert_close(a, 16.0 / 81.0, 1e-12);
        assert_close(b, 16.0 / 405.0, 1e-12);
        let (a, b) = increments(&inst, &res, 2);
        assert_close(a, 28.0 / 405.0, 1e-12);
        assert_close(b, 28.0 / 81.0, 1e-12);
        assert_close(res.shares()[0], 1.0 / 3.0, 1e-15);
        assert_eq!(res.exhausted, vec![0]);
        assert_close(social_welfare(&res.allocation, &inst), 1.0 + 44.0 / 81.0, 1e-12);
    }

    #[test]
    fn f2star_example1() {
        let inst = example1();
        let res = f2star(&inst).unwrap();
        let (a, b) = increments(&inst, &res, 1);
        assert_close(a, 20.0 / 99.0, 1e-12);
        assert_close(b, 4.0 / 99.0, 1e-12);
        let (a, b) = increments(&inst, &res, 2);
        assert_close(a, 32.0 / 495.0, 1e-12);
        assert_close(b, 32.0 / 99.0, 1e-12);
        assert_close(social_welfare(&res.allocation, &inst), 1.0 + 52.0 / 99.0, 1e-12);
    }

    #[test]
    fn f2_example2_truthful() {
        let res = f2(&example2()).unwrap();
        let a = res.allocation.row(1);
        assert_close(a[0], 9.0 / 56.0, 1e-12);
        assert_close(a[1], 9.0 / 14.0, 1e-12);
        assert_eq!(res.exhausted, vec![1]);
    }

    #[test]
    fn step1_exhaustion_returns_equal_split() {
        let inst = Instance::new(vec![vec![1.0, 1.0]; 3]).unwrap();
        for res in [f2(&inst).unwrap(), f2star(&inst).unwrap()] {
            for &y in res.shares() {
                assert_close(y, 1.0 / 3.0, 1e-15);
            }
            assert!(res.trace.is_empty());
        }
    }

    #[test]
    fn growth_ratio_matches_remainders() {
        let inst = Instance::new(vec![
            vec![1.0, 0.3],
            vec![1.0, 0.6],
            vec![1.0, 0.2],
            vec![0.4, 1.0],
            vec![0.7, 1.0],
        ])
        .unwrap();
        let n = 5.0;
        let base = vec![0.2; 5];
        let r = remaining(&inst, &base);
        for (ratio, w) in [
            (Ratio::Remaining, [r[0], r[1]]),
            (Ratio::Starred, [r[0] + 0.4 / n, r[1] + 0.2 / n]),
        ] {
            let res = run(&inst, ratio, 1e-9).unwrap();
            let grow = |g: &[usize]| g.iter().map(|&i| res.shares()[i] - 0.2).sum::<f64>();
            let (s1, s2) = (grow(&[0, 1, 2]), grow(&[3, 4]));
            assert!((s1 * w[1] - s2 * w[0]).abs() <= 1e-9 * w[0].max(w[1]), "{ratio:?}");
        }
    }
}

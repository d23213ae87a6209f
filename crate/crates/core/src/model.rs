//! Demand vectors, instances, allocations and the efficiency metrics.
//!
//! Every quantity is a fraction of the total supply of a resource, so an
//! allocation is feasible when each column of its matrix sums to at most one.

use serde::Serialize;

use crate::error::{Error, Result};

/// Global numeric tolerance for feasibility, exhaustion and tie detection.
pub const EPS: f64 = 1e-9;

/// A normalized Leontief demand vector: entries in `(0, 1]`, maximum exactly 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandVector(Vec<f64>);

impl DemandVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        Self::validate(0, &entries)?;
        Ok(Self(entries))
    }

    fn validate(row: usize, entries: &[f64]) -> Result<()> {
        for (col, &v) in entries.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveDemand { row, col, value: v });
            }
            if v > 1.0 {
                return Err(Error::NotNormalized { row, reason: "entry exceeds 1" });
            }
        }
        if !entries.iter().any(|&v| v == 1.0) {
            return Err(Error::NotNormalized { row, reason: "no entry equals 1" });
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Dominant resource, ties broken towards the smallest index.
    pub fn dominant_resource(&self) -> usize {
        self.0.iter().position(|&v| v == 1.0).expect("normalized vector has an entry equal to 1")
    }
}

impl std::ops::Index<usize> for DemandVector {
    type Output = f64;

    fn index(&self, r: usize) -> &f64 {
        &self.0[r]
    }
}

/// `n` agents over `m` resources, one normalized demand vector per agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    demands: Vec<DemandVector>,
    resources: usize,
}

impl Instance {
    /// Builds an instance from raw positive demands, normalizing every row.
    pub fn new(raw: Vec<Vec<f64>>) -> Result<Self> {
        normalize(&raw)
    }

    pub fn agents(&self) -> usize {
        self.demands.len()
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn demand(&self, agent: usize) -> &DemandVector {
        &self.demands[agent]
    }

    pub fn demands(&self) -> &[DemandVector] {
        &self.demands
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.demands.iter().map(|d| d.0.clone()).collect()
    }

    /// Copy of the instance with `agent`'s row replaced by `report`.
    pub fn with_report(&self, agent: usize, report: DemandVector) -> Result<Self> {
        if report.len() != self.resources {
            return Err(Error::ShapeMismatch(format!(
                "report has {} entries, instance has {} resources",
                report.len(),
                self.resources
            )));
        }
        let mut demands = self.demands.clone();
        demands[agent] = report;
        Ok(Self { demands, resources: self.resources })
    }

    /// Copy of the instance with two resource columns exchanged.
    pub fn swap_resources(&self, a: usize, b: usize) -> Self {
        let demands = self
            .demands
            .iter()
            .map(|d| {
                let mut v = d.0.clone();
                v.swap(a, b);
                DemandVector(v)
            })
            .collect();
        Self { demands, resources: self.resources }
    }

    /// Sum of each resource column of the demand matrix.
    pub fn demand_column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.resources];
        for d in &self.demands {
            for (s, v) in sums.iter_mut().zip(&d.0) {
                *s += v;
            }
        }
        sums
    }
}

/// Divides each row by its maximum so that the dominant entry becomes exactly 1.
pub fn normalize(raw: &[Vec<f64>]) -> Result<Instance> {
    let agents = raw.len();
    let resources = raw.first().map_or(0, Vec::len);
    if agents == 0 || resources < 2 {
        return Err(Error::EmptyInstance { agents, resources });
    }
    let mut demands = Vec::with_capacity(agents);
    for (row, entries) in raw.iter().enumerate() {
        if entries.len() != resources {
            return Err(Error::RaggedRow { row, expected: resources, got: entries.len() });
        }
        for (col, &v) in entries.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveDemand { row, col, value: v });
            }
        }
        let max = entries.iter().copied().fold(f64::MIN, f64::max);
        let normalized: Vec<f64> = entries.iter().map(|&v| v / max).collect();
        DemandVector::validate(row, &normalized)?;
        demands.push(DemandVector(normalized));
    }
    Ok(Instance { demands, resources })
}

/// Leontief utility: the largest `y` with `bundle[r] >= y * demand[r]` for all `r`.
pub fn utility(bundle: &[f64], demand: &[f64]) -> f64 {
    bundle
        .iter()
        .zip(demand)
        .map(|(a, d)| a / d)
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

/// An `n x m` allocation matrix together with per-agent dominant shares.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Allocation {
    pub shares: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

impl Allocation {
    /// Non-wasteful allocation `A_i = y_i * d_i`.
    pub fn from_shares(instance: &Instance, shares: Vec<f64>) -> Self {
        let matrix = instance
            .demands()
            .iter()
            .zip(&shares)
            .map(|(d, &y)| d.as_slice().iter().map(|&v| y * v).collect())
            .collect();
        Self { shares, matrix }
    }

    /// Arbitrary (possibly wasteful) allocation; shares are the agents' utilities.
    pub fn from_matrix(instance: &Instance, matrix: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(instance, &matrix)?;
        let shares = matrix
            .iter()
            .zip(instance.demands())
            .map(|(row, d)| utility(row, d.as_slice()))
            .collect();
        Ok(Self { shares, matrix })
    }

    pub fn zeros(instance: &Instance) -> Self {
        Self::from_shares(instance, vec![0.0; instance.agents()])
    }

    pub fn agents(&self) -> usize {
        self.matrix.len()
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        &self.matrix[agent]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let m = self.matrix.first().map_or(0, Vec::len);
        let mut sums = vec![0.0; m];
        for row in &self.matrix {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// Largest `|A_ir - y_i d_ir|` over the matrix.
    pub fn waste_deviation(&self, instance: &Instance) -> f64 {
        self.matrix
            .iter()
            .zip(&self.shares)
            .zip(instance.demands())
            .flat_map(|((row, &y), d)| {
                row.iter().zip(d.as_slice()).map(move |(a, v)| (a - y * v).abs())
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_shape(instance: &Instance, matrix: &[Vec<f64>]) -> Result<()> {
    if matrix.len() != instance.agents() {
        return Err(Error::ShapeMismatch(format!(
            "allocation has {} rows, instance has {} agents",
            matrix.len(),
            instance.agents()
        )));
    }
    if let Some(row) = matrix.iter().position(|r| r.len() != instance.resources()) {
        return Err(Error::ShapeMismatch(format!(
            "allocation row {row} has {} entries, instance has {} resources",
            matrix[row].len(),
            instance.resources()
        )));
    }
    Ok(())
}

pub fn social_welfare(allocation: &Allocation, instance: &Instance) -> f64 {
    allocation
        .matrix
        .iter()
        .zip(instance.demands())
        .map(|(row, d)| utility(row, d.as_slice()))
        .sum()
}

/// Minimum over resources of the consumed fraction.
pub fn utilization(allocation: &Allocation) -> f64 {
    allocation.column_sums().into_iter().fold(f64::INFINITY, f64::min).max(0.0)
}

/// Agents grouped by dominant resource, plus the population parameters.
///
/// For two resources `alpha` is the fraction of agents in the smaller group.
/// Otherwise it is the fraction outside the special group and `beta` is the
/// average special-resource demand of those agents.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupPartition {
    pub groups: Vec<Vec<usize>>,
    pub special: usize,
    pub alpha: f64,
    /// `None` when every agent is in the special group, or for the two-resource form.
    pub beta: Option<f64>,
}

impl GroupPartition {
    pub fn is_degenerate(&self) -> bool {
        self.alpha == 0.0
    }

    pub fn group_of(&self, agent: usize) -> usize {
        self.groups.iter().position(|g| g.contains(&agent)).expect("partition covers every agent")
    }

    /// Index of the largest group, ties towards the smallest resource.
    pub fn largest_group(&self) -> usize {
        let mut best = 0;
        for (r, g) in self.groups.iter().enumerate() {
            if g.len() > self.groups[best].len() {
                best = r;
            }
        }
        best
    }
}

fn dominant_groups(instance: &Instance) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); instance.resources()];
    for (i, d) in instance.demands().iter().enumerate() {
        groups[d.dominant_resource()].push(i);
    }
    groups
}

/// Partition with the default conventions: for two resources `alpha` is the
/// minor-group fraction; for more resources resource 0 is the special group.
pub fn partition(instance: &Instance) -> GroupPartition {
    if instance.resources() == 2 {
        let groups = dominant_groups(instance);
        let n = instance.agents() as f64;
        let alpha = groups[0].len().min(groups[1].len()) as f64 / n;
        GroupPartition { groups, special: 0, alpha, beta: None }
    } else {
        partition_with_special(instance, 0)
    }
}

pub fn partition_with_special(instance: &Instance, special: usize) -> GroupPartition {
    let groups = dominant_groups(instance);
    let n = instance.agents();
    let outside = n - groups[special].len();
    let alpha = outside as f64 / n as f64;
    let beta = (outside > 0).then(|| {
        let total: f64 = (0..n)
            .filter(|i| instance.demand(*i).dominant_resource() != special)
            .map(|i| instance.demand(i)[special])
            .sum();
        total / outside as f64
    });
    GroupPartition { groups, special, alpha, beta }
}

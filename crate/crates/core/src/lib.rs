//! Fair multi-resource allocation for agents with Leontief preferences.
//!
//! Demands are normalized so each agent's dominant resource reads 1. The
//! mechanisms all start from an equal split of dominant shares and then hand
//! out the leftovers in different orders, keeping sharing incentive,
//! envy-freeness and Pareto optimality. [`fairopt`] computes the best fair
//! allocation for comparison.

pub mod cli;
pub mod error;
pub mod fairopt;
pub mod instances;
pub mod mechanisms;
pub mod model;
pub mod properties;

pub use error::{Error, Result};
pub use fairopt::{fair_benchmark, fair_ratio, max_fair_sw, max_fair_util, theoretical_ratios, FairBenchmark};
pub use mechanisms::{Mechanism, MechanismResult};
pub use model::{normalize, partition, social_welfare, utility, utilization, Allocation, DemandVector, Instance};

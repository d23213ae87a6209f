use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("demand at row {row}, column {col} is not strictly positive ({value})")]
    NonPositiveDemand { row: usize, col: usize, value: f64 },

    #[error("instance needs at least one agent and two resources (got {agents} x {resources})")]
    EmptyInstance { agents: usize, resources: usize },

    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },

    #[error("row {row} is not a normalized demand vector: {reason}")]
    NotNormalized { row: usize, reason: &'static str },

    #[error("mechanism {mechanism} requires {expected} resources, instance has {got}")]
    WrongArity { mechanism: &'static str, expected: &'static str, got: usize },

    #[error("score function is not strictly monotone near agent {agent}")]
    NonMonotoneScore { agent: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("allocation is not non-wasteful (worst deviation {deviation:e})")]
    NotNonWasteful { deviation: f64 },

    #[error("linear program: {0}")]
    Lp(#[from] crate::fairopt::LpError),

    #[error("mechanism value {value:e} is too small to form a ratio")]
    DegenerateDenominator { value: f64 },

    #[error("parameter out of domain: {0}")]
    OutOfDomain(String),

    #[error("bad alpha {alpha}: {reason}")]
    BadAlpha { alpha: f64, reason: String },

    #[error("bad generator parameters: {0}")]
    BadParams(String),

    #[error("instance too small for construction: {0}")]
    TooSmall(String),

    #[error("trace {path}: no usable rows ({skipped} skipped)")]
    EmptyPool { path: PathBuf, skipped: usize },

    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("mechanism failed on manipulated report {report:?}: {source}")]
    Manipulation { report: Vec<f64>, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

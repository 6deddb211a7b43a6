use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("agent index {index} out of range for a graph with {n} agents")]
    AgentOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("constraint kind mismatch: expected {expected}")]
    KindMismatch { expected: &'static str },

    #[error("failure probability for directed pair ({0}, {1}) is missing")]
    MissingProbability(usize, usize),

    #[error("failure probability {p} for directed pair ({i}, {j}) must lie in [0, 1)")]
    ProbabilityOutOfRange { i: usize, j: usize, p: f64 },

    #[error("beta = {beta} must lie in (0, {upper})")]
    BetaOutOfRange { beta: f64, upper: f64 },

    #[error("horizon T = {horizon} is too short: 8 a^2 omega = {bound}, need T >= {min_horizon}")]
    HorizonTooShort {
        horizon: usize,
        bound: f64,
        min_horizon: usize,
    },

    #[error("bandit query point with norm {norm} lies outside the feasible ball of radius {radius}")]
    QueryOutsideSet { norm: f64, radius: f64 },

    #[error("hindsight benchmark failed: {0}")]
    Benchmark(String),

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

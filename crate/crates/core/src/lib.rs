//! Distributed online convex optimization with pairwise coupling constraints
//! over lossy networks: a saddle-point method with full-information and
//! two-point bandit feedback.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod rng;
pub mod solver;

#[cfg(test)]
mod testing;

pub type Vector = nalgebra::DVector<f64>;

pub use channel::{FlagTrace, LinkFailureModel, NeighborCache};
pub use error::{Error, Result};
pub use graph::NetworkGraph;

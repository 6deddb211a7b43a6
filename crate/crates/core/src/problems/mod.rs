//! Cost oracles, pairwise constraints and feasible sets, plus the two
//! synthetic experiment streams (online QCQP and online logistic
//! regression).

mod constants;
mod constraint;
mod logistic;
mod qcqp;
mod sets;

pub use constants::ProblemConstants;
pub use constraint::{proximity_constraint, qcqp_constraint, ConstraintSet, PairwiseConstraint};
pub use logistic::{
    logistic_cost, logistic_cost_grad, LogisticBatch, LogisticCostRound, LogisticSettings,
    LogisticStream,
};
pub use qcqp::{qcqp_cost, qcqp_cost_grad, QcqpCostRound, QcqpSettings, QcqpStream};
pub use sets::{project_ball, sample_in_ball, FeasibleSet, ShrunkSet};

use crate::Vector;

/// A differentiable function of one agent's decision.
pub trait Objective {
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        (self.value(x), self.gradient(x))
    }
}

/// One agent's cost for one round.
pub trait LocalCost: Objective + Clone + Send + Sync {
    /// Time-averaged cost over a history of rounds.
    type Average: Objective + Send + Sync;

    fn time_average(rounds: &[&Self]) -> Self::Average;
}

/// Sequence of per-agent cost rounds, starting at round 1. Costs never
/// depend on the decisions played (oblivious environment).
pub trait CostStream: Send {
    type Cost: LocalCost;

    fn num_agents(&self) -> usize;
    fn dim(&self) -> usize;
    fn next_round(&mut self) -> Vec<Self::Cost>;
}

/// Everything an agent network needs to play one experiment.
#[derive(Debug, Clone)]
pub struct Problem<S> {
    pub set: FeasibleSet,
    pub constraints: ConstraintSet,
    pub stream: S,
}

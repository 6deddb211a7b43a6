//! Robust saddle-point iterations (full information and two-point bandit
//! feedback) and the parameter rules that accompany them.

mod params;
mod run;
mod step;
mod theory;

pub use params::{BanditParams, Feedback, SolverParams};
pub use run::{initial_decisions, run, RunOutput, Simulation};
pub use step::{
    bandit_step, full_info_step, sample_unit_sphere, two_point_estimate, AgentState, BanditQuery,
};
pub use theory::{coupling_constants, default_beta, derive_params, CouplingConstants, DerivedConstants};

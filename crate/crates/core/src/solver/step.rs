use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SolverParams;
use crate::channel::NeighborCache;
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::problems::{ConstraintSet, FeasibleSet, ShrunkSet};
use crate::Vector;

/// Primal decision and the multipliers `lambda_ij`, one per neighbor in
/// the order of `graph.neighbors(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: Vector,
    pub lambda: Vec<f64>,
}

/// Two evaluation points and the resulting gradient estimate of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditQuery {
    pub direction: Vector,
    pub plus: Vector,
    pub minus: Vector,
    pub estimate: Vector,
}

/// Uniform direction on the unit sphere (normalized Gaussian; draws with
/// norm below `1e-12` are redrawn).
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    loop {
        let g = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let norm = g.norm();
        if norm >= 1e-12 {
            return g / norm;
        }
    }
}

/// `d / (2 zeta) * (f(x + zeta u) - f(x - zeta u)) * u`.
pub fn two_point_estimate(f: impl Fn(&Vector) -> f64, x: &Vector, zeta: f64, u: &Vector) -> Vector {
    let d = x.len() as f64;
    let plus = x + u * zeta;
    let minus = x - u * zeta;
    u * (d / (2.0 * zeta) * (f(&plus) - f(&minus)))
}

/// One saddle-point iteration for every agent from the round's snapshot:
///
/// `q_i = grad_i + 2 sum_j lambda_ij grad_1 g_ij(x_i, x_{j->i})`,
/// `r_ij = g_ij(x_i, x_{j->i}) - delta eta lambda_ij`,
/// `x_i <- P(x_i - eta q_i)`, `lambda_ij <- [lambda_ij + eta r_ij]^+`.
///
/// Agent `i` reads only its own state and cache, so the in-place sweep is
/// a simultaneous update.
fn saddle_update(
    graph: &NetworkGraph,
    constraints: &ConstraintSet,
    params: &SolverParams,
    projection_radius: f64,
    states: &mut [AgentState],
    cache: &NeighborCache,
    cost_grads: &[Vector],
) -> Result<()> {
    let eta = params.eta;
    let shrink = params.delta * eta;
    for (i, (state, grad)) in states.iter_mut().zip(cost_grads).enumerate() {
        let offset = graph.pair_offset(i);
        let mut q = grad.clone();
        let mut r = Vec::with_capacity(state.lambda.len());
        for (slot, &lambda) in state.lambda.iter().enumerate() {
            let k = offset + slot;
            let (value, grad_g) = constraints.pair_value_and_grad(k, &state.x, cache.get(k));
            q += grad_g * (2.0 * lambda);
            r.push(value - shrink * lambda);
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("primal gradient"));
        }
        state.x = crate::problems::project_ball(&(&state.x - q * eta), projection_radius)?;
        for (lambda, r) in state.lambda.iter_mut().zip(r) {
            *lambda = (*lambda + eta * r).max(0.0);
        }
    }
    Ok(())
}

fn check_shapes(graph: &NetworkGraph, states: &[AgentState], n_grads: usize) -> Result<()> {
    let n = graph.num_agents();
    for got in [states.len(), n_grads] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    for (i, s) in states.iter().enumerate() {
        if s.lambda.len() != graph.degree(i) {
            return Err(Error::DimensionMismatch { expected: graph.degree(i), got: s.lambda.len() });
        }
    }
    Ok(())
}

/// Full-information update; `cost_grads[i]` is `grad f_i^{(t)}(x_i^{(t)})`.
pub fn full_info_step(
    graph: &NetworkGraph,
    constraints: &ConstraintSet,
    set: &FeasibleSet,
    params: &SolverParams,
    states: &mut [AgentState],
    cache: &NeighborCache,
    cost_grads: &[Vector],
) -> Result<()> {
    check_shapes(graph, states, cost_grads.len())?;
    saddle_update(graph, constraints, params, set.radius(), states, cache, cost_grads)
}

/// Two-point bandit update. `value_oracle(i, point)` returns
/// `f_i^{(t)}(point)` and is only ever called at `x_i +- zeta u_i`, both of
/// which are checked to lie in the feasible ball first.
#[allow(clippy::too_many_arguments)]
pub fn bandit_step<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    constraints: &ConstraintSet,
    set: &FeasibleSet,
    params: &SolverParams,
    states: &mut [AgentState],
    cache: &NeighborCache,
    value_oracle: impl Fn(usize, &Vector) -> f64,
    rng: &mut R,
) -> Result<Vec<BanditQuery>> {
    let bandit = params
        .bandit
        .ok_or_else(|| Error::InvalidArgument("bandit step needs bandit parameters".into()))?;
    check_shapes(graph, states, states.len())?;
    let shrunk = ShrunkSet::new(*set, bandit.alpha, bandit.interior_radius)?;
    let d = set.dim();
    let zeta = bandit.zeta;

    let mut queries = Vec::with_capacity(states.len());
    for (i, state) in states.iter().enumerate() {
        let u = sample_unit_sphere(rng, d);
        let plus = &state.x + &u * zeta;
        let minus = &state.x - &u * zeta;
        for p in [&plus, &minus] {
            let norm = p.norm();
            if norm > set.radius() {
                return Err(Error::QueryOutsideSet { norm, radius: set.radius() });
            }
        }
        let f_plus = value_oracle(i, &plus);
        let f_minus = value_oracle(i, &minus);
        let estimate = &u * (d as f64 / (2.0 * zeta) * (f_plus - f_minus));
        queries.push(BanditQuery { direction: u, plus, minus, estimate });
    }
    let grads: Vec<Vector> = queries.iter().map(|q| q.estimate.clone()).collect();
    saddle_update(graph, constraints, params, shrunk.radius(), states, cache, &grads)?;
    Ok(queries)
}

#![allow(dead_code)]

use saddle_oco::channel::FlagTrace;
use saddle_oco::graph::NetworkGraph;
use saddle_oco::problems::{project_ball, ConstraintSet, CostStream, Objective};
use saddle_oco::Vector;

/// Replays an arbitrary cost sequence.
#[derive(Debug, Clone)]
pub struct Replay<C> {
    pub rounds: Vec<Vec<C>>,
    pub dim: usize,
    pub next: usize,
}

impl<C: saddle_oco::problems::LocalCost> CostStream for Replay<C> {
    type Cost = C;

    fn num_agents(&self) -> usize {
        self.rounds[0].len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn next_round(&mut self) -> Vec<C> {
        let round = self.rounds[self.next.min(self.rounds.len() - 1)].clone();
        self.next += 1;
        round
    }
}

/// `(x^{(t)}, lambda^{(t)})` for `t = 1..=T`.
pub type Trajectory = Vec<(Vec<Vector>, Vec<Vec<f64>>)>;

/// Plain saddle-point iteration written directly from the update rules.
/// Without a trace every neighbor value is the true current decision;
/// with one, neighbor values are replayed from the delivery flags.
#[allow(clippy::too_many_arguments)]
pub fn reference_trajectory<C: Objective>(
    graph: &NetworkGraph,
    constraints: &ConstraintSet,
    radius: f64,
    eta: f64,
    delta: f64,
    x1: Vec<Vector>,
    history: &[Vec<C>],
    trace: Option<&FlagTrace>,
) -> Trajectory {
    let n = graph.num_agents();
    let pairs = graph.directed_pairs();
    let horizon = history.len();
    let mut x = x1;
    let mut lambda: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; graph.degree(i)]).collect();
    let mut last_seen: Vec<Vector> = pairs.iter().map(|&(_, j)| x[j].clone()).collect();
    let mut out = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        out.push((x.clone(), lambda.clone()));
        for (k, &(_, j)) in pairs.iter().enumerate() {
            let delivered = t == 1 || trace.is_none_or(|tr| tr.rounds[t - 1][k]);
            if delivered {
                last_seen[k] = x[j].clone();
            }
        }
        if t == horizon {
            break;
        }
        let mut next_x = Vec::with_capacity(n);
        let mut next_lambda = Vec::with_capacity(n);
        for i in 0..n {
            let mut q = history[t - 1][i].gradient(&x[i]);
            let mut lam = Vec::new();
            for (slot, &j) in graph.neighbors(i).unwrap().iter().enumerate() {
                let k = graph.pair_index(i, j).unwrap();
                let other = if trace.is_some() { &last_seen[k] } else { &x[j] };
                let (g, grad) = constraints.pair_value_and_grad(k, &x[i], other);
                let l = lambda[i][slot];
                q += grad * (2.0 * l);
                lam.push((l + eta * (g - delta * eta * l)).max(0.0));
            }
            next_x.push(project_ball(&(&x[i] - q * eta), radius).unwrap());
            next_lambda.push(lam);
        }
        x = next_x;
        lambda = next_lambda;
    }
    out
}

pub fn vectors(rows: &[&[f64]]) -> Vec<Vector> {
    rows.iter().map(|r| Vector::from_column_slice(r)).collect()
}

/// Per-round invariants of the saddle-point iteration; returns the first
/// violated one.
pub fn check_states(
    graph: &NetworkGraph,
    constraints: &ConstraintSet,
    states: &[saddle_oco::solver::AgentState],
    radius: f64,
    symmetric_duals: bool,
) -> Result<(), String> {
    for (i, s) in states.iter().enumerate() {
        if s.x.norm() > radius * (1.0 + 1e-9) {
            return Err(format!("agent {i} outside the ball: {}", s.x.norm()));
        }
        if let Some(l) = s.lambda.iter().find(|l| !(**l >= 0.0)) {
            return Err(format!("agent {i} has multiplier {l}"));
        }
    }
    for (k, (i, j)) in graph.directed_pairs().into_iter().enumerate() {
        let back = graph.pair_index(j, i).unwrap();
        let gij = constraints.pair_value(k, &states[i].x, &states[j].x);
        let gji = constraints.pair_value(back, &states[j].x, &states[i].x);
        if (gij - gji).abs() > 1e-12 * (1.0 + gij.abs()) {
            return Err(format!("g({i},{j}) = {gij} but g({j},{i}) = {gji}"));
        }
        if symmetric_duals {
            let lij = states[i].lambda[position(graph, i, j)];
            let lji = states[j].lambda[position(graph, j, i)];
            if lij != lji {
                return Err(format!("lambda({i},{j}) = {lij} but lambda({j},{i}) = {lji}"));
            }
        }
    }
    Ok(())
}

/// Index of `j` in agent `i`'s neighbor list.
pub fn position(graph: &NetworkGraph, i: usize, j: usize) -> usize {
    graph.neighbors(i).unwrap().iter().position(|&n| n == j).unwrap()
}

/// Largest relative gap between a gradient and central differences.
pub fn gradient_gap(f: impl Fn(&Vector) -> f64, grad: &Vector, x: &Vector) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for c in 0..x.len() {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[c] += h;
        minus[c] -= h;
        let fd = (f(&plus) - f(&minus)) / (2.0 * h);
        worst = worst.max((fd - grad[c]).abs() / (1.0 + grad[c].abs()));
    }
    worst
}

//! Regret against the best fixed decisions in hindsight and cumulative
//! pairwise constraint violation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::problems::{project_ball, ConstraintSet, FeasibleSet, LocalCost, Objective};
use crate::Vector;

/// Metrics of one round, evaluated at the decisions actually played.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub decisions: Vec<Vector>,
    /// `sum_i f_i^{(t)}(x_i^{(t)})`.
    pub total_cost: f64,
    /// `g_ij(x_i^{(t)}, x_j^{(t)})` per directed pair, true neighbor values.
    pub pair_values: Vec<f64>,
    pub delivered_frac: f64,
    /// Largest bandit query norm of the round, if any queries were made.
    pub max_query_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub rounds: Vec<RoundRecord>,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }
}

/// Iteration limits and tolerances of the offline benchmark solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HindsightBudget {
    pub max_outer: usize,
    pub max_inner: usize,
    pub feasibility_tol: f64,
    pub stationarity_tol: f64,
    pub initial_penalty: f64,
    pub max_penalty: f64,
}

impl Default for HindsightBudget {
    fn default() -> Self {
        Self {
            max_outer: 60,
            max_inner: 5000,
            feasibility_tol: 1e-6,
            stationarity_tol: 1e-8,
            initial_penalty: 10.0,
            max_penalty: 1e8,
        }
    }
}

/// Best fixed decisions in hindsight and their per-round costs.
#[derive(Debug, Clone, PartialEq)]
pub struct HindsightBenchmark {
    pub decisions: Vec<Vector>,
    /// `sum_i f_i^{(t)}(x_i^*)` for each round.
    pub per_round_cost: Vec<f64>,
    pub aggregate_cost: f64,
    /// `max_ij g_ij(x_i^*, x_j^*)` (0 on an edgeless graph).
    pub max_residual: f64,
    /// Norm of the projected Lagrangian gradient at the returned point.
    pub stationarity: f64,
    /// `max_e |mu_e g_e(x^*)|`.
    pub complementarity: f64,
    pub multipliers: Vec<f64>,
    pub outer_iterations: usize,
}

struct Averaged<'a, A> {
    graph: &'a NetworkGraph,
    constraints: &'a ConstraintSet,
    costs: Vec<A>,
    radius: f64,
}

impl<A: Objective> Averaged<'_, A> {
    fn objective(&self, xs: &[Vector]) -> f64 {
        self.costs.iter().zip(xs).map(|(f, x)| f.value(x)).sum()
    }

    fn edge_values(&self, xs: &[Vector]) -> Vec<f64> {
        self.graph
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(i, j))| self.constraints.edge(e).value(&xs[i], &xs[j]))
            .collect()
    }

    /// Gradient of `F(x) + sum_e w_e g_e(x)` for per-edge weights `w`.
    fn weighted_gradient(&self, xs: &[Vector], weights: &[f64]) -> Vec<Vector> {
        let mut grads: Vec<Vector> = self.costs.iter().zip(xs).map(|(f, x)| f.gradient(x)).collect();
        for (e, &(i, j)) in self.graph.edges().iter().enumerate() {
            let w = weights[e];
            if w == 0.0 {
                continue;
            }
            let c = self.constraints.edge(e);
            grads[i] += c.grad_first(&xs[i], &xs[j]) * w;
            grads[j] += c.grad_second(&xs[i], &xs[j]) * w;
        }
        grads
    }

    /// Augmented Lagrangian `F + 1/(2 rho) sum_e ([mu_e + rho g_e]^+^2 - mu_e^2)`.
    fn augmented(&self, xs: &[Vector], mu: &[f64], rho: f64) -> f64 {
        let penalty: f64 = self
            .edge_values(xs)
            .iter()
            .zip(mu)
            .map(|(g, m)| {
                let s = (m + rho * g).max(0.0);
                (s * s - m * m) / (2.0 * rho)
            })
            .sum();
        self.objective(xs) + penalty
    }

    /// Value and gradient of the augmented Lagrangian in one pass.
    fn augmented_with_gradient(&self, xs: &[Vector], mu: &[f64], rho: f64) -> (f64, Vec<Vector>) {
        let mut value = 0.0;
        let mut grads = Vec::with_capacity(xs.len());
        for (f, x) in self.costs.iter().zip(xs) {
            let (v, g) = f.value_and_gradient(x);
            value += v;
            grads.push(g);
        }
        for (e, &(i, j)) in self.graph.edges().iter().enumerate() {
            let c = self.constraints.edge(e);
            let m = mu[e];
            let s = (m + rho * c.value(&xs[i], &xs[j])).max(0.0);
            value += (s * s - m * m) / (2.0 * rho);
            if s > 0.0 {
                grads[i] += c.grad_first(&xs[i], &xs[j]) * s;
                grads[j] += c.grad_second(&xs[i], &xs[j]) * s;
            }
        }
        (value, grads)
    }

    fn project(&self, xs: Vec<Vector>) -> Vec<Vector> {
        xs.into_iter()
            .map(|x| project_ball(&x, self.radius).expect("finite iterate"))
            .collect()
    }

    /// Accelerated projected gradient with backtracking and adaptive
    /// restart on the augmented Lagrangian.
    fn inner_solve(&self, xs: Vec<Vector>, mu: &[f64], rho: f64, budget: &HindsightBudget) -> Vec<Vector> {
        let mut step = 1.0 / (1.0 + rho);
        let mut x = xs;
        let mut y = x.clone();
        let mut theta = 1.0_f64;
        for _ in 0..budget.max_inner {
            let (fy, grad) = self.augmented_with_gradient(&y, mu, rho);
            let (next, mapping) = loop {
                let trial = self.project(y.iter().zip(&grad).map(|(v, g)| v - g * step).collect());
                let diff: Vec<Vector> = trial.iter().zip(&y).map(|(a, b)| a - b).collect();
                let lin: f64 = diff.iter().zip(&grad).map(|(d, g)| d.dot(g)).sum();
                let sq: f64 = diff.iter().map(|d| d.norm_squared()).sum();
                let ft = self.augmented(&trial, mu, rho);
                if ft <= fy + lin + sq / (2.0 * step) + 1e-14 * fy.abs() || step < 1e-16 {
                    break (trial, sq.sqrt() / step);
                }
                step *= 0.5;
            };
            if mapping <= budget.stationarity_tol {
                return next;
            }
            // restart when the momentum direction opposes the gradient step
            let uphill: f64 = y
                .iter()
                .zip(&next)
                .zip(&x)
                .map(|((yv, n), xv)| (yv - n).dot(&(n - xv)))
                .sum();
            if uphill > 0.0 {
                theta = 1.0;
                y = next.clone();
            } else {
                let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                let beta = (theta - 1.0) / theta_next;
                y = next.iter().zip(&x).map(|(n, xv)| n + (n - xv) * beta).collect();
                theta = theta_next;
            }
            x = next;
            step *= 1.05;
        }
        x
    }

    /// Projected-gradient residual of the ordinary Lagrangian.
    fn stationarity(&self, xs: &[Vector], mu: &[f64]) -> f64 {
        let grad = self.weighted_gradient(xs, mu);
        xs.iter()
            .zip(&grad)
            .map(|(x, g)| (x - project_ball(&(x - g), self.radius).expect("finite")).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `theta` in `[0, 1]` keeping `theta * xs` feasible, found by
    /// bisection; the origin must be strictly feasible.
    fn pull_towards_origin(&self, xs: &[Vector]) -> Option<Vec<Vector>> {
        let origin = vec![Vector::zeros(xs[0].len()); xs.len()];
        if self.edge_values(&origin).iter().any(|&g| g >= 0.0) {
            return None;
        }
        let scaled = |theta: f64| -> Vec<Vector> { xs.iter().map(|x| x * theta).collect() };
        let feasible = |ys: &[Vector]| self.edge_values(ys).iter().all(|&g| g <= 0.0);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible(&scaled(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(scaled(lo))
    }
}

fn max_or_zero(values: &[f64]) -> f64 {
    values.iter().copied().reduce(f64::max).unwrap_or(0.0)
}

/// Solves `min sum_t sum_i f_i^{(t)}(x_i)` over `x_i in X` subject to
/// `g_ij(x_i, x_j) <= 0` on every edge, by the method of multipliers on the
/// time-averaged objective. The best iterate feasible to
/// `budget.feasibility_tol` is returned; if none is found the final iterate
/// is pulled towards the origin until feasible.
pub fn solve_hindsight<C: LocalCost>(
    history: &[Vec<C>],
    graph: &NetworkGraph,
    constraints: &ConstraintSet,
    set: &FeasibleSet,
    budget: &HindsightBudget,
) -> Result<HindsightBenchmark> {
    let n = graph.num_agents();
    if history.is_empty() {
        return Err(Error::Benchmark("empty cost history".into()));
    }
    if let Some(round) = history.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: round.len() });
    }
    let costs = (0..n)
        .map(|i| {
            let rounds: Vec<&C> = history.iter().map(|r| &r[i]).collect();
            C::time_average(&rounds)
        })
        .collect();
    let problem = Averaged { graph, constraints, costs, radius: set.radius() };
    let m = graph.num_edges();

    let mut xs = vec![Vector::zeros(set.dim()); n];
    let mut mu = vec![0.0; m];
    let mut rho = budget.initial_penalty;
    let mut previous_violation = f64::INFINITY;
    let mut best: Option<(f64, Vec<Vector>, Vec<f64>)> = None;
    let mut outer_iterations = 0;

    for _ in 0..budget.max_outer {
        outer_iterations += 1;
        xs = problem.inner_solve(xs, &mu, rho, budget);
        let g = problem.edge_values(&xs);
        for (m_e, g_e) in mu.iter_mut().zip(&g) {
            *m_e = (*m_e + rho * g_e).max(0.0);
        }
        let violation = max_or_zero(&g).max(0.0);
        if violation <= budget.feasibility_tol {
            let value = problem.objective(&xs);
            if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
                best = Some((value, xs.clone(), mu.clone()));
            }
            if problem.stationarity(&xs, &mu) <= budget.stationarity_tol.max(1e-12) * 10.0 {
                break;
            }
        }
        if violation > 0.25 * previous_violation {
            rho = (rho * 10.0).min(budget.max_penalty);
        }
        previous_violation = violation;
    }

    let (decisions, mu) = match best {
        Some((_, xs, mu)) => (xs, mu),
        None => {
            let pulled = problem.pull_towards_origin(&xs).ok_or_else(|| {
                Error::Benchmark("no feasible iterate and the origin is not strictly feasible".into())
            })?;
            (pulled, mu)
        }
    };

    let g = problem.edge_values(&decisions);
    let max_residual = max_or_zero(&g);
    let complementarity = g.iter().zip(&mu).map(|(g, m)| (g * m).abs()).fold(0.0, f64::max);
    let stationarity = problem.stationarity(&decisions, &mu);
    let per_round_cost: Vec<f64> = history
        .iter()
        .map(|round| round.iter().zip(&decisions).map(|(f, x)| f.value(x)).sum())
        .collect();
    Ok(HindsightBenchmark {
        aggregate_cost: per_round_cost.iter().sum(),
        per_round_cost,
        decisions,
        max_residual,
        stationarity,
        complementarity,
        multipliers: mu,
        outer_iterations,
    })
}

/// Cumulative regret and its relative time average.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    pub cumulative: Vec<f64>,
    /// `Reg(t) / (t Reg(1))`, or `Reg(t) / t` when `normalized` is false.
    pub relative: Vec<f64>,
    pub normalized: bool,
}

pub fn regret_series(record: &RunRecord, benchmark: &HindsightBenchmark) -> Result<RegretSeries> {
    if record.horizon() != benchmark.per_round_cost.len() {
        return Err(Error::DimensionMismatch {
            expected: record.horizon(),
            got: benchmark.per_round_cost.len(),
        });
    }
    let mut cumulative = Vec::with_capacity(record.horizon());
    let mut acc = 0.0;
    for (round, bench) in record.rounds.iter().zip(&benchmark.per_round_cost) {
        acc += round.total_cost - bench;
        cumulative.push(acc);
    }
    let (relative, normalized) = relative_average(&cumulative);
    Ok(RegretSeries { cumulative, relative, normalized })
}

/// `s(t) / (t s(1))`, falling back to `s(t) / t` when `s(1) = 0`.
fn relative_average(cumulative: &[f64]) -> (Vec<f64>, bool) {
    let first = cumulative.first().copied().unwrap_or(0.0);
    let normalized = first != 0.0;
    let scale = if normalized { first } else { 1.0 };
    let relative = cumulative
        .iter()
        .enumerate()
        .map(|(k, v)| v / ((k + 1) as f64 * scale))
        .collect();
    (relative, normalized)
}

/// Signed cumulative violation per directed pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationSeries {
    /// `per_pair[k][t - 1] = Vio_k(t)`.
    pub per_pair: Vec<Vec<f64>>,
    /// `Vio_k(t) / (t Vio_k(1))`, same zero guard as regret.
    pub per_pair_relative: Vec<Vec<f64>>,
    pub per_pair_normalized: Vec<bool>,
    /// `max_k Vio_k(t)`.
    pub max_cumulative: Vec<f64>,
    /// Relative time average of the edge-mean violation,
    /// `mean_k Vio_k(t) / (t mean_k Vio_k(1))`.
    pub mean_relative: Vec<f64>,
    pub mean_normalized: bool,
}

pub fn violation_series(record: &RunRecord) -> ViolationSeries {
    let pairs = record.rounds.first().map_or(0, |r| r.pair_values.len());
    let horizon = record.horizon();
    let mut per_pair = vec![Vec::with_capacity(horizon); pairs];
    let mut mean_cumulative = Vec::with_capacity(horizon);
    let mut max_cumulative = Vec::with_capacity(horizon);
    let mut acc = vec![0.0; pairs];
    for round in &record.rounds {
        for ((a, v), series) in acc.iter_mut().zip(&round.pair_values).zip(&mut per_pair) {
            *a += v;
            series.push(*a);
        }
        max_cumulative.push(max_or_zero(&acc));
        let mean = if pairs == 0 { 0.0 } else { acc.iter().sum::<f64>() / pairs as f64 };
        mean_cumulative.push(mean);
    }
    let (per_pair_relative, per_pair_normalized) =
        per_pair.iter().map(|s| relative_average(s)).unzip();
    let (mean_relative, mean_normalized) = relative_average(&mean_cumulative);
    ViolationSeries {
        per_pair,
        per_pair_relative,
        per_pair_normalized,
        max_cumulative,
        mean_relative,
        mean_normalized,
    }
}

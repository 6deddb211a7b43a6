use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ConstraintSet, CostStream, FeasibleSet, LocalCost, Objective, PairwiseConstraint, Problem};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::rng::{keyed_rng, Stream};
use crate::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticSettings {
    /// Uniform range of the proximity bounds `b_ij`.
    pub proximity_bound_range: [f64; 2],
    /// Ground-truth weights are clipped to this norm; `None` uses the set radius.
    pub weight_norm_cap: Option<f64>,
}

impl Default for LogisticSettings {
    fn default() -> Self {
        Self {
            proximity_bound_range: [0.5, 1.5],
            weight_norm_cap: None,
        }
    }
}

impl LogisticSettings {
    pub fn validate(&self, errors: &mut Vec<String>) {
        let [lo, hi] = self.proximity_bound_range;
        if !(lo > 0.0 && lo <= hi) {
            errors.push("logistic.proximity_bound_range must satisfy 0 < lo <= hi".into());
        }
        if let Some(cap) = self.weight_norm_cap {
            if cap <= 0.0 {
                errors.push("logistic.weight_norm_cap must be positive".into());
            }
        }
    }
}

/// One labelled sample: `f(x) = log(1 + exp(-label * psi^T x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticCostRound {
    pub psi: Vector,
    pub label: f64,
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + exp(-t))` without overflow.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn logistic_cost(round: &LogisticCostRound, x: &Vector) -> Result<f64> {
    check_dim(round, x)?;
    Ok(round.value(x))
}

pub fn logistic_cost_grad(round: &LogisticCostRound, x: &Vector) -> Result<Vector> {
    check_dim(round, x)?;
    Ok(round.gradient(x))
}

fn check_dim(round: &LogisticCostRound, x: &Vector) -> Result<()> {
    if x.len() != round.psi.len() {
        return Err(Error::DimensionMismatch { expected: round.psi.len(), got: x.len() });
    }
    Ok(())
}

impl Objective for LogisticCostRound {
    fn value(&self, x: &Vector) -> f64 {
        softplus(-self.label * self.psi.dot(x))
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let margin = self.label * self.psi.dot(x);
        &self.psi * (-self.label * sigmoid(-margin))
    }
}

/// Mean logistic loss over a batch of samples, stored as `label * psi`
/// rows of a flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticBatch {
    dim: usize,
    signed_features: Vec<f64>,
}

impl LogisticBatch {
    pub fn len(&self) -> usize {
        self.signed_features.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.signed_features.is_empty()
    }

    fn margins(&self, x: &Vector) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        let xs = x.as_slice().to_vec();
        self.signed_features.chunks_exact(self.dim).map(move |row| {
            let m = row.iter().zip(&xs).map(|(a, b)| a * b).sum::<f64>();
            (row, m)
        })
    }
}

impl Objective for LogisticBatch {
    fn value(&self, x: &Vector) -> f64 {
        let total: f64 = self.margins(x).map(|(_, m)| softplus(-m)).sum();
        total / self.len().max(1) as f64
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = vec![0.0; self.dim];
        for (row, m) in self.margins(x) {
            let w = sigmoid(-m);
            for (gk, rk) in g.iter_mut().zip(row) {
                *gk -= w * rk;
            }
        }
        Vector::from_vec(g) / self.len().max(1) as f64
    }

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let mut total = 0.0;
        let mut g = vec![0.0; self.dim];
        for (row, m) in self.margins(x) {
            // softplus(-m) and sigmoid(-m) share exp(-|m|)
            let e = (-m.abs()).exp();
            total += (-m).max(0.0) + e.ln_1p();
            let w = if m <= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            for (gk, rk) in g.iter_mut().zip(row) {
                *gk -= w * rk;
            }
        }
        let count = self.len().max(1) as f64;
        (total / count, Vector::from_vec(g) / count)
    }
}

impl LocalCost for LogisticCostRound {
    type Average = LogisticBatch;

    fn time_average(rounds: &[&Self]) -> LogisticBatch {
        let dim = rounds.first().map_or(0, |r| r.psi.len());
        let mut signed_features = Vec::with_capacity(dim * rounds.len());
        for r in rounds {
            signed_features.extend(r.psi.iter().map(|v| v * r.label));
        }
        LogisticBatch { dim, signed_features }
    }
}

/// Online logistic regression: fresh Gaussian features each round with
/// labels drawn from the logistic model of a fixed per-agent weight.
#[derive(Debug, Clone)]
pub struct LogisticStream {
    dim: usize,
    weights: Vec<Vector>,
    rng: ChaCha8Rng,
}

impl LogisticStream {
    pub fn init(
        graph: &NetworkGraph,
        set: FeasibleSet,
        settings: LogisticSettings,
        seed: u64,
    ) -> Result<Problem<LogisticStream>> {
        let mut errors = Vec::new();
        settings.validate(&mut errors);
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        let d = set.dim();
        let cap = settings.weight_norm_cap.unwrap_or(set.radius());

        let mut rng = keyed_rng(seed, Stream::Problem, 0);
        let weights = (0..graph.num_agents())
            .map(|_| {
                let w = Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                let norm = w.norm();
                if norm > cap { w * (cap / norm) } else { w }
            })
            .collect();

        let mut rng = keyed_rng(seed, Stream::Problem, 1);
        let [lo, hi] = settings.proximity_bound_range;
        let per_edge = graph
            .edges()
            .iter()
            .map(|_| PairwiseConstraint::Proximity {
                bound: if lo == hi { lo } else { rng.random_range(lo..=hi) },
            })
            .collect();
        let constraints = ConstraintSet::new(graph, per_edge)?;

        let stream = LogisticStream {
            dim: d,
            weights,
            rng: keyed_rng(seed, Stream::Problem, 2),
        };
        Ok(Problem { set, constraints, stream })
    }

    /// Replaces the ground-truth weights (test hook).
    pub fn with_weights(mut self, weights: Vec<Vector>) -> Self {
        self.weights = weights;
        self
    }

    pub fn weights(&self) -> &[Vector] {
        &self.weights
    }
}

impl CostStream for LogisticStream {
    type Cost = LogisticCostRound;

    fn num_agents(&self) -> usize {
        self.weights.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn next_round(&mut self) -> Vec<LogisticCostRound> {
        let d = self.dim;
        let rng = &mut self.rng;
        self.weights
            .iter()
            .map(|w| {
                let psi = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
                let p_positive = sigmoid(psi.dot(w));
                let label = if rng.random::<f64>() < p_positive { 1.0 } else { -1.0 };
                LogisticCostRound { psi, label }
            })
            .collect()
    }
}

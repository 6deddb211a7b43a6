use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    sample_in_ball, ConstraintSet, CostStream, FeasibleSet, LocalCost, Objective,
    PairwiseConstraint, Problem,
};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::linalg::{clamp_eigenvalues, symmetrize};
use crate::rng::{keyed_rng, Stream};
use crate::Vector;

/// Generator parameters of the drifting online QCQP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QcqpSettings {
    /// Half-width of the uniform per-round perturbations of `A` and `b`.
    pub perturbation: f64,
    /// Eigenvalue clamp range for `A`.
    pub eigenvalue_range: [f64; 2],
    /// Entry clamp range for `b`.
    pub linear_range: [f64; 2],
    /// Raw constraint matrix is `scale * W W^T / (2d)` with `W` standard normal.
    pub constraint_matrix_scale: f64,
    /// Standard deviation of the raw linear constraint term.
    pub constraint_linear_std: f64,
    /// Uniform range of the raw constraint offset.
    pub constraint_offset_range: [f64; 2],
    /// Slack enforced below the sampled constraint minimum.
    pub feasibility_margin: f64,
    /// Number of random points of `X^2` used to place the offset.
    pub feasibility_samples: usize,
}

impl Default for QcqpSettings {
    fn default() -> Self {
        Self {
            perturbation: 0.01,
            eigenvalue_range: [0.0, 10.0],
            linear_range: [-10.0, 10.0],
            constraint_matrix_scale: 1.0,
            constraint_linear_std: 1.0,
            constraint_offset_range: [-1.0, 0.0],
            feasibility_margin: 0.1,
            feasibility_samples: 1000,
        }
    }
}

impl QcqpSettings {
    pub fn validate(&self, errors: &mut Vec<String>) {
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errors.push(format!("qcqp.{msg}"));
            }
        };
        check(self.perturbation >= 0.0, "perturbation must be nonnegative");
        check(
            self.eigenvalue_range[0] <= self.eigenvalue_range[1],
            "eigenvalue_range must be ordered",
        );
        check(self.linear_range[0] <= self.linear_range[1], "linear_range must be ordered");
        check(self.constraint_matrix_scale >= 0.0, "constraint_matrix_scale must be nonnegative");
        check(self.constraint_linear_std >= 0.0, "constraint_linear_std must be nonnegative");
        check(
            self.constraint_offset_range[0] <= self.constraint_offset_range[1],
            "constraint_offset_range must be ordered",
        );
        check(self.feasibility_margin >= 0.0, "feasibility_margin must be nonnegative");
    }
}

/// `f(x) = 1/2 x^T A x + x^T b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcqpCostRound {
    pub a: DMatrix<f64>,
    pub b: Vector,
}

pub fn qcqp_cost(round: &QcqpCostRound, x: &Vector) -> Result<f64> {
    check_dim(round, x)?;
    Ok(round.value(x))
}

pub fn qcqp_cost_grad(round: &QcqpCostRound, x: &Vector) -> Result<Vector> {
    check_dim(round, x)?;
    Ok(round.gradient(x))
}

fn check_dim(round: &QcqpCostRound, x: &Vector) -> Result<()> {
    if x.len() != round.b.len() {
        return Err(Error::DimensionMismatch { expected: round.b.len(), got: x.len() });
    }
    Ok(())
}

impl Objective for QcqpCostRound {
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.a * x)) + x.dot(&self.b)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.a * x + &self.b
    }
}

impl LocalCost for QcqpCostRound {
    type Average = QcqpCostRound;

    fn time_average(rounds: &[&Self]) -> Self {
        let d = rounds.first().map_or(0, |r| r.b.len());
        let mut a = DMatrix::zeros(d, d);
        let mut b = Vector::zeros(d);
        for r in rounds {
            a += &r.a;
            b += &r.b;
        }
        let k = rounds.len().max(1) as f64;
        QcqpCostRound { a: a / k, b: b / k }
    }
}

/// Online QCQP: Wishart initial curvature, Gaussian initial linear terms,
/// then a clamped random walk of both.
#[derive(Debug, Clone)]
pub struct QcqpStream {
    settings: QcqpSettings,
    dim: usize,
    current: Vec<QcqpCostRound>,
    started: bool,
    step_rng: ChaCha8Rng,
}

impl QcqpStream {
    pub fn init(
        graph: &NetworkGraph,
        set: FeasibleSet,
        settings: QcqpSettings,
        seed: u64,
    ) -> Result<Problem<QcqpStream>> {
        let mut errors = Vec::new();
        settings.validate(&mut errors);
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        let n = graph.num_agents();
        let d = set.dim();

        let mut rng = keyed_rng(seed, Stream::Problem, 0);
        let current = (0..n)
            .map(|_| {
                let z = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
                let a = &z * z.transpose();
                let mean: f64 = rng.random();
                let variance: f64 = rng.random();
                let normal = Normal::new(mean, variance.sqrt()).expect("finite parameters");
                let b = Vector::from_fn(d, |_, _| normal.sample(&mut rng));
                QcqpCostRound { a, b }
            })
            .collect();

        let mut rng = keyed_rng(seed, Stream::Problem, 1);
        let per_edge = graph
            .edges()
            .iter()
            .map(|_| symmetric_constraint(&mut rng, &set, &settings))
            .collect();
        let constraints = ConstraintSet::new(graph, per_edge)?;

        let stream = QcqpStream {
            settings,
            dim: d,
            current,
            started: false,
            step_rng: keyed_rng(seed, Stream::Problem, 2),
        };
        Ok(Problem { set, constraints, stream })
    }

    pub fn settings(&self) -> &QcqpSettings {
        &self.settings
    }

    fn advance(&mut self) {
        let d = self.dim;
        let w = self.settings.perturbation;
        let [lo, hi] = self.settings.eigenvalue_range;
        let [blo, bhi] = self.settings.linear_range;
        let rng = &mut self.step_rng;
        for round in &mut self.current {
            let delta_a = DMatrix::from_fn(d, d, |_, _| uniform(rng, w));
            let delta_b = Vector::from_fn(d, |_, _| uniform(rng, w));
            let a = &round.a + symmetrize(&delta_a);
            round.a = clamp_eigenvalues(&a, lo, hi);
            round.b = (&round.b + delta_b).map(|v| v.clamp(blo, bhi));
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    if half_width == 0.0 {
        // still consume the draw so the stream layout does not depend on it
        let _: f64 = rng.random();
        return 0.0;
    }
    rng.random_range(-half_width..=half_width)
}

impl CostStream for QcqpStream {
    type Cost = QcqpCostRound;

    fn num_agents(&self) -> usize {
        self.current.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn next_round(&mut self) -> Vec<QcqpCostRound> {
        if self.started {
            self.advance();
        }
        self.started = true;
        self.current.clone()
    }
}

/// Block-swap permutation applied to a stacked `[u; v]`.
fn swap_halves(v: &Vector) -> Vector {
    let d = v.len() / 2;
    Vector::from_fn(2 * d, |k, _| v[(k + d) % (2 * d)])
}

fn swap_blocks(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows() / 2;
    DMatrix::from_fn(2 * d, 2 * d, |r, c| m[((r + d) % (2 * d), (c + d) % (2 * d))])
}

/// Draws raw `(S', h', q')`, symmetrizes so that `g(u, v) = g(v, u)`, then
/// lowers `q` until a sampled point of `X^2` is feasible with margin.
fn symmetric_constraint(
    rng: &mut ChaCha8Rng,
    set: &FeasibleSet,
    settings: &QcqpSettings,
) -> PairwiseConstraint {
    let d = set.dim();
    let w = DMatrix::<f64>::from_fn(2 * d, 2 * d, |_, _| StandardNormal.sample(rng));
    let raw = &w * w.transpose() * (settings.constraint_matrix_scale / (2 * d) as f64);
    let m = symmetrize(&raw);
    let s = (&m + swap_blocks(&m)) * 0.5;

    let h_raw = Vector::from_fn(2 * d, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        settings.constraint_linear_std * z
    });
    let h = (&h_raw + swap_halves(&h_raw)) * 0.5;
    let [qlo, qhi] = settings.constraint_offset_range;
    let q_raw = if qlo == qhi { qlo } else { rng.random_range(qlo..=qhi) };

    let unshifted = PairwiseConstraint::Quadratic { s: s.clone(), h: h.clone(), q: q_raw };
    let sampled_min = (0..settings.feasibility_samples)
        .map(|_| {
            let u = sample_in_ball(rng, d, set.radius());
            let v = sample_in_ball(rng, d, set.radius());
            unshifted.value(&u, &v)
        })
        .fold(f64::INFINITY, f64::min);
    let shift = sampled_min.max(0.0) + settings.feasibility_margin;
    PairwiseConstraint::Quadratic { s, h, q: q_raw - shift }
}

impl Problem<QcqpStream> {
    /// Flat text dump of the fixed constraints and the current cost round:
    /// one object per line, matrices row-major.
    pub fn dump_parameters(&self, graph: &NetworkGraph) -> String {
        let mut out = String::new();
        let row_major = |m: &DMatrix<f64>| -> String {
            let mut s = String::new();
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let _ = write!(s, " {}", m[(r, c)]);
                }
            }
            s
        };
        let flat = |v: &Vector| v.iter().map(|x| format!(" {x}")).collect::<String>();
        for (i, round) in self.stream.current.iter().enumerate() {
            let _ = writeln!(out, "A {i}{}", row_major(&round.a));
            let _ = writeln!(out, "b {i}{}", flat(&round.b));
        }
        for (e, &(i, j)) in graph.edges().iter().enumerate() {
            if let PairwiseConstraint::Quadratic { s, h, q } = self.constraints.edge(e) {
                let _ = writeln!(out, "S {i} {j}{}", row_major(s));
                let _ = writeln!(out, "h {i} {j}{}", flat(h));
                let _ = writeln!(out, "q {i} {j} {q}");
            }
        }
        out
    }
}

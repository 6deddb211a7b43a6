use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_in_ball, ConstraintSet, FeasibleSet, Objective};
use crate::error::{Error, Result};

/// Regularity constants of an instance: cost Lipschitz constant `g`,
/// constraint Lipschitz constant `g_tilde`, constraint gradient Lipschitz
/// constant `l`, constraint magnitude bound `c` and set radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub g: f64,
    pub g_tilde: f64,
    pub l: f64,
    pub c: f64,
    pub radius: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("G", self.g),
            ("G_tilde", self.g_tilde),
            ("L", self.l),
            ("C", self.c),
            ("R", self.radius),
        ];
        let bad: Vec<String> = fields
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(k, v)| format!("constant {k} must be positive, got {v}"))
            .collect();
        if bad.is_empty() { Ok(()) } else { Err(Error::Config(bad)) }
    }

    /// Sample-max estimates over `samples` random points of `X`.
    /// `costs` should cover the rounds the estimate is meant to represent.
    pub fn estimate<O: Objective, R: Rng + ?Sized>(
        costs: &[O],
        constraints: &ConstraintSet,
        set: &FeasibleSet,
        samples: usize,
        rng: &mut R,
    ) -> Self {
        let d = set.dim();
        let radius = set.radius();
        let (mut g, mut g_tilde, mut c) = (0.0_f64, 0.0_f64, 0.0_f64);
        for _ in 0..samples {
            let x = sample_in_ball(rng, d, radius);
            let y = sample_in_ball(rng, d, radius);
            for f in costs {
                g = g.max(f.gradient(&x).norm());
            }
            for con in constraints.edges() {
                let (value, grad) = con.value_and_grad_first(&x, &y);
                g_tilde = g_tilde.max(grad.norm());
                c = c.max(value.abs());
            }
        }
        let l = constraints
            .edges()
            .iter()
            .map(|con| con.gradient_lipschitz())
            .fold(0.0_f64, f64::max);
        // an edgeless graph has no constraint constants; keep them positive
        let floor = f64::MIN_POSITIVE;
        Self {
            g: g.max(floor),
            g_tilde: g_tilde.max(floor),
            l: l.max(floor),
            c: c.max(floor),
            radius,
        }
    }
}

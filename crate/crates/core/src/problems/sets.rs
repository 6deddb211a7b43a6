use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vector;

/// Origin-centred Euclidean ball `{x in R^d : |x| <= R}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    radius: f64,
    dim: usize,
}

impl FeasibleSet {
    pub fn new(radius: f64, dim: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self { radius, dim })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        project_ball(x, self.radius)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.norm() <= self.radius + tol
    }
}

/// `x` if `|x| <= radius`, otherwise `x * radius / |x|`.
pub fn project_ball(x: &Vector, radius: f64) -> Result<Vector> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ball projection input"));
    }
    let norm = x.norm();
    if norm <= radius {
        Ok(x.clone())
    } else {
        Ok(x * (radius / norm))
    }
}

/// Uniform sample from the ball of the given radius.
pub fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vector {
    loop {
        let g = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let norm = g.norm();
        if norm < 1e-12 {
            continue;
        }
        let u: f64 = rng.random();
        return g * (radius * u.powf(1.0 / dim as f64) / norm);
    }
}

/// Contraction `(1 - alpha) X + alpha z0` of the feasible ball around an
/// interior ball `B(z0, r)`, with `z0` at the origin. Points of the shrunk
/// set stay inside `X` after any perturbation of length `zeta <= alpha r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrunkSet {
    base: FeasibleSet,
    alpha: f64,
    interior_radius: f64,
}

impl ShrunkSet {
    pub fn new(base: FeasibleSet, alpha: f64, interior_radius: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(interior_radius > 0.0 && interior_radius <= base.radius()) {
            return Err(Error::InvalidArgument(format!(
                "interior radius {interior_radius} must lie in (0, {}]",
                base.radius()
            )));
        }
        Ok(Self { base, alpha, interior_radius })
    }

    pub fn base(&self) -> &FeasibleSet {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn interior_radius(&self) -> f64 {
        self.interior_radius
    }

    pub fn radius(&self) -> f64 {
        (1.0 - self.alpha) * self.base.radius()
    }

    /// Largest query offset guaranteed to stay feasible.
    pub fn max_offset(&self) -> f64 {
        self.alpha * self.interior_radius
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.base.dim() {
            return Err(Error::DimensionMismatch { expected: self.base.dim(), got: x.len() });
        }
        project_ball(x, self.radius())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn projection_examples() {
        let p = project_ball(&v(&[3.0, 4.0]), 1.0).unwrap();
        assert!((p - v(&[0.6, 0.8])).norm() < 1e-15);
        assert_eq!(project_ball(&v(&[0.0, 0.0]), 5.0).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(project_ball(&v(&[1.0, 0.0]), 2.0).unwrap(), v(&[1.0, 0.0]));
        assert!(matches!(
            project_ball(&v(&[f64::NAN, 0.0]), 1.0),
            Err(Error::NonFinite(_))
        ));
        let set = FeasibleSet::new(1.0, 3).unwrap();
        assert!(matches!(set.project(&v(&[1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn shrunk_set_validation() {
        let base = FeasibleSet::new(2.0, 2).unwrap();
        assert!(ShrunkSet::new(base, 0.0, 1.0).is_err());
        assert!(ShrunkSet::new(base, 1.0, 1.0).is_err());
        assert!(ShrunkSet::new(base, 0.5, 3.0).is_err());
        let s = ShrunkSet::new(base, 0.25, 1.0).unwrap();
        assert_eq!(s.radius(), 1.5);
        assert_eq!(s.max_offset(), 0.25);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(sample_in_ball(&mut rng, 3, 1.5).norm() <= 1.5);
        }
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_feasible(
            xs in prop::collection::vec(-100.0f64..100.0, 1..6),
            radius in 0.01f64..10.0,
        ) {
            let x = Vector::from_vec(xs);
            let p = project_ball(&x, radius).unwrap();
            prop_assert!(p.norm() <= radius + 1e-12);
            let pp = project_ball(&p, radius).unwrap();
            prop_assert!((pp - &p).norm() <= 1e-12 * radius.max(1.0));
        }

        #[test]
        fn shrunk_set_queries_stay_feasible(
            xs in prop::collection::vec(-10.0f64..10.0, 1..6),
            us in prop::collection::vec(-1.0f64..1.0, 6),
            radius in 0.1f64..5.0,
            ratio in 0.05f64..0.95,
            alpha in 0.001f64..0.9,
            frac in 0.0f64..=1.0,
        ) {
            let d = xs.len();
            let base = FeasibleSet::new(radius, d).unwrap();
            let shrunk = ShrunkSet::new(base, alpha, ratio * radius).unwrap();
            let x = shrunk.project(&Vector::from_vec(xs)).unwrap();
            let u = Vector::from_column_slice(&us[..d]);
            prop_assume!(u.norm() > 1e-6);
            let u = u.normalize();
            let zeta = frac * shrunk.max_offset();
            prop_assert!((&x + &u * zeta).norm() <= radius + 1e-12);
            prop_assert!((&x - &u * zeta).norm() <= radius + 1e-12);
        }
    }
}

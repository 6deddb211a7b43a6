//! Finite-difference oracle shared by unit tests.

use crate::Vector;

pub fn central_difference(f: impl Fn(&Vector) -> f64, x: &Vector, step: f64) -> Vector {
    Vector::from_fn(x.len(), |k, _| {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[k] += step;
        minus[k] -= step;
        (f(&plus) - f(&minus)) / (2.0 * step)
    })
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::linalg::spectral_radius;
use crate::Vector;

/// Fixed coupling `g(x_i, x_j) <= 0` between two neighbors.
///
/// Both kinds are symmetric under argument swap, so one instance serves the
/// two orientations `g_ij` and `g_ji` of an undirected edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PairwiseConstraint {
    /// `1/2 z^T S z + z^T h + q` with `z = [x_i; x_j]`; `S` must be invariant
    /// under swapping its two diagonal blocks and `h` under swapping halves.
    Quadratic { s: DMatrix<f64>, h: Vector, q: f64 },
    /// `|x_i - x_j|^2 - b^2`.
    Proximity { bound: f64 },
}

impl PairwiseConstraint {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Quadratic { .. } => "quadratic-qcqp",
            Self::Proximity { .. } => "proximity",
        }
    }

    pub fn value(&self, xi: &Vector, xj: &Vector) -> f64 {
        match self {
            Self::Quadratic { s, h, q } => {
                let z = stack(xi, xj);
                0.5 * z.dot(&(s * &z)) + z.dot(h) + q
            }
            Self::Proximity { bound } => (xi - xj).norm_squared() - bound * bound,
        }
    }

    /// Partial gradient with respect to the first argument.
    pub fn grad_first(&self, xi: &Vector, xj: &Vector) -> Vector {
        self.value_and_grad_first(xi, xj).1
    }

    /// Partial gradient with respect to the second argument.
    pub fn grad_second(&self, xi: &Vector, xj: &Vector) -> Vector {
        match self {
            Self::Quadratic { s, h, .. } => {
                let d = xi.len();
                let z = stack(xi, xj);
                (s * &z + h).rows(d, d).into_owned()
            }
            Self::Proximity { .. } => (xj - xi) * 2.0,
        }
    }

    pub fn value_and_grad_first(&self, xi: &Vector, xj: &Vector) -> (f64, Vector) {
        match self {
            Self::Quadratic { s, h, q } => {
                let d = xi.len();
                let z = stack(xi, xj);
                let sz = s * &z;
                let value = 0.5 * z.dot(&sz) + z.dot(h) + q;
                (value, (sz + h).rows(0, d).into_owned())
            }
            Self::Proximity { bound } => {
                let diff = xi - xj;
                (diff.norm_squared() - bound * bound, diff * 2.0)
            }
        }
    }

    /// Lipschitz constant of the partial gradient in either argument.
    pub fn gradient_lipschitz(&self) -> f64 {
        match self {
            Self::Quadratic { s, .. } => spectral_radius(s),
            Self::Proximity { .. } => 2.0,
        }
    }
}

fn stack(xi: &Vector, xj: &Vector) -> Vector {
    let d = xi.len();
    Vector::from_fn(2 * d, |k, _| if k < d { xi[k] } else { xj[k - d] })
}

/// Value and first-argument gradient of a quadratic constraint.
pub fn qcqp_constraint(c: &PairwiseConstraint, xi: &Vector, xj: &Vector) -> Result<(f64, Vector)> {
    match c {
        PairwiseConstraint::Quadratic { h, .. } => {
            check_dims(h.len() / 2, xi, xj)?;
            Ok(c.value_and_grad_first(xi, xj))
        }
        _ => Err(Error::KindMismatch { expected: "quadratic-qcqp" }),
    }
}

/// Value and first-argument gradient of a proximity constraint.
pub fn proximity_constraint(
    c: &PairwiseConstraint,
    xi: &Vector,
    xj: &Vector,
) -> Result<(f64, Vector)> {
    match c {
        PairwiseConstraint::Proximity { .. } => {
            check_dims(xi.len(), xi, xj)?;
            Ok(c.value_and_grad_first(xi, xj))
        }
        _ => Err(Error::KindMismatch { expected: "proximity" }),
    }
}

fn check_dims(d: usize, xi: &Vector, xj: &Vector) -> Result<()> {
    for x in [xi, xj] {
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
    }
    Ok(())
}

/// One constraint per undirected edge, addressable by directed pair index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    per_edge: Vec<PairwiseConstraint>,
    pair_to_edge: Vec<usize>,
    /// Pair `(i, j)` with `i > j`, evaluated as `g(x_j, x_i)`.
    flipped: Vec<bool>,
}

impl ConstraintSet {
    pub fn new(graph: &NetworkGraph, per_edge: Vec<PairwiseConstraint>) -> Result<Self> {
        if per_edge.len() != graph.num_edges() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_edges(),
                got: per_edge.len(),
            });
        }
        let pairs = graph.directed_pairs();
        let pair_to_edge = pairs
            .iter()
            .map(|&(i, j)| graph.edge_index(i, j).expect("pair of an existing edge"))
            .collect();
        let flipped = pairs.iter().map(|&(i, j)| i > j).collect();
        Ok(Self { per_edge, pair_to_edge, flipped })
    }

    pub fn edge(&self, e: usize) -> &PairwiseConstraint {
        &self.per_edge[e]
    }

    pub fn edges(&self) -> &[PairwiseConstraint] {
        &self.per_edge
    }

    /// Constraint `g_ij` for directed pair index `k = index of (i, j)`.
    pub fn pair(&self, k: usize) -> &PairwiseConstraint {
        &self.per_edge[self.pair_to_edge[k]]
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_to_edge.len()
    }

    /// `g_ij(x_i, x_j)` for pair `k`. Both orientations of an edge are
    /// evaluated with the lower agent first, so `g_ij` and `g_ji` agree
    /// bit for bit.
    pub fn pair_value(&self, k: usize, xi: &Vector, xj: &Vector) -> f64 {
        let c = self.pair(k);
        if self.flipped[k] { c.value(xj, xi) } else { c.value(xi, xj) }
    }

    /// `g_ij(x_i, x_j)` and its gradient in `x_i`, oriented as `pair_value`.
    pub fn pair_value_and_grad(&self, k: usize, xi: &Vector, xj: &Vector) -> (f64, Vector) {
        let c = self.pair(k);
        if self.flipped[k] {
            (c.value(xj, xi), c.grad_second(xj, xi))
        } else {
            c.value_and_grad_first(xi, xj)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn constant_quadratic_is_always_feasible() {
        let c = PairwiseConstraint::Quadratic {
            s: DMatrix::zeros(4, 4),
            h: Vector::zeros(4),
            q: -1.0,
        };
        let (val, grad) = qcqp_constraint(&c, &v(&[0.3, -2.0]), &v(&[1.0, 5.0])).unwrap();
        assert_eq!(val, -1.0);
        assert_eq!(grad, Vector::zeros(2));
    }

    #[test]
    fn proximity_examples() {
        let c = PairwiseConstraint::Proximity { bound: 1.5 };
        let x = v(&[0.2, -0.7]);
        let (val, grad) = proximity_constraint(&c, &x, &x).unwrap();
        assert_eq!(val, -2.25);
        assert_eq!(grad, Vector::zeros(2));

        let c = PairwiseConstraint::Proximity { bound: 1.0 };
        let (val, grad) = proximity_constraint(&c, &v(&[1.0]), &v(&[0.0])).unwrap();
        assert_eq!(val, 0.0);
        assert_eq!(grad, v(&[2.0]));
        assert_eq!(c.value(&v(&[1.0]), &v(&[0.0])), c.value(&v(&[0.0]), &v(&[1.0])));
    }

    #[test]
    fn kind_and_dimension_errors() {
        let prox = PairwiseConstraint::Proximity { bound: 1.0 };
        let quad = PairwiseConstraint::Quadratic {
            s: DMatrix::identity(2, 2),
            h: Vector::zeros(2),
            q: 0.0,
        };
        assert!(matches!(
            qcqp_constraint(&prox, &v(&[1.0]), &v(&[1.0])),
            Err(Error::KindMismatch { .. })
        ));
        assert!(matches!(
            proximity_constraint(&quad, &v(&[1.0]), &v(&[1.0])),
            Err(Error::KindMismatch { .. })
        ));
        assert!(matches!(
            qcqp_constraint(&quad, &v(&[1.0, 2.0]), &v(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn constraint_set_maps_both_orientations_to_one_edge() {
        let g = NetworkGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let set = ConstraintSet::new(
            &g,
            vec![
                PairwiseConstraint::Proximity { bound: 1.0 },
                PairwiseConstraint::Proximity { bound: 2.0 },
            ],
        )
        .unwrap();
        let b = |k: usize| match set.pair(k) {
            PairwiseConstraint::Proximity { bound } => *bound,
            _ => unreachable!(),
        };
        // pairs: (0,1) (1,0) (1,2) (2,1)
        assert_eq!([b(0), b(1), b(2), b(3)], [1.0, 1.0, 2.0, 2.0]);
        assert!(ConstraintSet::new(&g, vec![]).is_err());
    }

    #[test]
    fn both_orientations_agree_exactly() {
        // block-swap symmetric S and swap-symmetric h
        let s = DMatrix::from_row_slice(4, 4, &[
            1.3, 0.2, 0.7, 0.1,
            0.2, 0.9, 0.1, -0.4,
            0.7, 0.1, 1.3, 0.2,
            0.1, -0.4, 0.2, 0.9,
        ]);
        let h = v(&[0.3, -0.1, 0.3, -0.1]);
        let g = NetworkGraph::from_edges(2, [(0, 1)]).unwrap();
        let set = ConstraintSet::new(&g, vec![PairwiseConstraint::Quadratic { s, h, q: -0.5 }]).unwrap();
        let (a, b) = (v(&[0.123456789, -0.987654321]), v(&[-0.31415926, 0.27182818]));
        assert_eq!(set.pair_value(0, &a, &b).to_bits(), set.pair_value(1, &b, &a).to_bits());
        let (v01, g01) = set.pair_value_and_grad(0, &a, &b);
        let (v10, g10) = set.pair_value_and_grad(1, &b, &a);
        assert_eq!(v01, v10);
        assert!((g01 - set.pair(0).grad_first(&a, &b)).norm() < 1e-14);
        assert!((g10 - set.pair(1).grad_first(&b, &a)).norm() < 1e-14);
    }
}

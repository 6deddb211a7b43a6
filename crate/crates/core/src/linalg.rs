//! Small dense symmetric eigensolver used to clamp the spectrum of the
//! drifting quadratic cost matrices.

use nalgebra::{DMatrix, DVector};

const OFF_DIAGONAL_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `a = V diag(w) V^T` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    /// Eigenvectors stored as columns.
    pub vectors: DMatrix<f64>,
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below `1e-10` (relative to the matrix scale when that exceeds one).
pub fn jacobi_eigen(matrix: &DMatrix<f64>) -> SymmetricEigen {
    assert!(matrix.is_square(), "jacobi_eigen needs a square matrix");
    let n = matrix.nrows();
    let mut a = matrix.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(1.0);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    SymmetricEigen {
        values: a.diagonal(),
        vectors: v,
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Rebuild `m` with every eigenvalue projected onto `[lo, hi]`. A matrix
/// whose spectrum already lies in range is returned unchanged.
pub fn clamp_eigenvalues(m: &DMatrix<f64>, lo: f64, hi: f64) -> DMatrix<f64> {
    let eig = jacobi_eigen(m);
    let tol = 1e-10 * (1.0 + lo.abs().max(hi.abs()));
    if eig.values.iter().all(|w| (lo - tol..=hi + tol).contains(w)) {
        return m.clone();
    }
    let clamped = eig.values.map(|w| w.clamp(lo, hi));
    let v = &eig.vectors;
    let rebuilt = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    // kill the rounding asymmetry of the product
    symmetrize(&rebuilt)
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    jacobi_eigen(m).values.iter().fold(0.0_f64, |acc, w| acc.max(w.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        symmetrize(&m)
    }

    #[test]
    fn reconstructs_random_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (6, 4), (16, 5)] {
            let a = random_symmetric(n, seed);
            let eig = jacobi_eigen(&a);
            let rebuilt =
                &eig.vectors * DMatrix::from_diagonal(&eig.values) * eig.vectors.transpose();
            assert!((rebuilt - &a).norm() < 1e-9, "n={n}");
            let orth = eig.vectors.transpose() * &eig.vectors - DMatrix::identity(n, n);
            assert!(orth.norm() < 1e-9);
        }
    }

    #[test]
    fn agrees_with_trace_and_known_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let mut w: Vec<f64> = jacobi_eigen(&a).values.iter().copied().collect();
        w.sort_by(f64::total_cmp);
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!((w[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn clamp_pushes_spectrum_into_range() {
        let a = DMatrix::from_row_slice(2, 2, &[12.0, 0.0, 0.0, -3.0]);
        let c = clamp_eigenvalues(&a, 0.0, 10.0);
        assert!((c[(0, 0)] - 10.0).abs() < 1e-12);
        assert!(c[(1, 1)].abs() < 1e-12);

        let b = random_symmetric(5, 11) * 8.0;
        let c = clamp_eigenvalues(&b, 0.0, 10.0);
        for w in jacobi_eigen(&c).values.iter() {
            assert!(*w >= -1e-9 && *w <= 10.0 + 1e-9);
        }
    }

    #[test]
    fn clamp_keeps_in_range_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 4.0]);
        assert_eq!(clamp_eigenvalues(&a, 0.0, 10.0), a);
    }
}

//! Small dense linear-algebra kernels for symmetric positive-definite
//! matrices. Everything here is deterministic and allocation-simple;
//! the matrices in this crate are at most a few hundred columns wide.

use ndarray::{Array1, Array2};

/// Cholesky factorization `A = L Lᵀ` of a symmetric matrix.
///
/// Returns the lower-triangular factor, or `None` when the matrix is not
/// (numerically) positive definite. This doubles as the crate's SPD test.
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

pub fn is_spd(a: &Array2<f64>) -> bool {
    cholesky(a).is_some()
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    // Forward substitution L y = b.
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * y[k];
        }
        y[i] = sum / l[[i, i]];
    }
    // Back substitution Lᵀ x = y.
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
/// The result is symmetrized before returning.
pub fn spd_inverse(a: &Array2<f64>) -> Option<Array2<f64>> {
    let l = cholesky(a)?;
    let n = a.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    let mut e = Array1::<f64>::zeros(n);
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let col = cholesky_solve(&l, &e);
        inv.column_mut(j).assign(&col);
    }
    // Clean up round-off asymmetry.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv[[i, j]] + inv[[j, i]]);
            inv[[i, j]] = v;
            inv[[j, i]] = v;
        }
    }
    Some(inv)
}

/// `ln det A` for symmetric positive-definite `A`, or `None` when the
/// Cholesky factorization fails.
pub fn log_det_spd(a: &Array2<f64>) -> Option<f64> {
    let l = cholesky(a)?;
    Some(2.0 * (0..a.nrows()).map(|i| l[[i, i]].ln()).sum::<f64>())
}

/// Largest absolute difference between `A` and `Aᵀ`.
pub fn max_abs_asymmetry(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_recovers_simple_factor() {
        let a = array![[4.0, 2.0], [2.0, 5.0]];
        let l = cholesky(&a).unwrap();
        let reconstructed = l.dot(&l.t());
        for ((i, j), v) in reconstructed.indexed_iter() {
            assert!((v - a[[i, j]]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(&a).is_none());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = array![[3.0, 1.0, 0.2], [1.0, 2.0, 0.5], [0.2, 0.5, 1.5]];
        let inv = spd_inverse(&a).unwrap();
        let prod = a.dot(&inv);
        for ((i, j), v) in prod.indexed_iter() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-10, "prod[{i},{j}] = {v}");
        }
    }

    #[test]
    fn log_det_matches_direct_2x2() {
        let a = array![[2.0, 0.3], [0.3, 1.0]];
        let det: f64 = 2.0 * 1.0 - 0.3 * 0.3;
        assert!((log_det_spd(&a).unwrap() - det.ln()).abs() < 1e-12);
    }
}

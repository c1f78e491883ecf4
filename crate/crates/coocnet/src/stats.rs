//! Column statistics shared by the transform, predictor, and solver
//! modules. All moments use the population convention (divide by N),
//! matching the `S = XᵀX / N` covariance used by the precision solver.

use ndarray::{Array1, Array2, Axis};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divide by N).
pub fn variance_population(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn column_means(m: &Array2<f64>) -> Array1<f64> {
    m.mean_axis(Axis(0)).expect("non-empty matrix")
}

/// Population standard deviation of each column.
pub fn column_sds_population(m: &Array2<f64>) -> Array1<f64> {
    let means = column_means(m);
    let n = m.nrows() as f64;
    let mut sds = Array1::<f64>::zeros(m.ncols());
    for (j, col) in m.axis_iter(Axis(1)).enumerate() {
        let var = col.iter().map(|&x| (x - means[j]) * (x - means[j])).sum::<f64>() / n;
        sds[j] = var.sqrt();
    }
    sds
}

/// A column counts as zero-variance when its spread is negligible next to
/// its magnitude; exact float equality would miss constant columns whose
/// mean does not round-trip.
pub fn is_negligible_sd(sd: f64, mean: f64) -> bool {
    sd <= 1e-12 * (1.0 + mean.abs())
}

/// Population covariance matrix (columns centered, divide by N).
pub fn covariance_population(m: &Array2<f64>) -> Array2<f64> {
    covariance_population_about(m, &column_means(m))
}

/// Population covariance with an externally supplied centering vector.
/// Used for held-out likelihoods where the model's mean comes from the
/// training split.
pub fn covariance_population_about(m: &Array2<f64>, center: &Array1<f64>) -> Array2<f64> {
    let (n, d) = m.dim();
    let centered = m - &center.view().insert_axis(Axis(0));
    let mut s = centered.t().dot(&centered);
    s.mapv_inplace(|v| v / n as f64);
    // Enforce exact symmetry against round-off.
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (s[[i, j]] + s[[j, i]]);
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
    }
    s
}

/// Pearson correlation matrix of the columns. Zero-variance columns get
/// zero correlation against everything (their edges can never exist) and
/// a unit diagonal.
pub fn correlation_matrix(m: &Array2<f64>) -> Array2<f64> {
    let cov = covariance_population(m);
    let means = column_means(m);
    let d = cov.nrows();
    let mut corr = Array2::<f64>::zeros((d, d));
    let sds: Vec<f64> = (0..d).map(|j| cov[[j, j]].max(0.0).sqrt()).collect();
    let degenerate: Vec<bool> = (0..d).map(|j| is_negligible_sd(sds[j], means[j])).collect();
    for i in 0..d {
        corr[[i, i]] = 1.0;
        for j in 0..i {
            let v = if degenerate[i] || degenerate[j] {
                0.0
            } else {
                (cov[[i, j]] / (sds[i] * sds[j])).clamp(-1.0, 1.0)
            };
            corr[[i, j]] = v;
            corr[[j, i]] = v;
        }
    }
    corr
}

/// Mean squared error between a prediction vector and its target.
pub fn mse(pred: &Array1<f64>, actual: &Array1<f64>) -> f64 {
    debug_assert_eq!(pred.len(), actual.len());
    pred.iter()
        .zip(actual.iter())
        .map(|(&p, &a)| (p - a) * (p - a))
        .sum::<f64>()
        / pred.len() as f64
}

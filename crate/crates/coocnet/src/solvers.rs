//! From-scratch numerical kernels.
//!
//! * [`lasso_cd`] minimizes the penalized least-squares loss
//!   `(1/2n)‖y − β₀ − Xw‖² + λ‖w‖₁` by cyclic coordinate descent with an
//!   intercept refresh at the end of every sweep.
//! * [`lasso_path`] runs a descending regularization grid with warm starts.
//! * [`graphical_lasso`] minimizes `tr(SΘ) − log det Θ + λ‖Θ‖₁(off-diag)`
//!   by block coordinate descent on the precision matrix, one row/column
//!   at a time, each block reduced to an L1 subproblem solved by the same
//!   coordinate-descent kernel. Working in the precision (rather than the
//!   covariance) blocks keeps the objective non-increasing cycle to cycle.
//! * [`maximize_scalar`] is a golden-section search used for the power
//!   transform's likelihood profile.
//!
//! Coordinate order is fixed ascending, so identical inputs produce
//! bitwise-identical outputs on any platform or thread count.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;

/// Default tolerance on the maximum coefficient change per sweep.
pub const LASSO_TOL: f64 = 1e-7;
/// Default sweep budget for [`lasso_cd`].
pub const LASSO_MAX_SWEEPS: usize = 1000;
/// Default convergence tolerance for [`graphical_lasso`], relative to the
/// mean absolute off-diagonal of `S`.
pub const GLASSO_TOL: f64 = 1e-4;
/// Default outer-cycle budget for [`graphical_lasso`].
pub const GLASSO_MAX_CYCLES: usize = 100;

const INNER_TOL: f64 = 1e-9;
const INNER_SWEEPS: usize = 1000;

/// Result of one penalized regression.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of one sparse precision estimation.
#[derive(Debug, Clone)]
pub struct PrecisionFit {
    /// Symmetric positive-definite estimate of the precision matrix.
    pub precision: Array2<f64>,
    /// The working covariance maintained by the algorithm (the inverse of
    /// `precision` up to convergence tolerance).
    pub covariance: Array2<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `sign(z) · max(|z| − gamma, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Smallest penalty at which the lasso solution is identically zero:
/// `max_j |X_jᵀ(y − ȳ)| / n`.
pub fn lambda_max(x: &Array2<f64>, y: &Array1<f64>) -> f64 {
    let n = x.nrows() as f64;
    let y_mean = y.sum() / n;
    let centered = y.mapv(|v| v - y_mean);
    let mut best = 0.0f64;
    for j in 0..x.ncols() {
        best = best.max((x.column(j).dot(&centered) / n).abs());
    }
    best
}

/// Logarithmically spaced grid from `from` down to `to` (both positive).
pub fn log_spaced_grid(from: f64, to: f64, count: usize) -> Vec<f64> {
    assert!(from > 0.0 && to > 0.0 && count >= 1);
    if count == 1 {
        return vec![from];
    }
    let (lf, lt) = (from.ln(), to.ln());
    (0..count)
        .map(|i| (lf + (lt - lf) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Default descending grid for a regression: 100 logarithmic steps from
/// `lambda_max` down to `lambda_max · 1e-3`.
pub fn default_lambda_grid(x: &Array2<f64>, y: &Array1<f64>) -> Vec<f64> {
    let lm = lambda_max(x, y);
    if lm <= 1e-12 {
        // Degenerate target: any positive penalty gives the all-zero fit.
        return vec![1e-6];
    }
    log_spaced_grid(lm, lm * 1e-3, 100)
}

fn check_finite_matrix(x: &Array2<f64>, what: &str, op: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("{op}: non-finite value in {what}")));
    }
    Ok(())
}

/// Cyclic coordinate descent for `(1/2n)‖y − β₀ − Xw‖² + λ‖w‖₁`.
///
/// `init` warm-starts the weight vector. Stops when the largest absolute
/// coefficient change in a sweep (intercept included) drops below `tol`,
/// or when the sweep budget runs out (`converged = false`, not an error).
pub fn lasso_cd(
    x: &Array2<f64>,
    y: &Array1<f64>,
    lambda: f64,
    init: Option<&Array1<f64>>,
    tol: f64,
    max_sweeps: usize,
) -> Result<LassoFit> {
    lasso_cd_impl(x, y, lambda, init, tol, max_sweeps, &mut |_, _| {})
}

fn lasso_cd_impl(
    x: &Array2<f64>,
    y: &Array1<f64>,
    lambda: f64,
    init: Option<&Array1<f64>>,
    tol: f64,
    max_sweeps: usize,
    on_sweep: &mut dyn FnMut(&Array1<f64>, f64),
) -> Result<LassoFit> {
    let (n, p) = x.dim();
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput("lasso_cd: empty design matrix".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "lasso_cd: {n} rows but {} targets",
            y.len()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput("lasso_cd: lambda must be finite and >= 0".into()));
    }
    check_finite_matrix(x, "design matrix", "lasso_cd")?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("lasso_cd: non-finite value in targets".into()));
    }
    let nf = n as f64;
    let col_sq: Vec<f64> = (0..p)
        .map(|j| x.column(j).iter().map(|&v| v * v).sum::<f64>() / nf)
        .collect();
    let col_means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / nf).collect();
    let y_mean = y.sum() / nf;

    let mut w = match init {
        Some(w0) => {
            if w0.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "lasso_cd: warm start has {} coefficients, expected {p}",
                    w0.len()
                )));
            }
            w0.clone()
        }
        None => Array1::zeros(p),
    };
    let mut intercept = y_mean - col_means.iter().zip(w.iter()).map(|(&m, &wj)| m * wj).sum::<f64>();
    let mut residual = y - &x.dot(&w) - intercept;

    let mut converged = false;
    let mut iterations = 0;
    for sweep in 1..=max_sweeps {
        iterations = sweep;
        let mut max_delta = 0.0f64;
        for j in 0..p {
            let cj = col_sq[j];
            if cj <= 1e-300 {
                w[j] = 0.0;
                continue;
            }
            let rho = x.column(j).dot(&residual) / nf + cj * w[j];
            let wj_new = soft_threshold(rho, lambda) / cj;
            let delta = wj_new - w[j];
            if delta != 0.0 {
                for (r, &xij) in residual.iter_mut().zip(x.column(j).iter()) {
                    *r -= xij * delta;
                }
                w[j] = wj_new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        let shift = residual.sum() / nf;
        if shift != 0.0 {
            intercept += shift;
            residual.mapv_inplace(|r| r - shift);
            max_delta = max_delta.max(shift.abs());
        }
        on_sweep(&w, intercept);
        if max_delta < tol {
            converged = true;
            break;
        }
    }

    Ok(LassoFit {
        weights: w,
        intercept,
        lambda,
        iterations,
        converged,
    })
}

/// The loss minimized by [`lasso_cd`], exposed so callers can audit fits.
pub fn lasso_objective(
    x: &Array2<f64>,
    y: &Array1<f64>,
    weights: &Array1<f64>,
    intercept: f64,
    lambda: f64,
) -> f64 {
    let n = x.nrows() as f64;
    let residual = y - &x.dot(weights) - intercept;
    let rss: f64 = residual.iter().map(|&r| r * r).sum();
    rss / (2.0 * n) + lambda * weights.iter().map(|w| w.abs()).sum::<f64>()
}

/// Warm-started fits along a strictly descending penalty grid.
pub fn lasso_path(x: &Array2<f64>, y: &Array1<f64>, lambdas: &[f64]) -> Result<Vec<LassoFit>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("lasso_path: empty lambda grid".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(
            "lasso_path: lambda grid must be strictly descending".into(),
        ));
    }
    let mut fits = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Array1<f64>> = None;
    for &lambda in lambdas {
        let fit = lasso_cd(x, y, lambda, warm.as_ref(), LASSO_TOL, LASSO_MAX_SWEEPS)?;
        warm = Some(fit.weights.clone());
        fits.push(fit);
    }
    Ok(fits)
}

/// Coordinate descent for the quadratic-form problem
/// `(1/2) wᵀ G w − bᵀ w + λ‖w‖₁` with `G` symmetric positive definite.
/// This is the block subproblem of the graphical lasso.
fn lasso_cd_gram(
    g: &Array2<f64>,
    b: &Array1<f64>,
    lambda: f64,
    w: &mut Array1<f64>,
    tol: f64,
    max_sweeps: usize,
) -> bool {
    let p = b.len();
    let mut gw = g.dot(w);
    for _ in 0..max_sweeps {
        let mut max_delta = 0.0f64;
        for j in 0..p {
            let gjj = g[[j, j]];
            if gjj <= 1e-300 {
                w[j] = 0.0;
                continue;
            }
            let rho = b[j] - gw[j] + gjj * w[j];
            let wj_new = soft_threshold(rho, lambda) / gjj;
            let delta = wj_new - w[j];
            if delta != 0.0 {
                for k in 0..p {
                    gw[k] += g[[k, j]] * delta;
                }
                w[j] = wj_new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < tol {
            return true;
        }
    }
    false
}

/// Negative Gaussian log-likelihood summary `tr(SΘ) − log det Θ` (up to
/// constants). Errors if `Θ` is not positive definite.
pub fn gaussian_nll(s: &Array2<f64>, theta: &Array2<f64>) -> Result<f64> {
    let log_det = linalg::log_det_spd(theta).ok_or_else(|| {
        Error::Numerical("gaussian_nll: precision matrix is not positive definite".into())
    })?;
    let trace: f64 = s.iter().zip(theta.t().iter()).map(|(&a, &b)| a * b).sum();
    Ok(trace - log_det)
}

/// The penalized objective minimized by [`graphical_lasso`]:
/// `tr(SΘ) − log det Θ + λ Σ_{i≠j} |θ_ij|`.
pub fn glasso_objective(s: &Array2<f64>, theta: &Array2<f64>, lambda: f64) -> Result<f64> {
    let d = theta.nrows();
    let mut penalty = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                penalty += theta[[i, j]].abs();
            }
        }
    }
    Ok(gaussian_nll(s, theta)? + lambda * penalty)
}

/// Sparse precision estimation by block coordinate descent.
///
/// The penalty applies to off-diagonal entries only. At `lambda = 0` the
/// problem is plain maximum likelihood and the solver inverts `S`
/// directly, refusing singular input (which arises when there are fewer
/// samples than columns) instead of regularizing silently.
pub fn graphical_lasso(
    s: &Array2<f64>,
    lambda: f64,
    tol: f64,
    max_iters: usize,
) -> Result<PrecisionFit> {
    graphical_lasso_impl(s, lambda, tol, max_iters, None)
}

fn graphical_lasso_impl(
    s: &Array2<f64>,
    lambda: f64,
    tol: f64,
    max_iters: usize,
    mut objective_trace: Option<&mut Vec<f64>>,
) -> Result<PrecisionFit> {
    let d = s.nrows();
    if s.ncols() != d || d == 0 {
        return Err(Error::DimensionMismatch(format!(
            "graphical_lasso: covariance must be square, got {d}x{}",
            s.ncols()
        )));
    }
    check_finite_matrix(s, "covariance", "graphical_lasso")?;
    if linalg::max_abs_asymmetry(s) > 1e-8 {
        return Err(Error::InvalidInput(
            "graphical_lasso: covariance is not symmetric within 1e-8".into(),
        ));
    }
    if (0..d).any(|j| s[[j, j]] <= 0.0) {
        return Err(Error::InvalidInput(
            "graphical_lasso: covariance diagonal must be strictly positive".into(),
        ));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(
            "graphical_lasso: lambda must be finite and >= 0".into(),
        ));
    }

    if lambda == 0.0 {
        let precision = linalg::spd_inverse(s).ok_or_else(|| {
            Error::Numerical(
                "graphical_lasso: sample covariance is singular at lambda = 0 \
                 (fewer samples than taxa?); use a positive lambda"
                    .into(),
            )
        })?;
        if let Some(trace) = objective_trace.as_deref_mut() {
            trace.push(glasso_objective(s, &precision, 0.0)?);
        }
        return Ok(PrecisionFit {
            precision,
            covariance: s.clone(),
            lambda,
            iterations: 0,
            converged: true,
        });
    }

    // Diagonal start: Θ = diag(1/s_jj), W = Θ⁻¹ = diag(s_jj).
    let mut theta = Array2::<f64>::zeros((d, d));
    let mut cov = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        theta[[j, j]] = 1.0 / s[[j, j]];
        cov[[j, j]] = s[[j, j]];
    }

    let mut mean_off_s = 0.0;
    if d > 1 {
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    mean_off_s += s[[i, j]].abs();
                }
            }
        }
        mean_off_s /= (d * (d - 1)) as f64;
    }
    let threshold = tol * mean_off_s;

    let mut beta = Array1::<f64>::zeros(d.saturating_sub(1));
    let mut converged = false;
    let mut iterations = 0;
    for cycle in 1..=max_iters {
        iterations = cycle;
        let cov_prev = cov.clone();
        for j in 0..d {
            let others: Vec<usize> = (0..d).filter(|&k| k != j).collect();
            let m = others.len();
            let w22 = cov[[j, j]];
            let s22 = s[[j, j]];
            // A = W₁₁ − w₁₂ w₁₂ᵀ / w₂₂ is the inverse of the untouched
            // precision block Θ₁₁.
            let mut a = Array2::<f64>::zeros((m, m));
            for (ai, &gi) in others.iter().enumerate() {
                for (aj, &gj) in others.iter().enumerate() {
                    a[[ai, aj]] = cov[[gi, gj]] - cov[[gi, j]] * cov[[gj, j]] / w22;
                }
            }
            // Block problem in θ₁₂: (1/2)θᵀ(s₂₂A)θ + s₁₂ᵀθ + λ‖θ‖₁,
            // solved in the equivalent scaled form on A directly.
            let b: Array1<f64> = others.iter().map(|&k| -s[[k, j]] / s22).collect();
            for (ai, &gi) in others.iter().enumerate() {
                beta[ai] = theta[[gi, j]];
            }
            let mut beta_j = beta.slice(ndarray::s![..m]).to_owned();
            lasso_cd_gram(&a, &b, lambda / s22, &mut beta_j, INNER_TOL, INNER_SWEEPS);
            let u = a.dot(&beta_j);
            let theta22 = 1.0 / s22 + beta_j.dot(&u);
            theta[[j, j]] = theta22;
            for (ai, &gi) in others.iter().enumerate() {
                theta[[gi, j]] = beta_j[ai];
                theta[[j, gi]] = beta_j[ai];
            }
            // Maintain W = Θ⁻¹ through the block-inverse identities.
            cov[[j, j]] = s22;
            for (ai, &gi) in others.iter().enumerate() {
                let w12 = -u[ai] * s22;
                cov[[gi, j]] = w12;
                cov[[j, gi]] = w12;
            }
            for (ai, &gi) in others.iter().enumerate() {
                for (aj, &gj) in others.iter().enumerate() {
                    cov[[gi, gj]] = a[[ai, aj]] + u[ai] * u[aj] * s22;
                }
            }
        }
        if let Some(trace) = objective_trace.as_deref_mut() {
            trace.push(glasso_objective(s, &theta, lambda)?);
        }
        let mut delta = 0.0;
        for (new, old) in cov.iter().zip(cov_prev.iter()) {
            delta += (new - old).abs();
        }
        delta /= (d * d) as f64;
        if delta <= threshold {
            converged = true;
            break;
        }
    }

    // Symmetrize to machine precision and verify positive definiteness.
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (theta[[i, j]] + theta[[j, i]]);
            theta[[i, j]] = v;
            theta[[j, i]] = v;
        }
    }
    if (0..d).any(|j| theta[[j, j]] <= 0.0) || !linalg::is_spd(&theta) {
        return Err(Error::Numerical(
            "graphical_lasso: estimated precision lost positive definiteness".into(),
        ));
    }

    Ok(PrecisionFit {
        precision: theta,
        covariance: cov,
        lambda,
        iterations,
        converged,
    })
}

/// Golden-section search for the maximizer of a unimodal function on
/// `[lo, hi]`. Errors on non-finite evaluations.
pub fn maximize_scalar<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(
            "maximize_scalar: need finite lo < hi".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("maximize_scalar: tol must be > 0".into()));
    }
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!(
                "maximize_scalar: non-finite evaluation at {x}"
            )))
        }
    };
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let mut budget = 512usize;
    while b - a > tol && budget > 0 {
        budget -= 1;
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

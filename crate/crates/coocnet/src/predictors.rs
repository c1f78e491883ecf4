//! Predictor families behind one interface: fit on a training matrix,
//! predict one held-out taxon from the others.
//!
//! Five families are implemented. The featureless baseline predicts the
//! training column mean. The correlation families predict a target from
//! each sufficiently correlated partner taxon via the bivariate
//! conditional-mean rule `x̂₁ = ρ·(σ₁/σ₂)·x₂` and average those pairwise
//! predictions; the rank family applies the same rule on the training
//! rank scale and maps predicted ranks back through linear
//! interpolation. The regression family fits one L1-penalized model per
//! target. The graphical family estimates a sparse precision matrix and
//! predicts each target by the Gaussian conditional mean
//! `x̂ⱼ = −(1/2ωⱼⱼ)·(Σ_{i≠j} ω_{ij}x_i + Σ_{i≠j} ω_{ji}x_i)`.
//!
//! Hyper-parameters (the correlation threshold and the penalties) are
//! trained on a single subtrain/validation split of the training rows;
//! the winning setting is refit on the full training split.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::seeding::seeded_permutation;
use crate::solvers;
use crate::stats;
use crate::transform::RankMap;

/// Algorithm family identifiers, used in configuration, records, and
/// output file names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Featureless,
    Pearson,
    Spearman,
    Lasso,
    Ggm,
}

impl Family {
    pub fn all() -> [Family; 5] {
        [
            Family::Featureless,
            Family::Pearson,
            Family::Spearman,
            Family::Lasso,
            Family::Ggm,
        ]
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Featureless => "featureless",
            Family::Pearson => "pearson",
            Family::Spearman => "spearman",
            Family::Lasso => "lasso",
            Family::Ggm => "ggm",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the graphical family picks its penalty on the validation split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Held-out Gaussian likelihood `tr(S_val·Θ̂) − log det Θ̂`, minimized.
    #[default]
    ValidationLoglik,
    /// Mean validation MSE of the conditional-mean predictions.
    ValidationMse,
}

/// Whether the regression family trains one penalty per target taxon or
/// a single penalty shared by all targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    #[default]
    PerTarget,
    Global,
}

fn default_inner_fraction() -> f64 {
    0.75
}

/// Configuration for one predictor family in a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSpec {
    pub family: Family,
    /// Hyper-parameter grid: thresholds in `[0, 1]` for the correlation
    /// families, strictly positive descending penalties for the lasso
    /// and graphical families. `None` selects the built-in default.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default)]
    pub lambda_mode: LambdaMode,
    /// Subtrain share of the inner split.
    #[serde(default = "default_inner_fraction")]
    pub inner_fraction: f64,
    /// Optional extra seed folded into the inner-split shuffling; leave
    /// unset to share one split across families.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl PredictorSpec {
    pub fn new(family: Family) -> PredictorSpec {
        PredictorSpec {
            family,
            grid: None,
            selection: Selection::default(),
            lambda_mode: LambdaMode::default(),
            inner_fraction: default_inner_fraction(),
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_fraction > 0.0 && self.inner_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "predictor spec ({}): inner_fraction must lie in (0, 1)",
                self.family
            )));
        }
        if let Some(grid) = &self.grid {
            if grid.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "predictor spec ({}): empty hyper-parameter grid",
                    self.family
                )));
            }
            match self.family {
                Family::Pearson | Family::Spearman => {
                    if grid.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
                        return Err(Error::InvalidInput(format!(
                            "predictor spec ({}): thresholds must lie in [0, 1]",
                            self.family
                        )));
                    }
                }
                Family::Lasso | Family::Ggm => {
                    if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                        return Err(Error::InvalidInput(format!(
                            "predictor spec ({}): penalties must be strictly positive",
                            self.family
                        )));
                    }
                    if grid.windows(2).any(|w| w[1] >= w[0]) {
                        return Err(Error::InvalidInput(format!(
                            "predictor spec ({}): penalty grid must be strictly descending",
                            self.family
                        )));
                    }
                }
                Family::Featureless => {}
            }
        }
        Ok(())
    }
}

/// Default threshold grid: 50 evenly spaced values in `[0, 1)`.
pub fn default_threshold_grid() -> Vec<f64> {
    (0..50).map(|i| i as f64 / 50.0).collect()
}

/// A single seeded subtrain/validation partition of training-row
/// indices. Both halves are non-empty and sorted.
#[derive(Debug, Clone)]
pub struct InnerSplit {
    pub subtrain: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Splits `0..n` into a subtrain share of roughly `fraction` and a
/// validation remainder, shuffled by `seed`.
pub fn make_inner_split(n: usize, fraction: f64, seed: u64) -> Result<InnerSplit> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "make_inner_split: need at least 2 rows, got {n}"
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(
            "make_inner_split: fraction must lie in (0, 1)".into(),
        ));
    }
    let take = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let perm = seeded_permutation(n, seed);
    let mut subtrain: Vec<usize> = perm[..take].to_vec();
    let mut validation: Vec<usize> = perm[take..].to_vec();
    subtrain.sort_unstable();
    validation.sort_unstable();
    Ok(InnerSplit {
        subtrain,
        validation,
    })
}

fn drop_column(m: &Array2<f64>, j: usize) -> Array2<f64> {
    let cols: Vec<usize> = (0..m.ncols()).filter(|&k| k != j).collect();
    m.select(Axis(1), &cols)
}

fn check_width(rows: &Array2<f64>, d: usize, op: &str) -> Result<()> {
    if rows.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{op}: input has {} columns, model was fit on {d}",
            rows.ncols()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Featureless baseline
// ---------------------------------------------------------------------

/// Predicts every target with its training column mean.
#[derive(Debug, Clone)]
pub struct FeaturelessModel {
    means: Array1<f64>,
}

pub fn fit_featureless(train: &Array2<f64>) -> FeaturelessModel {
    FeaturelessModel {
        means: stats::column_means(train),
    }
}

impl FeaturelessModel {
    pub fn predict(&self, target: usize, rows: &Array2<f64>) -> Result<Array1<f64>> {
        check_width(rows, self.means.len(), "featureless predict")?;
        Ok(Array1::from_elem(rows.nrows(), self.means[target]))
    }
}

// ---------------------------------------------------------------------
// Correlation families
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

impl CorrelationKind {
    pub fn family(&self) -> Family {
        match self {
            CorrelationKind::Pearson => Family::Pearson,
            CorrelationKind::Spearman => Family::Spearman,
        }
    }
}

/// A fitted correlation predictor: the D×D correlation matrix (on values
/// for Pearson, on average ranks for Spearman), the standard deviations
/// of the fitted representation, and — for the rank family — the
/// per-column value↔rank maps.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    pub kind: CorrelationKind,
    pub(crate) corr: Array2<f64>,
    pub(crate) sds: Array1<f64>,
    pub(crate) means: Array1<f64>,
    pub(crate) rank_maps: Vec<RankMap>,
    pub(crate) rank_mean: f64,
    pub threshold: f64,
}

/// Computes the correlation matrix of the training columns (Pearson on
/// values, or Pearson on average ranks for the rank variant). The
/// threshold starts at 0; train it with [`train_threshold`] or set it
/// directly.
pub fn fit_correlation(train: &Array2<f64>, kind: CorrelationKind) -> Result<CorrelationModel> {
    let n = train.nrows();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "fit_correlation: need at least 3 rows, got {n}"
        )));
    }
    let means = stats::column_means(train);
    match kind {
        CorrelationKind::Pearson => Ok(CorrelationModel {
            kind,
            corr: stats::correlation_matrix(train),
            sds: stats::column_sds_population(train),
            means,
            rank_maps: Vec::new(),
            rank_mean: 0.0,
            threshold: 0.0,
        }),
        CorrelationKind::Spearman => {
            let d = train.ncols();
            let mut ranks = Array2::<f64>::zeros((n, d));
            let mut rank_maps = Vec::with_capacity(d);
            for j in 0..d {
                let col: Vec<f64> = train.column(j).to_vec();
                let r = crate::transform::rank_transform(&col);
                for (i, &ri) in r.iter().enumerate() {
                    ranks[[i, j]] = ri;
                }
                rank_maps.push(RankMap::fit(&col));
            }
            Ok(CorrelationModel {
                kind,
                corr: stats::correlation_matrix(&ranks),
                sds: stats::column_sds_population(&ranks),
                means,
                rank_maps,
                rank_mean: (n as f64 + 1.0) / 2.0,
                threshold: 0.0,
            })
        }
    }
}

impl CorrelationModel {
    pub fn corr(&self) -> &Array2<f64> {
        &self.corr
    }

    pub fn n_taxa(&self) -> usize {
        self.corr.nrows()
    }

    pub fn with_threshold(mut self, threshold: f64) -> CorrelationModel {
        self.threshold = threshold;
        self
    }

    /// Partner taxa whose absolute correlation with the target reaches
    /// the threshold. Exact-zero correlations (degenerate columns) never
    /// qualify.
    pub fn active_set(&self, target: usize, threshold: f64) -> Vec<usize> {
        (0..self.n_taxa())
            .filter(|&k| k != target)
            .filter(|&k| {
                let c = self.corr[[target, k]];
                c != 0.0 && c.abs() >= threshold
            })
            .collect()
    }

    /// Predicts the target column as the unweighted mean of the pairwise
    /// conditional-mean predictions over the active set; an empty active
    /// set falls back to the training mean of the target.
    pub fn predict_with_threshold(
        &self,
        threshold: f64,
        target: usize,
        rows: &Array2<f64>,
    ) -> Result<Array1<f64>> {
        if !threshold.is_finite() || threshold < 0.0 {
            return Err(Error::InvalidInput(
                "predict_correlation: threshold must be finite and >= 0".into(),
            ));
        }
        let d = self.n_taxa();
        check_width(rows, d, "predict_correlation")?;
        let active = self.active_set(target, threshold);
        if active.is_empty() {
            return Ok(Array1::from_elem(rows.nrows(), self.means[target]));
        }
        let count = active.len() as f64;
        let out = match self.kind {
            CorrelationKind::Pearson => Array1::from_shape_fn(rows.nrows(), |r| {
                let mut sum = 0.0;
                for &k in &active {
                    sum += self.corr[[target, k]] * (self.sds[target] / self.sds[k]) * rows[[r, k]];
                }
                sum / count
            }),
            CorrelationKind::Spearman => Array1::from_shape_fn(rows.nrows(), |r| {
                // The pairwise rule on the rank scale, centered at the
                // training mean rank (ranks live on [1, N], not around 0).
                let mut sum = 0.0;
                for &k in &active {
                    let rank_k = self.rank_maps[k].value_to_rank(rows[[r, k]]);
                    sum += self.corr[[target, k]]
                        * (self.sds[target] / self.sds[k])
                        * (rank_k - self.rank_mean);
                }
                let predicted_rank = self.rank_mean + sum / count;
                self.rank_maps[target].rank_to_value(predicted_rank)
            }),
        };
        Ok(out)
    }

    pub fn predict(&self, target: usize, rows: &Array2<f64>) -> Result<Array1<f64>> {
        self.predict_with_threshold(self.threshold, target, rows)
    }
}

/// Mean validation MSE across all target taxa for each candidate
/// threshold.
pub fn threshold_validation_curve(
    model: &CorrelationModel,
    validation: &Array2<f64>,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("train_threshold: empty grid".into()));
    }
    let d = model.n_taxa();
    check_width(validation, d, "train_threshold")?;
    let mut curve = Vec::with_capacity(grid.len());
    for &t in grid {
        let mut total = 0.0;
        for target in 0..d {
            let pred = model.predict_with_threshold(t, target, validation)?;
            total += stats::mse(&pred, &validation.column(target).to_owned());
        }
        curve.push((t, total / d as f64));
    }
    Ok(curve)
}

/// Picks the grid threshold minimizing mean validation MSE; ties break
/// toward the larger threshold (the sparser network).
pub fn train_threshold(
    model: &CorrelationModel,
    validation: &Array2<f64>,
    grid: &[f64],
) -> Result<f64> {
    let curve = threshold_validation_curve(model, validation, grid)?;
    let mut best = curve[0];
    for &(t, mse) in &curve[1..] {
        if mse < best.1 || (mse == best.1 && t > best.0) {
            best = (t, mse);
        }
    }
    Ok(best.0)
}

// ---------------------------------------------------------------------
// Lasso family
// ---------------------------------------------------------------------

/// One target's penalized regression on the other D−1 taxa.
#[derive(Debug, Clone)]
pub struct LassoTargetFit {
    /// Coefficients over the non-target columns, in ascending column
    /// order with the target skipped.
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

/// Per-target penalized regressions for all D taxa.
#[derive(Debug, Clone)]
pub struct LassoModel {
    pub targets: Vec<LassoTargetFit>,
}

impl LassoModel {
    pub fn n_taxa(&self) -> usize {
        self.targets.len()
    }

    pub fn predict(&self, target: usize, rows: &Array2<f64>) -> Result<Array1<f64>> {
        let d = self.n_taxa();
        check_width(rows, d, "predict_lasso")?;
        let fit = &self.targets[target];
        let out = Array1::from_shape_fn(rows.nrows(), |r| {
            let mut sum = fit.intercept;
            let mut w = 0;
            for k in 0..d {
                if k != target {
                    sum += fit.weights[w] * rows[[r, k]];
                    w += 1;
                }
            }
            sum
        });
        Ok(out)
    }
}

/// Validation MSE along a descending penalty grid for one target, with
/// warm-started subtrain fits.
pub fn lasso_validation_curve(
    train: &Array2<f64>,
    target: usize,
    grid: &[f64],
    split: &InnerSplit,
) -> Result<Vec<(f64, f64)>> {
    let sub = train.select(Axis(0), &split.subtrain);
    let val = train.select(Axis(0), &split.validation);
    let x_sub = drop_column(&sub, target);
    let y_sub = sub.column(target).to_owned();
    let x_val = drop_column(&val, target);
    let y_val = val.column(target).to_owned();
    let fits = solvers::lasso_path(&x_sub, &y_sub, grid)?;
    Ok(fits
        .iter()
        .map(|fit| {
            let pred = x_val.dot(&fit.weights) + fit.intercept;
            (fit.lambda, stats::mse(&pred, &y_val))
        })
        .collect())
}

fn check_split(train: &Array2<f64>, split: &InnerSplit, op: &str) -> Result<()> {
    let n = train.nrows();
    if split.subtrain.is_empty() || split.validation.is_empty() {
        return Err(Error::InvalidInput(format!("{op}: degenerate inner split")));
    }
    if split.subtrain.iter().chain(&split.validation).any(|&i| i >= n) {
        return Err(Error::InvalidInput(format!(
            "{op}: split index out of range for {n} training rows"
        )));
    }
    Ok(())
}

/// Trains the penalty for one target on the inner split and refits at
/// the winner on the full training split. Ties prefer the larger
/// penalty.
pub fn fit_lasso_predictor(
    train: &Array2<f64>,
    target: usize,
    grid: Option<&[f64]>,
    split: &InnerSplit,
) -> Result<LassoTargetFit> {
    if train.nrows() < 4 {
        return Err(Error::InvalidInput(
            "fit_lasso_predictor: need at least 4 training rows".into(),
        ));
    }
    check_split(train, split, "fit_lasso_predictor")?;
    let default_grid;
    let grid = match grid {
        Some(g) => g,
        None => {
            let sub = train.select(Axis(0), &split.subtrain);
            let x_sub = drop_column(&sub, target);
            let y_sub = sub.column(target).to_owned();
            default_grid = solvers::default_lambda_grid(&x_sub, &y_sub);
            &default_grid
        }
    };
    let curve = lasso_validation_curve(train, target, grid, split)?;
    // The grid is descending, so keeping the first strict minimum
    // resolves ties toward the larger penalty.
    let mut best = curve[0];
    for &(lambda, mse) in &curve[1..] {
        if mse < best.1 {
            best = (lambda, mse);
        }
    }
    let x_full = drop_column(train, target);
    let y_full = train.column(target).to_owned();
    let refit = solvers::lasso_cd(
        &x_full,
        &y_full,
        best.0,
        None,
        solvers::LASSO_TOL,
        solvers::LASSO_MAX_SWEEPS,
    )?;
    Ok(LassoTargetFit {
        weights: refit.weights,
        intercept: refit.intercept,
        lambda: best.0,
    })
}

/// Fits the regression family for every target. In the global mode one
/// shared penalty minimizes the summed validation MSE across targets.
pub fn fit_lasso_model(
    train: &Array2<f64>,
    grid: Option<&[f64]>,
    mode: LambdaMode,
    split: &InnerSplit,
) -> Result<LassoModel> {
    let d = train.ncols();
    if train.nrows() < 4 {
        return Err(Error::InvalidInput(
            "fit_lasso_model: need at least 4 training rows".into(),
        ));
    }
    check_split(train, split, "fit_lasso_model")?;
    match mode {
        LambdaMode::PerTarget => {
            let targets = (0..d)
                .map(|j| fit_lasso_predictor(train, j, grid, split))
                .collect::<Result<Vec<_>>>()?;
            Ok(LassoModel { targets })
        }
        LambdaMode::Global => {
            let shared;
            let grid = match grid {
                Some(g) => g,
                None => {
                    // Pool the per-target ceilings so the shared grid
                    // covers every regression.
                    let sub = train.select(Axis(0), &split.subtrain);
                    let mut lm = 0.0f64;
                    for j in 0..d {
                        let x = drop_column(&sub, j);
                        let y = sub.column(j).to_owned();
                        lm = lm.max(solvers::lambda_max(&x, &y));
                    }
                    if lm <= 1e-12 {
                        shared = vec![1e-6];
                    } else {
                        shared = solvers::log_spaced_grid(lm, lm * 1e-3, 100);
                    }
                    &shared
                }
            };
            let mut totals = vec![0.0f64; grid.len()];
            for j in 0..d {
                for (i, (_, mse)) in lasso_validation_curve(train, j, grid, split)?
                    .into_iter()
                    .enumerate()
                {
                    totals[i] += mse;
                }
            }
            let mut best = 0;
            for (i, &total) in totals.iter().enumerate() {
                if total < totals[best] {
                    best = i;
                }
            }
            let lambda = grid[best];
            let targets = (0..d)
                .map(|j| {
                    let x = drop_column(train, j);
                    let y = train.column(j).to_owned();
                    let refit = solvers::lasso_cd(
                        &x,
                        &y,
                        lambda,
                        None,
                        solvers::LASSO_TOL,
                        solvers::LASSO_MAX_SWEEPS,
                    )?;
                    Ok(LassoTargetFit {
                        weights: refit.weights,
                        intercept: refit.intercept,
                        lambda,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LassoModel { targets })
        }
    }
}

// ---------------------------------------------------------------------
// Gaussian graphical family
// ---------------------------------------------------------------------

/// A sparse precision matrix with its trained penalty.
#[derive(Debug, Clone)]
pub struct GgmModel {
    pub precision: Array2<f64>,
    pub lambda: f64,
}

impl GgmModel {
    pub fn n_taxa(&self) -> usize {
        self.precision.nrows()
    }

    /// Conditional-mean prediction of the target from all other columns.
    pub fn predict(&self, target: usize, rows: &Array2<f64>) -> Result<Array1<f64>> {
        ggm_conditional_mean(&self.precision, target, rows)
    }
}

/// The Gaussian conditional mean of one coordinate given the rest,
/// written with both off-diagonal sums so a symmetric precision matrix
/// reduces to `−(1/ωⱼⱼ)·Σ_{i≠j} ω_{ji} x_i`. Symmetry is asserted, and a
/// non-positive diagonal entry is an error.
pub fn ggm_conditional_mean(
    precision: &Array2<f64>,
    target: usize,
    rows: &Array2<f64>,
) -> Result<Array1<f64>> {
    let d = precision.nrows();
    check_width(rows, d, "predict_ggm")?;
    if linalg::max_abs_asymmetry(precision) > 1e-8 {
        return Err(Error::Numerical(
            "predict_ggm: precision matrix is not symmetric".into(),
        ));
    }
    let diag = precision[[target, target]];
    if diag <= 0.0 {
        return Err(Error::Numerical(format!(
            "predict_ggm: non-positive precision diagonal {diag} for target {target}"
        )));
    }
    Ok(Array1::from_shape_fn(rows.nrows(), |r| {
        let mut sum_col = 0.0;
        let mut sum_row = 0.0;
        for i in 0..d {
            if i != target {
                sum_col += precision[[i, target]] * rows[[r, i]];
                sum_row += precision[[target, i]] * rows[[r, i]];
            }
        }
        -(sum_col + sum_row) / (2.0 * diag)
    }))
}

fn default_glasso_grid(s: &Array2<f64>) -> Vec<f64> {
    let d = s.nrows();
    let mut max_off = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                max_off = max_off.max(s[[i, j]].abs());
            }
        }
    }
    if max_off <= 1e-12 {
        log::warn!("fit_ggm: covariance has no off-diagonal mass; using a single small penalty");
        return vec![1e-3];
    }
    // One decade below the smallest all-zero penalty, the usual
    // minimum-ratio default for precision estimation.
    solvers::log_spaced_grid(max_off, max_off * 0.1, 20)
}

/// Penalty-vs-score curve on the inner split: held-out negative
/// log-likelihood or mean validation MSE, depending on `selection`.
pub fn ggm_validation_curve(
    train: &Array2<f64>,
    grid: &[f64],
    selection: Selection,
    split: &InnerSplit,
) -> Result<Vec<(f64, f64)>> {
    Ok(ggm_validation_scores(train, grid, selection, split)?
        .into_iter()
        .map(|(lambda, mean, _)| (lambda, mean))
        .collect())
}

/// Per-penalty validation score with the per-row scores behind it, so
/// the selection rule can run paired comparisons.
fn ggm_validation_scores(
    train: &Array2<f64>,
    grid: &[f64],
    selection: Selection,
    split: &InnerSplit,
) -> Result<Vec<(f64, f64, Vec<f64>)>> {
    let sub = train.select(Axis(0), &split.subtrain);
    let val = train.select(Axis(0), &split.validation);
    let s_sub = stats::covariance_population(&sub);
    // Held-out moments are centered with subtrain means: the model's
    // location estimate comes from the data it was fit on.
    let center = stats::column_means(&sub);
    let m = val.nrows();
    let d = train.ncols();
    let mut curve = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let fit = solvers::graphical_lasso(
            &s_sub,
            lambda,
            solvers::GLASSO_TOL,
            solvers::GLASSO_MAX_CYCLES,
        )?;
        // One score per validation row, so the selection rule can weigh
        // the score difference against its sampling noise.
        let row_scores: Vec<f64> = match selection {
            Selection::ValidationLoglik => {
                let log_det = linalg::log_det_spd(&fit.precision).ok_or_else(|| {
                    Error::Numerical("fit_ggm: precision lost definiteness".into())
                })?;
                (0..m)
                    .map(|r| {
                        let x = &val.row(r) - &center.view();
                        x.dot(&fit.precision.dot(&x)) - log_det
                    })
                    .collect()
            }
            Selection::ValidationMse => {
                let mut per_row = vec![0.0; m];
                for target in 0..d {
                    let pred = ggm_conditional_mean(&fit.precision, target, &val)?;
                    for r in 0..m {
                        let e = pred[r] - val[[r, target]];
                        per_row[r] += e * e;
                    }
                }
                per_row.iter().map(|&v| v / d as f64).collect()
            }
        };
        let mean = stats::mean(&row_scores);
        curve.push((lambda, mean, row_scores));
    }
    Ok(curve)
}

/// Trains the graphical-model penalty on the inner split and refits the
/// winner on the full training split.
///
/// Selection applies the one-standard-error parsimony rule with paired
/// per-row scores: the winner is the largest penalty whose validation
/// score is within one (paired) standard error of the minimizing
/// penalty's score. A single validation split cannot resolve score
/// differences below its own noise, and the plain minimizer
/// systematically under-penalizes there.
pub fn fit_ggm(
    train: &Array2<f64>,
    grid: Option<&[f64]>,
    selection: Selection,
    split: &InnerSplit,
) -> Result<GgmModel> {
    if train.nrows() < 4 {
        return Err(Error::InvalidInput(
            "fit_ggm: need at least 4 training rows".into(),
        ));
    }
    check_split(train, split, "fit_ggm")?;
    let default_grid;
    let grid = match grid {
        Some(g) => g,
        None => {
            let sub = train.select(Axis(0), &split.subtrain);
            default_grid = default_glasso_grid(&stats::covariance_population(&sub));
            &default_grid
        }
    };
    let curve = ggm_validation_scores(train, grid, selection, split)?;
    let mut best = 0usize;
    for (i, entry) in curve.iter().enumerate() {
        if entry.1 < curve[best].1 {
            best = i;
        }
    }
    // Largest penalty statistically indistinguishable from the best:
    // the mean paired score difference must not exceed its own standard
    // error. The grid is descending, so the first qualifying entry wins.
    let best_rows = &curve[best].2;
    let m = best_rows.len() as f64;
    let mut lambda = curve[best].0;
    for (l, _, rows) in &curve[..best] {
        let diffs: Vec<f64> = rows.iter().zip(best_rows).map(|(a, b)| a - b).collect();
        let mean_diff = stats::mean(&diffs);
        let se_diff = (stats::variance_population(&diffs) / m).sqrt();
        if mean_diff <= se_diff {
            lambda = *l;
            break;
        }
    }
    let s_full = stats::covariance_population(train);
    let refit = solvers::graphical_lasso(
        &s_full,
        lambda,
        solvers::GLASSO_TOL,
        solvers::GLASSO_MAX_CYCLES,
    )?;
    Ok(GgmModel {
        precision: refit.precision,
        lambda,
    })
}

// ---------------------------------------------------------------------
// Uniform front door
// ---------------------------------------------------------------------

/// Any fitted predictor, ready to score held-out rows.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Featureless(FeaturelessModel),
    Correlation(CorrelationModel),
    Lasso(LassoModel),
    Ggm(GgmModel),
}

impl FittedModel {
    pub fn family(&self) -> Family {
        match self {
            FittedModel::Featureless(_) => Family::Featureless,
            FittedModel::Correlation(m) => m.kind.family(),
            FittedModel::Lasso(_) => Family::Lasso,
            FittedModel::Ggm(_) => Family::Ggm,
        }
    }

    pub fn predict(&self, target: usize, rows: &Array2<f64>) -> Result<Array1<f64>> {
        match self {
            FittedModel::Featureless(m) => m.predict(target, rows),
            FittedModel::Correlation(m) => m.predict(target, rows),
            FittedModel::Lasso(m) => m.predict(target, rows),
            FittedModel::Ggm(m) => m.predict(target, rows),
        }
    }
}

/// Fits one family on a training matrix: hyper-parameters are trained on
/// the inner split, then the winning setting is refit on all training
/// rows.
pub fn fit_model(
    spec: &PredictorSpec,
    train: &Array2<f64>,
    split: &InnerSplit,
) -> Result<FittedModel> {
    spec.validate()?;
    match spec.family {
        Family::Featureless => Ok(FittedModel::Featureless(fit_featureless(train))),
        Family::Pearson | Family::Spearman => {
            let kind = if spec.family == Family::Pearson {
                CorrelationKind::Pearson
            } else {
                CorrelationKind::Spearman
            };
            check_split(train, split, "fit_model")?;
            let sub = train.select(Axis(0), &split.subtrain);
            let val = train.select(Axis(0), &split.validation);
            let inner = fit_correlation(&sub, kind)?;
            let grid = spec.grid.clone().unwrap_or_else(default_threshold_grid);
            let threshold = train_threshold(&inner, &val, &grid)?;
            Ok(FittedModel::Correlation(
                fit_correlation(train, kind)?.with_threshold(threshold),
            ))
        }
        Family::Lasso => Ok(FittedModel::Lasso(fit_lasso_model(
            train,
            spec.grid.as_deref(),
            spec.lambda_mode,
            split,
        )?)),
        Family::Ggm => Ok(FittedModel::Ggm(fit_ggm(
            train,
            spec.grid.as_deref(),
            spec.selection,
            split,
        )?)),
    }
}

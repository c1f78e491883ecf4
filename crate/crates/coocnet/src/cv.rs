//! The evaluation engine: seeded fold plans, the outer K-fold test loop
//! over every target taxon, the inner hyper-parameter split, MSE
//! aggregation, and the sample-size curve experiment.
//!
//! One comparison run reuses a single [`FoldPlan`] across algorithm
//! families, so differences between algorithms are never confounded by
//! split differences. Work items run concurrently under rayon; results
//! are reduced into a key-sorted list that is identical for any worker
//! count.

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::otu::{subsample, OtuTable};
use crate::predictors::{fit_model, make_inner_split, Family, PredictorSpec};
use crate::seeding;
use crate::stats;
use crate::transform::{fit_pipeline, TransformMode};

/// Re-exported seed-derivation hook so harness callers can build
/// per-item streams the same way the engine does.
pub use crate::seeding::derive_seed;

/// A seeded assignment of samples to folds `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    assignments: Vec<u32>,
    k: u32,
    seed: u64,
}

/// Deals a seeded permutation of the rows round-robin into `k` folds, so
/// fold sizes differ by at most one and every row lands in exactly one
/// fold.
pub fn make_folds(n: usize, k: u32, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "make_folds: need at least 2 folds, got {k}"
        )));
    }
    if n < k as usize {
        return Err(Error::InvalidInput(format!(
            "make_folds: {n} samples cannot fill {k} folds"
        )));
    }
    let perm = seeding::seeded_permutation(n, seed);
    let mut assignments = vec![0u32; n];
    for (pos, &row) in perm.iter().enumerate() {
        assignments[row] = (pos as u32 % k) + 1;
    }
    Ok(FoldPlan {
        assignments,
        k,
        seed,
    })
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[u32] {
        &self.assignments
    }

    /// Row indices of the training and test split for one fold.
    pub fn split(&self, fold: u32) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// One (dataset, algorithm, sample size, replicate, fold, target taxon)
/// observation of held-out prediction error. Failed targets carry an
/// error message instead of an MSE.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub dataset: String,
    pub algorithm: Family,
    pub n: usize,
    pub replicate: u32,
    pub fold: u32,
    pub target: usize,
    pub taxon: String,
    pub mse: Option<f64>,
    pub error: Option<String>,
}

impl EvalRecord {
    /// The natural ordering key. Sorting by it makes record lists
    /// byte-stable regardless of execution order.
    pub fn key(&self) -> (String, String, usize, u32, u32, usize) {
        (
            self.dataset.clone(),
            self.algorithm.to_string(),
            self.n,
            self.replicate,
            self.fold,
            self.target,
        )
    }
}

pub fn sort_records(records: &mut [EvalRecord]) {
    records.sort_by(|a, b| a.key().cmp(&b.key()));
}

fn evaluate_fold(
    table: &OtuTable,
    spec: &PredictorSpec,
    mode: TransformMode,
    plan: &FoldPlan,
    fold: u32,
    dataset: &str,
    replicate: u32,
) -> Result<Vec<EvalRecord>> {
    let (train_idx, test_idx) = plan.split(fold);
    let train_raw = table.counts().select(Axis(0), &train_idx);
    let test_raw = table.counts().select(Axis(0), &test_idx);

    // Transform parameters come from training rows only; the same fitted
    // transform maps the held-out rows.
    let transform = fit_pipeline(&train_raw, mode)?;
    let train = transform.apply(&train_raw)?;
    let test = transform.apply(&test_raw)?;

    let mut inner_seed = derive_seed(plan.seed, &[u64::from(fold)]);
    if let Some(extra) = spec.seed {
        inner_seed = derive_seed(inner_seed, &[extra]);
    }
    let split = make_inner_split(train.nrows(), spec.inner_fraction, inner_seed)?;
    let model = fit_model(spec, &train, &split)?;

    let d = table.n_taxa();
    let mut records = Vec::with_capacity(d);
    for target in 0..d {
        let mut record = EvalRecord {
            dataset: dataset.to_string(),
            algorithm: spec.family,
            n: table.n_samples(),
            replicate,
            fold,
            target,
            taxon: table.taxa()[target].clone(),
            mse: None,
            error: None,
        };
        match model.predict(target, &test) {
            Ok(pred) => {
                let actual = test.column(target).to_owned();
                let mse = stats::mse(&pred, &actual);
                if mse.is_finite() {
                    record.mse = Some(mse);
                } else {
                    record.error = Some(format!("non-finite test error {mse}"));
                }
            }
            Err(err) => record.error = Some(err.to_string()),
        }
        records.push(record);
    }
    Ok(records)
}

/// Runs the full outer loop for one algorithm family: per fold, fit the
/// transform and the hyper-parameter-trained model on training rows,
/// then score the prediction of every held-out taxon. Emits `K·D`
/// records. A failed target yields an error-marked record; a failed fold
/// fit propagates as an error.
pub fn evaluate_algorithm(
    table: &OtuTable,
    spec: &PredictorSpec,
    mode: TransformMode,
    plan: &FoldPlan,
    dataset: &str,
) -> Result<Vec<EvalRecord>> {
    evaluate_algorithm_replicate(table, spec, mode, plan, dataset, 0)
}

fn evaluate_algorithm_replicate(
    table: &OtuTable,
    spec: &PredictorSpec,
    mode: TransformMode,
    plan: &FoldPlan,
    dataset: &str,
    replicate: u32,
) -> Result<Vec<EvalRecord>> {
    if plan.n() != table.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "evaluate_algorithm: fold plan covers {} rows, table has {}",
            plan.n(),
            table.n_samples()
        )));
    }
    spec.validate()?;
    let folds: Vec<u32> = (1..=plan.k()).collect();
    let mut records: Vec<EvalRecord> = folds
        .par_iter()
        .map(|&fold| evaluate_fold(table, spec, mode, plan, fold, dataset, replicate))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    sort_records(&mut records);
    Ok(records)
}

/// The sample-size experiment: for each requested size and replicate,
/// draw a seeded subsample, build one shared fold plan, and evaluate
/// every algorithm on it. Per-item seeds derive from

/// `(master seed, size, replicate)`.
pub fn subsample_curve(
    table: &OtuTable,
    sizes: &[usize],
    specs: &[PredictorSpec],
    mode: TransformMode,
    k: u32,
    master_seed: u64,
    replicates: u32,
    dataset: &str,
) -> Result<Vec<EvalRecord>> {
    if sizes.is_empty() || specs.is_empty() || replicates == 0 {
        return Err(Error::InvalidInput(
            "subsample_curve: need sizes, algorithms, and at least one replicate".into(),
        ));
    }
    for &size in sizes {
        if size > table.n_samples() {
            return Err(Error::InvalidInput(format!(
                "subsample_curve: size {size} exceeds the {} available samples",
                table.n_samples()
            )));
        }
        if size < k as usize + 1 {
            return Err(Error::InvalidInput(format!(
                "subsample_curve: size {size} is too small to split into {k} folds"
            )));
        }
    }
    let mut items = Vec::new();
    for &size in sizes {
        for replicate in 0..replicates {
            items.push((size, replicate));
        }
    }
    let batches: Vec<Vec<EvalRecord>> = items
        .par_iter()
        .map(|&(size, replicate)| -> Result<Vec<EvalRecord>> {
            let sub_seed = derive_seed(master_seed, &[size as u64, u64::from(replicate), 1]);
            let plan_seed = derive_seed(master_seed, &[size as u64, u64::from(replicate), 2]);
            let sub = subsample(table, size, sub_seed)?;
            let plan = make_folds(size, k, plan_seed)?;
            let mut out = Vec::new();
            for spec in specs {
                out.extend(evaluate_algorithm_replicate(
                    &sub, spec, mode, &plan, dataset, replicate,
                )?);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<EvalRecord> = batches.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

/// Mean and variance of test MSE for one (algorithm, sample size) group.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveGroup {
    pub algorithm: Family,
    pub n: usize,
    pub mean_mse: f64,
    pub var_mse: f64,
    /// Records contributing to the mean.
    pub count: usize,
    /// Error-marked records excluded from the mean.
    pub errors: usize,
}

/// Groups records by (algorithm, sample size) and reports the mean and
/// population variance of MSE per group, excluding (but counting)
/// error-marked records.
pub fn aggregate(records: &[EvalRecord]) -> Result<Vec<CurveGroup>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("aggregate: no records".into()));
    }
    let mut keys: Vec<(Family, usize)> = records.iter().map(|r| (r.algorithm, r.n)).collect();
    keys.sort();
    keys.dedup();
    let mut groups = Vec::with_capacity(keys.len());
    for (algorithm, n) in keys {
        let mut values = Vec::new();
        let mut errors = 0usize;
        for r in records.iter().filter(|r| r.algorithm == algorithm && r.n == n) {
            match r.mse {
                Some(v) => values.push(v),
                None => errors += 1,
            }
        }
        if values.is_empty() {
            groups.push(CurveGroup {
                algorithm,
                n,
                mean_mse: f64::NAN,
                var_mse: f64::NAN,
                count: 0,
                errors,
            });
            continue;
        }
        groups.push(CurveGroup {
            algorithm,
            n,
            mean_mse: stats::mean(&values),
            var_mse: stats::variance_population(&values),
            count: values.len(),
            errors,
        });
    }
    if groups.iter().all(|g| g.count == 0) {
        return Err(Error::Numerical(
            "aggregate: every record is error-marked".into(),
        ));
    }
    Ok(groups)
}

/// Fits the transform and one hyper-parameter-trained model per fold and
/// hands them back with the fold's transformed training matrix. This is
/// the shared fitting path for network inference.
pub fn fit_fold_models(
    table: &OtuTable,
    spec: &PredictorSpec,
    mode: TransformMode,
    plan: &FoldPlan,
) -> Result<Vec<(u32, crate::predictors::FittedModel)>> {
    if plan.n() != table.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "fit_fold_models: fold plan covers {} rows, table has {}",
            plan.n(),
            table.n_samples()
        )));
    }
    spec.validate()?;
    let folds: Vec<u32> = (1..=plan.k()).collect();
    folds
        .par_iter()
        .map(|&fold| {
            let (train_idx, _) = plan.split(fold);
            let train_raw = table.counts().select(Axis(0), &train_idx);
            let transform = fit_pipeline(&train_raw, mode)?;
            let train = transform.apply(&train_raw)?;
            let mut inner_seed = derive_seed(plan.seed, &[u64::from(fold)]);
            if let Some(extra) = spec.seed {
                inner_seed = derive_seed(inner_seed, &[extra]);
            }
            let split = make_inner_split(train.nrows(), spec.inner_fraction, inner_seed)?;
            Ok((fold, fit_model(spec, &train, &split)?))
        })
        .collect()
}

/// Transformed train/test matrices for one fold, for callers that need
/// the raw materials rather than records.
pub fn transformed_fold(
    table: &OtuTable,
    mode: TransformMode,
    plan: &FoldPlan,
    fold: u32,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (train_idx, test_idx) = plan.split(fold);
    let train_raw = table.counts().select(Axis(0), &train_idx);
    let test_raw = table.counts().select(Axis(0), &test_idx);
    let transform = fit_pipeline(&train_raw, mode)?;
    Ok((transform.apply(&train_raw)?, transform.apply(&test_raw)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::otu::generate_synthetic;

    #[test]
    fn folds_have_balanced_sizes() {
        let plan = make_folds(9, 3, 1).unwrap();
        let mut counts = [0usize; 3];
        for &f in plan.assignments() {
            counts[(f - 1) as usize] += 1;
        }
        assert_eq!(counts, [3, 3, 3]);

        let plan = make_folds(10, 3, 1).unwrap();
        let mut counts = [0usize; 3];
        for &f in plan.assignments() {
            counts[(f - 1) as usize] += 1;
        }
        counts.sort_unstable();
        assert_eq!(counts, [3, 3, 4]);
    }

    #[test]
    fn folds_are_deterministic_and_partition_rows() {
        let a = make_folds(23, 4, 7).unwrap();
        let b = make_folds(23, 4, 7).unwrap();
        assert_eq!(a, b);
        // Each row appears in exactly one test fold across the K splits.
        let mut seen = vec![0usize; 23];
        for fold in 1..=4 {
            let (train, test) = a.split(fold);
            assert_eq!(train.len() + test.len(), 23);
            for &i in &test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn folds_reject_bad_parameters() {
        assert!(make_folds(5, 1, 0).is_err());
        assert!(make_folds(2, 3, 0).is_err());
    }

    #[test]
    fn record_count_is_folds_times_taxa() {
        let truth = generate_synthetic(5, 36, 0.4, 11).unwrap();
        let plan = make_folds(36, 3, 12).unwrap();
        let spec = PredictorSpec::new(Family::Featureless);
        let records = evaluate_algorithm(
            &truth.table,
            &spec,
            TransformMode::ScaleOnly,
            &plan,
            "synthetic",
        )
        .unwrap();
        assert_eq!(records.len(), 15);
        assert!(records.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn baseline_error_is_near_unit_variance() {
        let truth = generate_synthetic(5, 60, 0.4, 21).unwrap();
        let plan = make_folds(60, 3, 22).unwrap();
        let spec = PredictorSpec::new(Family::Featureless);
        let records = evaluate_algorithm(
            &truth.table,
            &spec,
            TransformMode::ScaleOnly,
            &plan,
            "synthetic",
        )
        .unwrap();
        let groups = aggregate(&records).unwrap();
        let mean = groups[0].mean_mse;
        assert!(
            (mean - 1.0).abs() < 0.3,
            "baseline MSE {mean} should sit near the unit test variance"
        );
    }

    #[test]
    fn informative_models_beat_the_baseline() {
        let truth = generate_synthetic(10, 200, 0.2, 31).unwrap();
        let plan = make_folds(200, 3, 32).unwrap();
        let mut means = std::collections::BTreeMap::new();
        for family in [Family::Featureless, Family::Lasso, Family::Ggm] {
            let spec = PredictorSpec::new(family);
            let records = evaluate_algorithm(
                &truth.table,
                &spec,
                TransformMode::ScaleOnly,
                &plan,
                "synthetic",
            )
            .unwrap();
            means.insert(family, aggregate(&records).unwrap()[0].mean_mse);
        }
        let base = means[&Family::Featureless];
        assert!(means[&Family::Lasso] < base, "{means:?}");
        assert!(means[&Family::Ggm] < base, "{means:?}");
    }

    #[test]
    fn curve_has_exact_record_count() {
        let truth = generate_synthetic(4, 50, 0.4, 41).unwrap();
        let specs = vec![
            PredictorSpec::new(Family::Featureless),
            PredictorSpec::new(Family::Pearson),
        ];
        let records = subsample_curve(
            &truth.table,
            &[10, 20],
            &specs,
            TransformMode::ScaleOnly,
            3,
            42,
            2,
            "synthetic",
        )
        .unwrap();
        // sizes × replicates × algorithms × folds × taxa
        assert_eq!(records.len(), 2 * 2 * 2 * 3 * 4);
        for r in &records {
            assert!(r.n == 10 || r.n == 20);
        }
    }

    #[test]
    fn curve_rejects_undersized_requests() {
        let truth = generate_synthetic(4, 30, 0.4, 51).unwrap();
        let specs = vec![PredictorSpec::new(Family::Featureless)];
        assert!(subsample_curve(
            &truth.table,
            &[3],
            &specs,
            TransformMode::ScaleOnly,
            3,
            1,
            1,
            "synthetic"
        )
        .is_err());
        assert!(subsample_curve(
            &truth.table,
            &[40],
            &specs,
            TransformMode::ScaleOnly,
            3,
            1,
            1,
            "synthetic"
        )
        .is_err());
    }

    #[test]
    fn aggregate_mean_and_variance_are_exact() {
        let mk = |mse: f64| EvalRecord {
            dataset: "d".into(),
            algorithm: Family::Pearson,
            n: 10,
            replicate: 0,
            fold: 1,
            target: 0,
            taxon: "t".into(),
            mse: Some(mse),
            error: None,
        };
        let single = aggregate(&[mk(2.5)]).unwrap();
        assert_eq!(single[0].var_mse, 0.0);
        let pair = aggregate(&[mk(1.0), mk(3.0)]).unwrap();
        assert_eq!(pair[0].mean_mse, 2.0);
        assert_eq!(pair[0].var_mse, 1.0);
    }

    #[test]
    fn aggregate_matches_two_pass_oracle() {
        let truth = generate_synthetic(5, 45, 0.4, 61).unwrap();
        let plan = make_folds(45, 3, 62).unwrap();
        let spec = PredictorSpec::new(Family::Pearson);
        let records = evaluate_algorithm(
            &truth.table,
            &spec,
            TransformMode::YeoJohnsonThenScale,
            &plan,
            "synthetic",
        )
        .unwrap();
        let groups = aggregate(&records).unwrap();
        let values: Vec<f64> = records.iter().filter_map(|r| r.mse).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
        assert!((groups[0].mean_mse - mean).abs() < 1e-12);
        assert!((groups[0].var_mse - var).abs() < 1e-12);
    }

    #[test]
    fn aggregate_excludes_error_records() {
        let good = EvalRecord {
            dataset: "d".into(),
            algorithm: Family::Ggm,
            n: 10,
            replicate: 0,
            fold: 1,
            target: 0,
            taxon: "t".into(),
            mse: Some(0.5),
            error: None,
        };
        let mut bad = good.clone();
        bad.target = 1;
        bad.mse = None;
        bad.error = Some("boom".into());
        let groups = aggregate(&[good, bad.clone()]).unwrap();
        assert_eq!(groups[0].count, 1);
        assert_eq!(groups[0].errors, 1);
        assert!(aggregate(&[bad]).is_err());
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn mutating_test_rows_leaves_fits_unchanged() {
        // No leakage: every fitted parameter depends on training rows
        // only. Perturb the test fold and compare the fitted models.
        let truth = generate_synthetic(4, 40, 0.5, 71).unwrap();
        let plan = make_folds(40, 4, 72).unwrap();
        let (_, test_idx) = plan.split(1);
        let mut tampered_counts = truth.table.counts().clone();
        for &i in &test_idx {
            for j in 0..4 {
                tampered_counts[[i, j]] += 1000.0;
            }
        }
        let tampered = OtuTable::new(
            truth.table.samples().to_vec(),
            truth.table.taxa().to_vec(),
            tampered_counts,
        )
        .unwrap();

        for family in [Family::Pearson, Family::Lasso, Family::Ggm] {
            let spec = PredictorSpec::new(family);
            let a = fit_fold_models(&truth.table, &spec, TransformMode::ScaleOnly, &plan).unwrap();
            let b = fit_fold_models(&tampered, &spec, TransformMode::ScaleOnly, &plan).unwrap();
            // Fold 1's model saw identical training rows in both tables.
            match (&a[0].1, &b[0].1) {
                (
                    crate::predictors::FittedModel::Correlation(x),
                    crate::predictors::FittedModel::Correlation(y),
                ) => {
                    assert_eq!(x.corr(), y.corr());
                    assert_eq!(x.threshold, y.threshold);
                }
                (
                    crate::predictors::FittedModel::Lasso(x),
                    crate::predictors::FittedModel::Lasso(y),
                ) => {
                    for (tx, ty) in x.targets.iter().zip(y.targets.iter()) {
                        assert_eq!(tx.weights, ty.weights);
                        assert_eq!(tx.intercept, ty.intercept);
                    }
                }
                (
                    crate::predictors::FittedModel::Ggm(x),
                    crate::predictors::FittedModel::Ggm(y),
                ) => {
                    assert_eq!(x.precision, y.precision);
                }
                _ => panic!("family mismatch"),
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let truth = generate_synthetic(5, 40, 0.4, 81).unwrap();
        let plan = make_folds(40, 3, 82).unwrap();
        let spec = PredictorSpec::new(Family::Lasso);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                evaluate_algorithm(
                    &truth.table,
                    &spec,
                    TransformMode::ScaleOnly,
                    &plan,
                    "synthetic",
                )
                .unwrap()
            })
        };
        assert_eq!(run(1), run(8));
    }
}

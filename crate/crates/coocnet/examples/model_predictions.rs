//! The predictor interface: fit each family on a training split and
//! predict one held-out taxon from the others.
//!
//! Run with: cargo run --example model_predictions

use coocnet::otu::generate_synthetic;
use coocnet::predictors::{fit_model, make_inner_split, Family, PredictorSpec};
use coocnet::stats;
use coocnet::transform::{fit_pipeline, TransformMode};
use ndarray::Axis;

fn main() -> coocnet::Result<()> {
    let truth = generate_synthetic(6, 150, 0.35, 23)?;
    let table = truth.table;

    // 100 training rows, 50 held out.
    let train_idx: Vec<usize> = (0..100).collect();
    let test_idx: Vec<usize> = (100..150).collect();
    let train_raw = table.counts().select(Axis(0), &train_idx);
    let test_raw = table.counts().select(Axis(0), &test_idx);

    // Preprocessing is fit on training rows only.
    let transform = fit_pipeline(&train_raw, TransformMode::ScaleOnly)?;
    let train = transform.apply(&train_raw)?;
    let test = transform.apply(&test_raw)?;

    // One shared subtrain/validation split trains every family's
    // hyper-parameters.
    let split = make_inner_split(train.nrows(), 0.75, 99)?;

    let target = 0;
    println!(
        "predicting '{}' from the other {} taxa on 50 held-out rows\n",
        table.taxa()[target],
        table.n_taxa() - 1
    );
    println!("{:>12}  {:>9}  trained hyper-parameter", "family", "test MSE");
    for family in Family::all() {
        let spec = PredictorSpec::new(family);
        let model = fit_model(&spec, &train, &split)?;
        let pred = model.predict(target, &test)?;
        let mse = stats::mse(&pred, &test.column(target).to_owned());
        let hyper = match &model {
            coocnet::FittedModel::Featureless(_) => "-".to_string(),
            coocnet::FittedModel::Correlation(m) => format!("threshold = {:.3}", m.threshold),
            coocnet::FittedModel::Lasso(m) => {
                format!("lambda[target] = {:.4}", m.targets[target].lambda)
            }
            coocnet::FittedModel::Ggm(m) => format!("lambda = {:.4}", m.lambda),
        };
        println!("{:>12}  {:>9.4}  {hyper}", family.to_string(), mse);
    }
    Ok(())
}

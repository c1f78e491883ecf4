//! From fitted models to a signed co-occurrence network: per-fold
//! association matrices, the median network across folds, edge counts,
//! export, and a check against the generating truth.
//!
//! Run with: cargo run --example network_inference

use coocnet::cv::{fit_fold_models, make_folds};
use coocnet::network::{
    association_of, edge_stats, median_network, write_edge_list_csv, GgmConvention,
};
use coocnet::otu::generate_synthetic;
use coocnet::predictors::{Family, PredictorSpec};
use coocnet::transform::TransformMode;
use std::collections::BTreeSet;

fn main() -> coocnet::Result<()> {
    let truth = generate_synthetic(10, 200, 0.2, 53)?;
    let table = &truth.table;
    let plan = make_folds(table.n_samples(), 3, 54)?;
    println!("true support: {} edges\n", truth.support.len());

    println!(
        "{:>10}  {:>5}  {:>4}  {:>4}  {:>9}  {:>9}",
        "family", "edges", "pos", "neg", "precision", "recall"
    );
    for family in [Family::Pearson, Family::Spearman, Family::Lasso, Family::Ggm] {
        let spec = PredictorSpec::new(family);
        let fold_models = fit_fold_models(table, &spec, TransformMode::ScaleOnly, &plan)?;

        // One association matrix per fold, then the elementwise median:
        // an edge must appear in most folds to survive.
        let mut mats = Vec::new();
        for (_, model) in &fold_models {
            let assoc = association_of(model, table.taxa(), GgmConvention::RawPrecision)?
                .expect("network-capable family");
            mats.push(assoc);
        }
        let net = median_network(&mats)?;
        let stats = edge_stats(&net);

        let found: BTreeSet<(usize, usize)> = net.edges.iter().map(|e| (e.i, e.j)).collect();
        let tp = found.intersection(&truth.support).count();
        let precision = if found.is_empty() { 0.0 } else { tp as f64 / found.len() as f64 };
        let recall = tp as f64 / truth.support.len() as f64;
        println!(
            "{:>10}  {:>5}  {:>4}  {:>4}  {:>9.2}  {:>9.2}",
            family.to_string(),
            stats.total,
            stats.positive,
            stats.negative,
            precision,
            recall
        );
    }

    // Export the graphical model's network as an edge list.
    let spec = PredictorSpec::new(Family::Ggm);
    let fold_models = fit_fold_models(table, &spec, TransformMode::ScaleOnly, &plan)?;
    let mats: coocnet::Result<Vec<_>> = fold_models
        .iter()
        .map(|(_, m)| Ok(association_of(m, table.taxa(), GgmConvention::RawPrecision)?.unwrap()))
        .collect();
    let net = median_network(&mats?)?;
    let mut buf = Vec::new();
    write_edge_list_csv(&net, &mut buf)?;
    println!("\nedge list (graphical model):\n{}", String::from_utf8_lossy(&buf));
    Ok(())
}

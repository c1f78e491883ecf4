//! The `coocnet` command-line front end: five subcommands binding
//! ingestion, transforms, cross-validation, and network export into
//! reproducible runs. Every command is a pure function of its config and
//! input files; output schemas are documented in FORMATS.md.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{DatasetConfig, RunConfig, DEFAULT_CONFIG_TOML};
use crate::cv::{self, EvalRecord};
use crate::error::{Error, Result};
use crate::network;
use crate::otu::{self, Orientation, OtuTable};
use crate::predictors::{Family, PredictorSpec};
use crate::transform;

#[derive(Debug, Parser)]
#[command(
    name = "coocnet",
    about = "Cross-validated training and testing of co-occurrence network inference algorithms",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config file).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Worker threads; 0 = available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// CSV layout of the input table.
    #[arg(long, global = true, value_enum)]
    orientation: Option<Orientation>,

    /// Input table path (overrides [dataset] in the config file).
    #[arg(long, global = true, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Dataset identifier used in output records.
    #[arg(long, global = true)]
    dataset_id: Option<String>,

    /// Print the annotated default configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Fit the preprocessing pipeline on a table and write the
    /// transformed CSV plus a parameter sidecar.
    Transform,
    /// Run the K-fold evaluation of every configured algorithm and write
    /// per-taxon records plus aggregates.
    Evaluate,
    /// Evaluate across a grid of subsample sizes and write the
    /// size-vs-error table.
    Curve,
    /// Infer per-fold association networks, combine them by elementwise
    /// median, and export edge lists plus an edge-count summary.
    Network,
    /// Generate a synthetic table with known precision-matrix ground
    /// truth.
    Simulate,
}

/// Parses arguments, runs the requested command, and maps errors to exit
/// codes: 0 success, 1 config/IO error, 2 numerical failure.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    if cli.print_config {
        print!("{DEFAULT_CONFIG_TOML}");
        return 0;
    }
    let Some(command) = cli.command else {
        eprintln!("error: missing subcommand (transform, evaluate, curve, network, simulate)");
        return 1;
    };
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(err) => {
            eprintln!("error: {err}");
            return err.exit_code();
        }
    };
    let outcome = with_worker_pool(config.workers, || match command {
        Command::Transform => cmd_transform(&config),
        Command::Evaluate => cmd_evaluate(&config),
        Command::Curve => cmd_curve(&config),
        Command::Network => cmd_network(&config),
        Command::Simulate => cmd_simulate(&config),
    });
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(out_dir) = &cli.out_dir {
        config.out_dir = out_dir.clone();
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    if let Some(input) = &cli.input {
        match &mut config.dataset {
            Some(dataset) => dataset.path = input.clone(),
            None => {
                config.dataset = Some(DatasetConfig {
                    path: input.clone(),
                    orientation: Orientation::default(),
                    id: None,
                })
            }
        }
    }
    if let Some(orientation) = cli.orientation {
        if let Some(dataset) = &mut config.dataset {
            dataset.orientation = orientation;
        }
    }
    if let Some(id) = &cli.dataset_id {
        if let Some(dataset) = &mut config.dataset {
            dataset.id = Some(id.clone());
        }
    }
    config.validate()?;
    Ok(config)
}

fn with_worker_pool<T>(workers: usize, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    if workers == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool");
        pool.install(f)
    }
}

fn load_dataset(config: &RunConfig) -> Result<(OtuTable, String)> {
    let dataset = config.require_dataset()?;
    let table = otu::load_otu_csv(&dataset.path, dataset.orientation)?;
    Ok((table, dataset.id()))
}

fn ensure_out_dir(config: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&config.out_dir)?;
    Ok(config.out_dir.clone())
}

// ---------------------------------------------------------------------
// transform
// ---------------------------------------------------------------------

#[derive(serde::Serialize)]
struct TransformSidecar<'a> {
    mode: String,
    dataset: &'a str,
    lambdas: Option<Vec<f64>>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

fn cmd_transform(config: &RunConfig) -> Result<()> {
    let (table, id) = load_dataset(config)?;
    let out = ensure_out_dir(config)?;
    let fitted = transform::fit_pipeline(table.counts(), config.transform)?;
    let transformed = fitted.apply(table.counts())?;
    let out_table = OtuTable::new(
        table.samples().to_vec(),
        table.taxa().to_vec(),
        transformed,
    )?;
    otu::write_otu_csv(&out_table, &out.join("transformed.csv"))?;

    let sidecar = TransformSidecar {
        mode: config.transform.to_string(),
        dataset: &id,
        lambdas: fitted.yj.as_ref().map(|p| p.lambdas.to_vec()),
        means: fitted.scaler.means.to_vec(),
        sds: fitted.scaler.sds.to_vec(),
    };
    let file = std::fs::File::create(out.join("transform_params.json"))?;
    serde_json::to_writer_pretty(file, &sidecar)
        .map_err(|e| Error::Parse(format!("transform sidecar: {e}")))?;
    Ok(())
}

// ---------------------------------------------------------------------
// evaluate / curve
// ---------------------------------------------------------------------

fn write_records_csv(records: &[EvalRecord], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(std::fs::File::create(path)?);
    wtr.write_record([
        "dataset",
        "algorithm",
        "n",
        "replicate",
        "fold",
        "target_index",
        "target_taxon",
        "mse",
        "error",
    ])?;
    for r in records {
        wtr.write_record([
            r.dataset.as_str(),
            r.algorithm.as_str(),
            &r.n.to_string(),
            &r.replicate.to_string(),
            &r.fold.to_string(),
            &r.target.to_string(),
            r.taxon.as_str(),
            &r.mse.map(|v| v.to_string()).unwrap_or_default(),
            r.error.as_deref().unwrap_or(""),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_summary_csv(groups: &[cv::CurveGroup], path: &Path, with_counts: bool) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(std::fs::File::create(path)?);
    if with_counts {
        wtr.write_record(["algorithm", "n", "mean_mse", "var_mse", "records", "errors"])?;
    } else {
        wtr.write_record(["algorithm", "n", "mean_mse", "var_mse"])?;
    }
    for g in groups {
        let mut row = vec![
            g.algorithm.to_string(),
            g.n.to_string(),
            g.mean_mse.to_string(),
            g.var_mse.to_string(),
        ];
        if with_counts {
            row.push(g.count.to_string());
            row.push(g.errors.to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn cmd_evaluate(config: &RunConfig) -> Result<()> {
    let (table, id) = load_dataset(config)?;
    let out = ensure_out_dir(config)?;
    let seed = config.require_seed()?;
    let specs = config.algorithm_specs();
    let plan = cv::make_folds(table.n_samples(), config.k, seed)?;
    let mut records = Vec::new();
    for spec in &specs {
        records.extend(cv::evaluate_algorithm(
            &table,
            spec,
            config.transform,
            &plan,
            &id,
        )?);
        for r in records.iter().filter(|r| r.error.is_some()) {
            log::warn!(
                "evaluate: {}/{} fold {} target {}: {}",
                r.dataset,
                r.algorithm,
                r.fold,
                r.target,
                r.error.as_deref().unwrap_or("")
            );
        }
    }
    cv::sort_records(&mut records);
    write_records_csv(&records, &out.join("records.csv"))?;
    let groups = cv::aggregate(&records)?;
    write_summary_csv(&groups, &out.join("summary.csv"), true)?;
    Ok(())
}

fn cmd_curve(config: &RunConfig) -> Result<()> {
    let (table, id) = load_dataset(config)?;
    let out = ensure_out_dir(config)?;
    let seed = config.require_seed()?;
    let specs = config.algorithm_specs();
    let sizes = config.curve_sizes(table.n_samples());
    let records = cv::subsample_curve(
        &table,
        &sizes,
        &specs,
        config.transform,
        config.k,
        seed,
        config.curve.replicates,
        &id,
    )?;
    write_records_csv(&records, &out.join("curve_records.csv"))?;
    let groups = cv::aggregate(&records)?;
    write_summary_csv(&groups, &out.join("curve.csv"), false)?;
    Ok(())
}

// ---------------------------------------------------------------------
// network
// ---------------------------------------------------------------------

fn cmd_network(config: &RunConfig) -> Result<()> {
    let (table, id) = load_dataset(config)?;
    let out = ensure_out_dir(config)?;
    let seed = config.require_seed()?;
    let specs: Vec<PredictorSpec> = config
        .algorithm_specs()
        .into_iter()
        .filter(|s| {
            if s.family == Family::Featureless {
                log::warn!("network: the featureless baseline has no network; skipping");
                false
            } else {
                true
            }
        })
        .collect();
    if specs.is_empty() {
        return Err(Error::InvalidInput(
            "network: no network-capable algorithms configured".into(),
        ));
    }
    let plan = cv::make_folds(table.n_samples(), config.k, seed)?;
    let convention = config.network.ggm_convention;

    let mut count_rows = Vec::new();
    for spec in &specs {
        let fold_models = cv::fit_fold_models(&table, spec, config.transform, &plan)?;
        let mut mats = Vec::new();
        for (fold, model) in &fold_models {
            let assoc = network::association_of(model, table.taxa(), convention)?
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "network: {} produced no association matrix (fold {fold})",
                        spec.family
                    ))
                })?;
            mats.push(assoc);
        }
        let net = network::median_network(&mats)?;
        network::export_edge_list_csv(&net, &out.join(format!("network_{}.csv", spec.family)))?;
        network::export_graph_json(&net, &out.join(format!("network_{}.json", spec.family)))?;
        let stats = network::edge_stats(&net);
        count_rows.push((spec.family, stats));
        log::info!(
            "network: {} ({id}): {} edges ({} positive, {} negative)",
            spec.family,
            stats.total,
            stats.positive,
            stats.negative
        );
    }

    let mut wtr = csv::Writer::from_writer(std::fs::File::create(out.join("edge_counts.csv"))?);
    wtr.write_record(["algorithm", "positive", "negative", "total"])?;
    for (family, stats) in &count_rows {
        wtr.write_record([
            family.as_str(),
            &stats.positive.to_string(),
            &stats.negative.to_string(),
            &stats.total.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------

#[derive(serde::Serialize)]
struct TruthJson {
    taxa: Vec<String>,
    samples: usize,
    edge_density: f64,
    seed: u64,
    counts: bool,
    support: Vec<(usize, usize)>,
    precision: Vec<Vec<f64>>,
}

fn cmd_simulate(config: &RunConfig) -> Result<()> {
    let out = ensure_out_dir(config)?;
    let seed = config.require_seed()?;
    let sim = &config.simulate;
    let truth = if sim.counts {
        otu::generate_synthetic_counts(sim.taxa, sim.samples, sim.edge_density, seed)?
    } else {
        otu::generate_synthetic(sim.taxa, sim.samples, sim.edge_density, seed)?
    };
    otu::write_otu_csv(&truth.table, &out.join("synthetic.csv"))?;

    let d = truth.precision.nrows();
    let precision: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| truth.precision[[i, j]]).collect())
        .collect();
    let doc = TruthJson {
        taxa: truth.table.taxa().to_vec(),
        samples: sim.samples,
        edge_density: sim.edge_density,
        seed,
        counts: sim.counts,
        support: truth.support.iter().copied().collect(),
        precision,
    };
    let mut file = std::fs::File::create(out.join("truth.json"))?;
    serde_json::to_writer_pretty(&file, &doc)
        .map_err(|e| Error::Parse(format!("truth json: {e}")))?;
    file.flush()?;
    Ok(())
}

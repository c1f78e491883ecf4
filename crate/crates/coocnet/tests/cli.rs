//! End-to-end tests of the `coocnet` binary: the simulate → transform →
//! evaluate → curve → network chain, output schemas, determinism, and
//! exit codes.

use std::path::Path;
use std::process::{Command, Output};

use ndarray::Array2;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coocnet"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn print_config_parses_and_exits_clean() {
    let out = run(&["--print-config"]);
    assert_success(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[simulate]"));
    assert!(text.contains("seed = 0"));
}

#[test]
fn missing_subcommand_and_missing_seed_exit_one() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "no seed given");
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unreadable_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["evaluate", "--seed", "1", "--input", "no-such-file.csv", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_pipeline_on_simulated_data() {
    let dir = tempfile::tempdir().unwrap();
    let sim_dir = dir.path().join("sim");
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        "seed = 11\nk = 3\n[simulate]\ntaxa = 5\nsamples = 60\nedge_density = 0.4\n",
    )
    .unwrap();

    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .args(["--out-dir"])
        .arg(&sim_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let table_path = sim_dir.join("synthetic.csv");
    assert!(table_path.is_file());

    // Truth sidecar: support pairs and a positive-definite precision.
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sim_dir.join("truth.json")).unwrap())
            .unwrap();
    let precision = truth["precision"].as_array().unwrap();
    assert_eq!(precision.len(), 5);
    let matrix = Array2::from_shape_fn((5, 5), |(i, j)| {
        precision[i].as_array().unwrap()[j].as_f64().unwrap()
    });
    assert!(coocnet::linalg::is_spd(&matrix), "reloaded precision is SPD");
    for pair in truth["support"].as_array().unwrap() {
        let (i, j) = (pair[0].as_usize_lossy(), pair[1].as_usize_lossy());
        assert!(i < j && j < 5);
        assert!(matrix[[i, j]] != 0.0);
    }

    // transform: sidecar carries one power parameter per column and the
    // output columns are centered.
    let t_dir = dir.path().join("transform");
    let out = bin()
        .args(["transform", "--seed", "11", "--input"])
        .arg(&table_path)
        .args(["--out-dir"])
        .arg(&t_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t_dir.join("transform_params.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["lambdas"].as_array().unwrap().len(), 5);
    assert_eq!(sidecar["mode"], "yj-then-scale");
    let transformed =
        coocnet::otu::load_otu_csv(&t_dir.join("transformed.csv"), coocnet::Orientation::RowsAreSamples)
            .unwrap();
    for j in 0..transformed.n_taxa() {
        let col: Vec<f64> = transformed.counts().column(j).to_vec();
        assert!(coocnet::stats::mean(&col).abs() < 1e-10);
    }

    // evaluate: K·D·families records plus a summary.
    let e_dir = dir.path().join("eval");
    let out = bin()
        .args(["evaluate", "--config"])
        .arg(&config_path)
        .args(["--input"])
        .arg(&table_path)
        .args(["--out-dir"])
        .arg(&e_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let records = read_lines(&e_dir.join("records.csv"));
    assert_eq!(records.len() - 1, 3 * 5 * 5, "3 folds x 5 taxa x 5 families");
    assert_eq!(
        records[0],
        "dataset,algorithm,n,replicate,fold,target_index,target_taxon,mse,error"
    );
    let summary = read_lines(&e_dir.join("summary.csv"));
    assert_eq!(summary.len() - 1, 5, "one row per family");

    // curve: tidy summary with one row per (family, size).
    let c_dir = dir.path().join("curve");
    std::fs::write(
        dir.path().join("curve.toml"),
        "seed = 11\nk = 3\n[curve]\nsizes = [20, 40]\nreplicates = 1\n",
    )
    .unwrap();
    let out = bin()
        .args(["curve", "--config"])
        .arg(dir.path().join("curve.toml"))
        .args(["--input"])
        .arg(&table_path)
        .args(["--out-dir"])
        .arg(&c_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let curve = read_lines(&c_dir.join("curve.csv"));
    assert_eq!(curve[0], "algorithm,n,mean_mse,var_mse");
    assert_eq!(curve.len() - 1, 5 * 2, "5 families x 2 sizes");

    // network: per-family exports plus the edge-count table.
    let n_dir = dir.path().join("net");
    let out = bin()
        .args(["network", "--config"])
        .arg(&config_path)
        .args(["--input"])
        .arg(&table_path)
        .args(["--out-dir"])
        .arg(&n_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let counts = read_lines(&n_dir.join("edge_counts.csv"));
    assert_eq!(counts[0], "algorithm,positive,negative,total");
    // The featureless baseline has no network: four rows remain.
    assert_eq!(counts.len() - 1, 4);
    for family in ["pearson", "spearman", "lasso", "ggm"] {
        assert!(n_dir.join(format!("network_{family}.csv")).is_file());
        assert!(n_dir.join(format!("network_{family}.json")).is_file());
        let doc: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(n_dir.join(format!("network_{family}.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(doc["nodes"].as_array().unwrap().len(), 5);
    }
    for line in &counts[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        let (p, n, t): (usize, usize, usize) = (
            fields[1].parse().unwrap(),
            fields[2].parse().unwrap(),
            fields[3].parse().unwrap(),
        );
        assert_eq!(p + n, t, "sign partition in {line}");
    }
}

trait AsUsizeLossy {
    fn as_usize_lossy(&self) -> usize;
}

impl AsUsizeLossy for serde_json::Value {
    fn as_usize_lossy(&self) -> usize {
        self.as_u64().unwrap() as usize
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let out = bin()
        .args(["simulate", "--seed", "5", "--out-dir"])
        .arg(&sim)
        .output()
        .unwrap();
    assert_success(&out);
    let table = sim.join("synthetic.csv");

    let mut blobs = Vec::new();
    for run_dir in ["a", "b"] {
        let out_dir = dir.path().join(run_dir);
        let out = bin()
            .args(["evaluate", "--seed", "5", "--input"])
            .arg(&table)
            .args(["--out-dir"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_success(&out);
        blobs.push((
            std::fs::read(out_dir.join("records.csv")).unwrap(),
            std::fs::read(out_dir.join("summary.csv")).unwrap(),
        ));
    }
    assert_eq!(blobs[0], blobs[1]);

    // Simulate is deterministic too.
    let sim2 = dir.path().join("sim2");
    let out = bin()
        .args(["simulate", "--seed", "5", "--out-dir"])
        .arg(&sim2)
        .output()
        .unwrap();
    assert_success(&out);
    assert_eq!(
        std::fs::read(table).unwrap(),
        std::fs::read(sim2.join("synthetic.csv")).unwrap()
    );
}

#[test]
fn r_data_files_are_rejected_with_guidance() {
    let dir = tempfile::tempdir().unwrap();
    let rdata = dir.path().join("table.RData");
    std::fs::write(&rdata, b"not really").unwrap();
    let out = bin()
        .args(["evaluate", "--seed", "1", "--input"])
        .arg(&rdata)
        .args(["--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("convert"), "stderr: {stderr}");
}

#[test]
fn orientation_flag_transposes_input() {
    let dir = tempfile::tempdir().unwrap();
    // Rows are taxa: 2 taxa x 4 samples.
    let path = dir.path().join("taxa_rows.csv");
    std::fs::write(
        &path,
        "taxon,s1,s2,s3,s4\nta,1,2,3,4\ntb,4,3,2,1\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args([
            "transform",
            "--seed",
            "1",
            "--orientation",
            "rows-are-taxa",
            "--input",
        ])
        .arg(&path)
        .args(["--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let table = coocnet::otu::load_otu_csv(
        &out_dir.join("transformed.csv"),
        coocnet::Orientation::RowsAreSamples,
    )
    .unwrap();
    assert_eq!(table.n_samples(), 4);
    assert_eq!(table.taxa(), ["ta", "tb"]);
}

//! Abundance tables: loading, validation, subsampling, and synthetic
//! data with known ground truth. This is the single entry point for all
//! data reaching the pipeline.
//!
//! Tables travel as CSV only. The first row carries taxon names and the
//! first column carries sample identifiers (in the rows-are-samples
//! orientation); the loader transposes rows-are-taxa files on the way
//! in. Other container formats are rejected with a pointer to the
//! conversion they need.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use clap::ValueEnum;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::seeding::{derive_seed, rng_from_seed};

/// Which way a CSV file is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    #[default]
    RowsAreSamples,
    RowsAreTaxa,
}

/// An N×D matrix of taxon abundances with sample and taxon labels.
/// Raw counts are non-negative; transformed tables may hold any real.
#[derive(Debug, Clone, PartialEq)]
pub struct OtuTable {
    samples: Vec<String>,
    taxa: Vec<String>,
    counts: Array2<f64>,
}

impl OtuTable {
    /// Builds a table, enforcing the shape and label invariants:
    /// at least one sample, at least two taxa, matching matrix
    /// dimensions, unique labels.
    pub fn new(samples: Vec<String>, taxa: Vec<String>, counts: Array2<f64>) -> Result<OtuTable> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("otu table: no samples".into()));
        }
        if taxa.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "otu table: need at least 2 taxa, got {}",
                taxa.len()
            )));
        }
        if counts.nrows() != samples.len() || counts.ncols() != taxa.len() {
            return Err(Error::DimensionMismatch(format!(
                "otu table: matrix is {}x{} but labels say {}x{}",
                counts.nrows(),
                counts.ncols(),
                samples.len(),
                taxa.len()
            )));
        }
        if let Some(dup) = first_duplicate(&samples) {
            return Err(Error::InvalidInput(format!(
                "otu table: duplicate sample id '{dup}'"
            )));
        }
        if let Some(dup) = first_duplicate(&taxa) {
            return Err(Error::InvalidInput(format!(
                "otu table: duplicate taxon name '{dup}'"
            )));
        }
        Ok(OtuTable {
            samples,
            taxa,
            counts,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_taxa(&self) -> usize {
        self.taxa.len()
    }

    pub fn samples(&self) -> &[String] {
        &self.samples
    }

    pub fn taxa(&self) -> &[String] {
        &self.taxa
    }

    pub fn counts(&self) -> &Array2<f64> {
        &self.counts
    }

    /// A new table holding the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> OtuTable {
        OtuTable {
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            taxa: self.taxa.clone(),
            counts: self.counts.select(Axis(0), idx),
        }
    }
}

fn first_duplicate(labels: &[String]) -> Option<&String> {
    let mut seen = BTreeSet::new();
    labels.iter().find(|l| !seen.insert(l.as_str()))
}

/// Loads a CSV abundance table. `orientation` says whether file rows are
/// samples or taxa; the returned table is always samples×taxa.
pub fn load_otu_csv(path: &Path, orientation: Orientation) -> Result<OtuTable> {
    if let Some(ext) = path.extension().and_then(|e| e.to_str()) {
        let lower = ext.to_ascii_lowercase();
        if lower == "rda" || lower == "rdata" || lower == "rds" {
            return Err(Error::Parse(format!(
                "load_otu_csv: '{}' looks like an R data file; convert it to CSV first, \
                 e.g. Rscript -e 'load(\"{}\"); write.csv(as.data.frame(get(ls()[1])), \"table.csv\")'",
                path.display(),
                path.display()
            )));
        }
    }
    let file = std::fs::File::open(path)?;
    read_otu_csv(file, orientation)
}

/// The reader-based core of [`load_otu_csv`].
pub fn read_otu_csv<R: Read>(reader: R, orientation: Orientation) -> Result<OtuTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(rec) => rec?,
        None => return Err(Error::Parse("load_otu_csv: empty file".into())),
    };
    if header.len() < 2 {
        return Err(Error::Parse(
            "load_otu_csv: header must contain a label cell plus at least one column".into(),
        ));
    }
    // First header cell is the corner label; the rest are column labels.
    let col_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();

    let mut row_labels = Vec::new();
    let mut data = Vec::new();
    for rec in rows {
        let rec = rec?;
        let mut fields = rec.iter();
        let label = fields
            .next()
            .ok_or_else(|| Error::Parse("load_otu_csv: empty row".into()))?;
        row_labels.push(label.to_string());
        for (k, cell) in fields.enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                Error::Parse(format!(
                    "load_otu_csv: row '{label}', column {}: cannot parse '{cell}' as a number",
                    k + 2
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Parse(format!(
                    "load_otu_csv: row '{label}': non-finite value {value}"
                )));
            }
            data.push(value);
        }
    }
    if row_labels.is_empty() {
        return Err(Error::Parse("load_otu_csv: no data rows".into()));
    }
    let matrix = Array2::from_shape_vec((row_labels.len(), col_labels.len()), data)
        .map_err(|e| Error::Parse(format!("load_otu_csv: ragged table: {e}")))?;

    match orientation {
        Orientation::RowsAreSamples => OtuTable::new(row_labels, col_labels, matrix),
        Orientation::RowsAreTaxa => {
            OtuTable::new(col_labels, row_labels, matrix.t().to_owned())
        }
    }
}

/// Writes a table in the rows-are-samples orientation. Values print with
/// the shortest round-trip representation, so a write/load cycle is
/// lossless.
pub fn write_otu_csv(table: &OtuTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_otu_csv_to(table, file)
}

pub fn write_otu_csv_to<W: Write>(table: &OtuTable, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["sample_id".to_string()];
    header.extend(table.taxa.iter().cloned());
    wtr.write_record(&header)?;
    for (i, sample) in table.samples.iter().enumerate() {
        let mut row = vec![sample.clone()];
        row.extend(table.counts.row(i).iter().map(|v| format!("{v}")));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Data-quality warnings. Reporting only; the table is never modified.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationWarning {
    ZeroVarianceColumn { index: usize, taxon: String },
    NegativeValue { row: usize, col: usize, value: f64 },
    ConstantRow { index: usize, sample: String },
}

impl std::fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidationWarning::ZeroVarianceColumn { index, taxon } => {
                write!(f, "zero-variance column {index} ('{taxon}')")
            }
            ValidationWarning::NegativeValue { row, col, value } => write!(
                f,
                "negative value {value} at row {row}, column {col} (unexpected for raw counts)"
            ),
            ValidationWarning::ConstantRow { index, sample } => {
                write!(f, "constant row {index} ('{sample}')")
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub warnings: Vec<ValidationWarning>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn zero_variance_columns(&self) -> Vec<usize> {
        self.warnings
            .iter()
            .filter_map(|w| match w {
                ValidationWarning::ZeroVarianceColumn { index, .. } => Some(*index),
                _ => None,
            })
            .collect()
    }
}

/// Scans a table for zero-variance columns, negative values, and
/// constant rows.
pub fn validate_table(table: &OtuTable) -> ValidationReport {
    let mut warnings = Vec::new();
    let m = table.counts();
    for (j, col) in m.axis_iter(Axis(1)).enumerate() {
        let col: Vec<f64> = col.to_vec();
        let sd = crate::stats::variance_population(&col).sqrt();
        if crate::stats::is_negligible_sd(sd, crate::stats::mean(&col)) {
            warnings.push(ValidationWarning::ZeroVarianceColumn {
                index: j,
                taxon: table.taxa[j].clone(),
            });
        }
    }
    for ((i, j), &v) in m.indexed_iter() {
        if v < 0.0 {
            warnings.push(ValidationWarning::NegativeValue { row: i, col: j, value: v });
        }
    }
    for (i, row) in m.axis_iter(Axis(0)).enumerate() {
        let first = row[0];
        if table.n_taxa() > 1 && row.iter().all(|&v| v == first) {
            warnings.push(ValidationWarning::ConstantRow {
                index: i,
                sample: table.samples[i].clone(),
            });
        }
    }
    ValidationReport { warnings }
}

/// Draws `n` rows uniformly without replacement. Deterministic for a
/// fixed seed; the taxa are untouched.
pub fn subsample(table: &OtuTable, n: usize, seed: u64) -> Result<OtuTable> {
    let total = table.n_samples();
    if n == 0 || n > total {
        return Err(Error::InvalidInput(format!(
            "subsample: n = {n} out of range 1..={total}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut idx: Vec<usize> = (0..total).collect();
    // Partial Fisher-Yates: the first n slots are a uniform draw.
    for i in 0..n {
        let j = rng.random_range(i..total);
        idx.swap(i, j);
    }
    idx.truncate(n);
    Ok(table.select_rows(&idx))
}

/// A synthetic table plus the precision matrix and edge support that
/// generated it. Ground truth for support-recovery tests.
#[derive(Debug, Clone)]
pub struct SyntheticTruth {
    pub table: OtuTable,
    pub precision: Array2<f64>,
    pub support: BTreeSet<(usize, usize)>,
}

/// Generates a zero-mean Gaussian table whose precision matrix is sparse
/// with the requested off-diagonal density. Each unordered taxon pair
/// enters the support independently with probability `edge_density`; the
/// diagonal is set above each row's absolute sum, so the matrix is
/// strictly diagonally dominant and therefore positive definite.
pub fn generate_synthetic(
    d: usize,
    n: usize,
    edge_density: f64,
    seed: u64,
) -> Result<SyntheticTruth> {
    generate_synthetic_table(d, n, edge_density, seed, false)
}

/// Like [`generate_synthetic`], but maps each Gaussian value `v` to
/// `round(exp(v))` so the table mimics count data. The recorded
/// precision matrix still describes the underlying Gaussian.
pub fn generate_synthetic_counts(
    d: usize,
    n: usize,
    edge_density: f64,
    seed: u64,
) -> Result<SyntheticTruth> {
    generate_synthetic_table(d, n, edge_density, seed, true)
}

fn generate_synthetic_table(
    d: usize,
    n: usize,
    edge_density: f64,
    seed: u64,
    as_counts: bool,
) -> Result<SyntheticTruth> {
    if d < 2 || n < 2 {
        return Err(Error::InvalidInput(format!(
            "generate_synthetic: need d >= 2 and n >= 2, got d = {d}, n = {n}"
        )));
    }
    if !(edge_density > 0.0 && edge_density < 1.0) {
        return Err(Error::InvalidInput(format!(
            "generate_synthetic: edge_density must lie in (0, 1), got {edge_density}"
        )));
    }

    const MAX_RETRIES: u64 = 16;
    let mut chol_sigma = None;
    let mut precision = Array2::<f64>::zeros((d, d));
    let mut support = BTreeSet::new();
    for attempt in 0..MAX_RETRIES {
        let mut rng = rng_from_seed(derive_seed(seed, &[attempt]));
        precision.fill(0.0);
        support.clear();
        for i in 0..d {
            for j in i + 1..d {
                if rng.random::<f64>() < edge_density {
                    let magnitude = 0.35 + 0.3 * rng.random::<f64>();
                    let value = if rng.random::<bool>() { magnitude } else { -magnitude };
                    precision[[i, j]] = value;
                    precision[[j, i]] = value;
                    support.insert((i, j));
                }
            }
        }
        // Strict diagonal dominance keeps the matrix positive definite
        // while leaving the partial correlations strong.
        for i in 0..d {
            let row_sum: f64 = (0..d).filter(|&j| j != i).map(|j| precision[[i, j]].abs()).sum();
            precision[[i, i]] = 0.5 + row_sum;
        }
        let sigma = match linalg::spd_inverse(&precision) {
            Some(s) => s,
            None => continue,
        };
        if let Some(l) = linalg::cholesky(&sigma) {
            chol_sigma = Some(l);
            break;
        }
    }
    let chol_sigma = chol_sigma.ok_or_else(|| {
        Error::Numerical(format!(
            "generate_synthetic: no positive-definite precision matrix found at density \
             {edge_density} after {MAX_RETRIES} attempts"
        ))
    })?;

    let mut rng = rng_from_seed(derive_seed(seed, &[u64::MAX]));
    let mut counts = Array2::<f64>::zeros((n, d));
    let mut z = Array1::<f64>::zeros(d);
    for mut row in counts.axis_iter_mut(Axis(0)) {
        for zi in z.iter_mut() {
            *zi = rng.sample(rand_distr::StandardNormal);
        }
        let x = chol_sigma.dot(&z);
        if as_counts {
            row.assign(&x.mapv(|v| v.exp().round()));
        } else {
            row.assign(&x);
        }
    }

    let samples = (1..=n).map(|i| format!("s{i}")).collect();
    let taxa = (1..=d).map(|j| format!("otu{j}")).collect();
    Ok(SyntheticTruth {
        table: OtuTable::new(samples, taxa, counts)?,
        precision,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    const SMALL_CSV: &str = "sample_id,taxA,taxB,taxC\ns1,1,2,3\ns2,4,5,6\ns3,7,8,9.5\n";

    #[test]
    fn loads_small_table() {
        let t = read_otu_csv(SMALL_CSV.as_bytes(), Orientation::RowsAreSamples).unwrap();
        assert_eq!(t.n_samples(), 3);
        assert_eq!(t.n_taxa(), 3);
        assert_eq!(t.taxa(), ["taxA", "taxB", "taxC"]);
        assert_eq!(t.counts()[[2, 2]], 9.5);
    }

    #[test]
    fn opposite_orientations_are_transposes() {
        let a = read_otu_csv(SMALL_CSV.as_bytes(), Orientation::RowsAreSamples).unwrap();
        let b = read_otu_csv(SMALL_CSV.as_bytes(), Orientation::RowsAreTaxa).unwrap();
        assert_eq!(b.samples(), a.taxa());
        assert_eq!(b.taxa(), a.samples());
        assert_eq!(b.counts(), &a.counts().t().to_owned());
    }

    #[test]
    fn write_then_load_round_trips_exactly() {
        let t = generate_synthetic(4, 9, 0.4, 99).unwrap().table;
        let mut buf = Vec::new();
        write_otu_csv_to(&t, &mut buf).unwrap();
        let back = read_otu_csv(buf.as_slice(), Orientation::RowsAreSamples).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_r_data_files() {
        let err = load_otu_csv(Path::new("data/crohns.RData"), Orientation::RowsAreSamples)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("convert"), "message should say how to convert: {msg}");
    }

    #[test]
    fn rejects_malformed_cells_and_ragged_rows() {
        let bad_cell = "sample_id,a,b\ns1,1,oops\n";
        assert!(read_otu_csv(bad_cell.as_bytes(), Orientation::RowsAreSamples).is_err());
        let ragged = "sample_id,a,b\ns1,1\ns2,2,3\n";
        assert!(read_otu_csv(ragged.as_bytes(), Orientation::RowsAreSamples).is_err());
    }

    #[test]
    fn rejects_duplicate_labels_and_single_taxon() {
        let dup = "sample_id,a,a\ns1,1,2\ns2,3,4\n";
        assert!(read_otu_csv(dup.as_bytes(), Orientation::RowsAreSamples).is_err());
        let narrow = "sample_id,a\ns1,1\ns2,2\n";
        assert!(read_otu_csv(narrow.as_bytes(), Orientation::RowsAreSamples).is_err());
    }

    #[test]
    fn validation_flags_constant_column() {
        let t = read_otu_csv(
            "sample_id,a,b\ns1,5,1\ns2,5,2\ns3,5,9\n".as_bytes(),
            Orientation::RowsAreSamples,
        )
        .unwrap();
        let report = validate_table(&t);
        assert_eq!(report.zero_variance_columns(), vec![0]);
    }

    #[test]
    fn validation_passes_clean_table() {
        let t = generate_synthetic(4, 12, 0.4, 1).unwrap().table;
        // Continuous Gaussian values: negatives are expected, so check
        // only the variance and constant-row warnings.
        let report = validate_table(&t);
        assert!(report.zero_variance_columns().is_empty());
        assert!(!report
            .warnings
            .iter()
            .any(|w| matches!(w, ValidationWarning::ConstantRow { .. })));
    }

    #[test]
    fn validation_flags_negative_counts() {
        let t = read_otu_csv(
            "sample_id,a,b\ns1,5,-1\ns2,6,2\n".as_bytes(),
            Orientation::RowsAreSamples,
        )
        .unwrap();
        let report = validate_table(&t);
        assert!(report
            .warnings
            .iter()
            .any(|w| matches!(w, ValidationWarning::NegativeValue { row: 0, col: 1, .. })));
    }

    #[test]
    fn full_subsample_is_a_permutation() {
        let t = generate_synthetic(3, 8, 0.5, 2).unwrap().table;
        let s = subsample(&t, 8, 44).unwrap();
        let mut orig: Vec<&String> = t.samples().iter().collect();
        let mut got: Vec<&String> = s.samples().iter().collect();
        orig.sort();
        got.sort();
        assert_eq!(orig, got);
        // Rows follow their labels.
        for (i, label) in s.samples().iter().enumerate() {
            let j = t.samples().iter().position(|l| l == label).unwrap();
            assert_eq!(s.counts().row(i), t.counts().row(j));
        }
    }

    #[test]
    fn subsample_is_deterministic_per_seed() {
        let t = generate_synthetic(5, 40, 0.3, 3).unwrap().table;
        let a = subsample(&t, 10, 1).unwrap();
        let b = subsample(&t, 10, 1).unwrap();
        assert_eq!(a, b);
        let c = subsample(&t, 10, 2).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn subsample_rejects_out_of_range() {
        let t = generate_synthetic(3, 5, 0.5, 4).unwrap().table;
        assert!(subsample(&t, 0, 1).is_err());
        assert!(subsample(&t, 6, 1).is_err());
    }

    #[test]
    fn two_taxa_high_density_has_the_edge() {
        let truth = generate_synthetic(2, 5, 0.95, 7).unwrap();
        assert!(truth.support.contains(&(0, 1)));
        assert!(truth.precision[[0, 1]] != 0.0);
    }

    #[test]
    fn precision_is_symmetric_and_spd() {
        let truth = generate_synthetic(8, 10, 0.25, 11).unwrap();
        assert_eq!(linalg::max_abs_asymmetry(&truth.precision), 0.0);
        assert!(linalg::is_spd(&truth.precision));
        // Support matches the nonzero pattern.
        for i in 0..8 {
            for j in i + 1..8 {
                assert_eq!(truth.support.contains(&(i, j)), truth.precision[[i, j]] != 0.0);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_synthetic(6, 30, 0.3, 13).unwrap();
        let b = generate_synthetic(6, 30, 0.3, 13).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.precision, b.precision);
    }

    #[test]
    fn counts_variant_is_nonnegative_integers() {
        let truth = generate_synthetic_counts(4, 25, 0.4, 17).unwrap();
        for &v in truth.table.counts() {
            assert!(v >= 0.0 && v.fract() == 0.0);
        }
    }

    #[test]
    fn sample_covariance_approaches_inverse_precision() {
        // Monte-Carlo check of the generator: with many draws the sample
        // covariance converges to the inverse of the true precision.
        let truth = generate_synthetic(4, 100_000, 0.5, 19).unwrap();
        let sigma = linalg::spd_inverse(&truth.precision).unwrap();
        let s = stats::covariance_population(truth.table.counts());
        for ((i, j), &v) in s.indexed_iter() {
            assert!(
                (v - sigma[[i, j]]).abs() < 0.05,
                "cov[{i},{j}] = {v} vs {}",
                sigma[[i, j]]
            );
        }
    }
}

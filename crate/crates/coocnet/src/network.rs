//! Signed association networks from fitted models: per-family
//! association matrices, median-over-folds combination, edge statistics,
//! and export as edge-list CSV or graph JSON.
//!
//! An edge exists where the (symmetric, hollow) association matrix is
//! nonzero beyond floating-point dust; its sign is the sign of the
//! weight.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::predictors::{CorrelationModel, Family, FittedModel, GgmModel, LassoModel};

/// Entries at or below this magnitude do not form edges.
pub const EDGE_EPS: f64 = 1e-12;

/// How the graphical family's precision matrix becomes association
/// weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GgmConvention {
    /// Off-diagonal precision entries verbatim. Note the sign of a raw
    /// precision entry is opposite to the conditional association it
    /// encodes.
    #[default]
    RawPrecision,
    /// `−θ_ij / sqrt(θ_ii · θ_jj)`, the partial correlation.
    PartialCorrelation,
}

/// D×D signed, symmetric, hollow weight matrix over named taxa.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMatrix {
    weights: Array2<f64>,
    taxa: Vec<String>,
    family: Family,
}

impl AssociationMatrix {
    pub fn new(weights: Array2<f64>, taxa: Vec<String>, family: Family) -> Result<AssociationMatrix> {
        if weights.nrows() != weights.ncols() || weights.nrows() != taxa.len() {
            return Err(Error::DimensionMismatch(format!(
                "association matrix: {}x{} weights for {} taxa",
                weights.nrows(),
                weights.ncols(),
                taxa.len()
            )));
        }
        if linalg::max_abs_asymmetry(&weights) > 1e-10 {
            return Err(Error::Numerical(
                "association matrix: weights are not symmetric".into(),
            ));
        }
        if (0..weights.nrows()).any(|i| weights[[i, i]] != 0.0) {
            return Err(Error::Numerical(
                "association matrix: diagonal must be zero".into(),
            ));
        }
        Ok(AssociationMatrix {
            weights,
            taxa,
            family,
        })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn taxa(&self) -> &[String] {
        &self.taxa
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n_taxa(&self) -> usize {
        self.taxa.len()
    }

    /// Edges are the above-dust upper-triangle entries.
    pub fn to_network(&self) -> Network {
        let mut edges = Vec::new();
        for i in 0..self.n_taxa() {
            for j in i + 1..self.n_taxa() {
                let w = self.weights[[i, j]];
                if w.abs() > EDGE_EPS {
                    edges.push(Edge { i, j, weight: w });
                }
            }
        }
        Network {
            taxa: self.taxa.clone(),
            family: self.family,
            edges,
        }
    }
}

/// One undirected signed edge, `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl Edge {
    pub fn sign(&self) -> i32 {
        if self.weight > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// A co-occurrence network: taxa plus signed weighted edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub taxa: Vec<String>,
    pub family: Family,
    pub edges: Vec<Edge>,
}

/// Thresholded correlation network: keep correlations whose magnitude
/// reaches the trained threshold.
pub fn assoc_from_correlation(
    model: &CorrelationModel,
    taxa: &[String],
    threshold: f64,
) -> Result<AssociationMatrix> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidInput(
            "assoc_from_correlation: threshold must be >= 0".into(),
        ));
    }
    let d = model.n_taxa();
    let corr = model.corr();
    let mut weights = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            if i != j && corr[[i, j]].abs() >= threshold {
                weights[[i, j]] = corr[[i, j]];
            }
        }
    }
    AssociationMatrix::new(weights, taxa.to_vec(), model.kind.family())
}

/// Per-target regression coefficients folded into one symmetric matrix:
/// the mean of the coefficient of k in target j's model and the
/// coefficient of j in target k's model.
pub fn assoc_from_lasso(model: &LassoModel, taxa: &[String]) -> Result<AssociationMatrix> {
    let d = model.n_taxa();
    if taxa.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "assoc_from_lasso: {} taxa for a {d}-target model",
            taxa.len()
        )));
    }
    // Raw matrix: row j holds target j's coefficients over the others.
    let mut raw = Array2::<f64>::zeros((d, d));
    for (j, fit) in model.targets.iter().enumerate() {
        if fit.weights.len() != d - 1 {
            return Err(Error::DimensionMismatch(format!(
                "assoc_from_lasso: target {j} has {} coefficients, expected {}",
                fit.weights.len(),
                d - 1
            )));
        }
        let mut w = 0;
        for k in 0..d {
            if k != j {
                raw[[j, k]] = fit.weights[w];
                w += 1;
            }
        }
    }
    let mut weights = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            if i != j {
                weights[[i, j]] = 0.5 * (raw[[i, j]] + raw[[j, i]]);
            }
        }
    }
    AssociationMatrix::new(weights, taxa.to_vec(), Family::Lasso)
}

/// Precision matrix as association weights, raw or as partial
/// correlations.
pub fn assoc_from_ggm(
    model: &GgmModel,
    taxa: &[String],
    convention: GgmConvention,
) -> Result<AssociationMatrix> {
    let d = model.n_taxa();
    if taxa.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "assoc_from_ggm: {} taxa for a {d}-column precision matrix",
            taxa.len()
        )));
    }
    let theta = &model.precision;
    if (0..d).any(|j| theta[[j, j]] <= 0.0) {
        return Err(Error::Numerical(
            "assoc_from_ggm: precision diagonal must be strictly positive".into(),
        ));
    }
    let mut weights = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            if i != j {
                weights[[i, j]] = match convention {
                    GgmConvention::RawPrecision => theta[[i, j]],
                    GgmConvention::PartialCorrelation => {
                        -theta[[i, j]] / (theta[[i, i]] * theta[[j, j]]).sqrt()
                    }
                };
            }
        }
    }
    AssociationMatrix::new(weights, taxa.to_vec(), Family::Ggm)
}

/// Association matrix for any fitted model; the featureless baseline has
/// no network and yields `None`.
pub fn association_of(
    model: &FittedModel,
    taxa: &[String],
    convention: GgmConvention,
) -> Result<Option<AssociationMatrix>> {
    match model {
        FittedModel::Featureless(_) => Ok(None),
        FittedModel::Correlation(m) => {
            Ok(Some(assoc_from_correlation(m, taxa, m.threshold)?))
        }
        FittedModel::Lasso(m) => Ok(Some(assoc_from_lasso(m, taxa)?)),
        FittedModel::Ggm(m) => Ok(Some(assoc_from_ggm(m, taxa, convention)?)),
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Elementwise median of per-fold association matrices; an entry that is
/// nonzero in fewer than half the folds cannot survive.
pub fn median_matrix(mats: &[AssociationMatrix]) -> Result<AssociationMatrix> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidInput("median_network: no matrices".into()))?;
    for m in mats {
        if m.taxa != first.taxa {
            return Err(Error::InvalidInput(
                "median_network: taxa differ between folds".into(),
            ));
        }
        if m.family != first.family {
            return Err(Error::InvalidInput(
                "median_network: families differ between folds".into(),
            ));
        }
    }
    let d = first.n_taxa();
    let mut weights = Array2::<f64>::zeros((d, d));
    let mut buf = vec![0.0; mats.len()];
    for i in 0..d {
        for j in i + 1..d {
            for (b, m) in buf.iter_mut().zip(mats.iter()) {
                *b = m.weights[[i, j]];
            }
            let v = median(&mut buf);
            weights[[i, j]] = v;
            weights[[j, i]] = v;
        }
    }
    AssociationMatrix::new(weights, first.taxa.clone(), first.family)
}

/// The final reported network: the elementwise median of the per-fold
/// matrices, thresholded into edges.
pub fn median_network(mats: &[AssociationMatrix]) -> Result<Network> {
    Ok(median_matrix(mats)?.to_network())
}

/// Edge counts split by sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EdgeStats {
    pub total: usize,
    pub positive: usize,
    pub negative: usize,
}

pub fn edge_stats(net: &Network) -> EdgeStats {
    let positive = net.edges.iter().filter(|e| e.sign() > 0).count();
    EdgeStats {
        total: net.edges.len(),
        positive,
        negative: net.edges.len() - positive,
    }
}

/// One row of the edge-list CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source_taxon: String,
    pub target_taxon: String,
    pub weight: f64,
    pub sign: i32,
}

fn edge_records(net: &Network) -> Vec<EdgeRecord> {
    let mut records: Vec<EdgeRecord> = net
        .edges
        .iter()
        .map(|e| EdgeRecord {
            source_taxon: net.taxa[e.i].clone(),
            target_taxon: net.taxa[e.j].clone(),
            weight: e.weight,
            sign: e.sign(),
        })
        .collect();
    records.sort_by(|a, b| {
        (a.source_taxon.as_str(), a.target_taxon.as_str())
            .cmp(&(b.source_taxon.as_str(), b.target_taxon.as_str()))
    });
    records
}

/// Writes `source_taxon,target_taxon,weight,sign` rows, lexicographic by
/// taxon pair. An empty network writes the header only.
pub fn write_edge_list_csv<W: Write>(net: &Network, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for record in edge_records(net) {
        wtr.serialize(record)?;
    }
    // Header-only output still needs the header row.
    if net.edges.is_empty() {
        wtr.write_record(["source_taxon", "target_taxon", "weight", "sign"])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn export_edge_list_csv(net: &Network, path: &Path) -> Result<()> {
    write_edge_list_csv(net, std::fs::File::create(path)?)
}

/// Reads an edge-list CSV back into records (the export round trip).
pub fn read_edge_list_csv<R: Read>(reader: R) -> Result<Vec<EdgeRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in rdr.deserialize() {
        out.push(record?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct GraphNode<'a> {
    id: &'a str,
}

#[derive(Serialize)]
struct GraphLink<'a> {
    source: &'a str,
    target: &'a str,
    weight: f64,
    sign: i32,
}

#[derive(Serialize)]
struct GraphJson<'a> {
    family: &'a str,
    nodes: Vec<GraphNode<'a>>,
    links: Vec<GraphLink<'a>>,
}

/// Writes a nodes/links JSON document with the same stable edge order as
/// the CSV export.
pub fn write_graph_json<W: Write>(net: &Network, writer: W) -> Result<()> {
    let records = edge_records(net);
    let doc = GraphJson {
        family: net.family.as_str(),
        nodes: net.taxa.iter().map(|t| GraphNode { id: t }).collect(),
        links: records
            .iter()
            .map(|r| GraphLink {
                source: &r.source_taxon,
                target: &r.target_taxon,
                weight: r.weight,
                sign: r.sign,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(writer, &doc)
        .map_err(|e| Error::Parse(format!("graph json: {e}")))?;
    Ok(())
}

pub fn export_graph_json(net: &Network, path: &Path) -> Result<()> {
    write_graph_json(net, std::fs::File::create(path)?)
}

//! Cross-validated training and testing of co-occurrence network
//! inference algorithms for abundance tables.
//!
//! The crate takes an N×D table of taxon abundances and answers two
//! questions: *which hyper-parameters should each inference algorithm
//! use* (correlation thresholds, L1 penalties), and *how well does each
//! algorithm predict held-out data*. Four algorithm families are
//! implemented behind one predictor interface — pairwise correlation
//! (Pearson and Spearman), per-taxon L1-penalized regression, and a
//! Gaussian graphical model backed by a sparse precision-matrix solver —
//! plus a featureless baseline. A seeded K-fold harness fits every model
//! on training folds, trains hyper-parameters on an inner
//! subtrain/validation split, scores test-fold predictions per taxon,
//! and turns the fitted models into signed association networks.
//!
//! Modules:
//!
//! - [`otu`] — table loading, validation, subsampling, synthetic data
//! - [`transform`] — Yeo-Johnson power transform and standard scaling
//! - [`solvers`] — coordinate-descent lasso, graphical lasso, scalar search
//! - [`predictors`] — the five predictor families and their training
//! - [`cv`] — fold plans, the evaluation loop, record aggregation
//! - [`network`] — association matrices, median networks, export
//! - [`config`] / [`cli`] — the `coocnet` binary's configuration and commands
//!
//! The `examples/` directory has one runnable walk-through per major
//! capability; start with `cross_validation.rs`.

pub mod cli;
pub mod config;
pub mod cv;
pub mod error;
pub mod linalg;
pub mod network;
pub mod otu;
pub mod predictors;
pub mod seeding;
pub mod solvers;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
pub use otu::{OtuTable, Orientation, SyntheticTruth};
pub use predictors::{Family, FittedModel, PredictorSpec, Selection};
pub use transform::{FittedTransform, TransformMode};

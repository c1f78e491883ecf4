//! Declarative run configuration: one TOML file plus CLI flag overrides
//! drives every command. Reruns of the same config and inputs are
//! byte-identical, so the seed is mandatory — there is no wall-clock
//! fallback.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::GgmConvention;
use crate::otu::Orientation;
use crate::predictors::{Family, PredictorSpec};
use crate::transform::TransformMode;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub orientation: Orientation,
    /// Identifier used in output records; defaults to the file stem.
    #[serde(default)]
    pub id: Option<String>,
}

impl DatasetConfig {
    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_string())
        })
    }
}

fn default_replicates() -> u32 {
    3
}

/// Settings for the sample-size experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    /// Subsample sizes; `None` means 10, 20, 30, ... capped at N.
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
    /// Subsample replicates per size.
    #[serde(default = "default_replicates")]
    pub replicates: u32,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            sizes: None,
            replicates: default_replicates(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default)]
    pub ggm_convention: GgmConvention,
}

fn default_sim_taxa() -> usize {
    10
}

fn default_sim_samples() -> usize {
    200
}

fn default_sim_density() -> f64 {
    0.2
}

/// Settings for synthetic data generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_sim_taxa")]
    pub taxa: usize,
    #[serde(default = "default_sim_samples")]
    pub samples: usize,
    #[serde(default = "default_sim_density")]
    pub edge_density: f64,
    /// Map Gaussian values to round(exp(v)) so the table mimics counts.
    #[serde(default)]
    pub counts: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            taxa: default_sim_taxa(),
            samples: default_sim_samples(),
            edge_density: default_sim_density(),
            counts: false,
        }
    }
}

fn default_k() -> u32 {
    3
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Everything one reproducible run needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. Mandatory at run time (set here or via `--seed`).
    #[serde(default)]
    pub seed: Option<u64>,
    /// Outer fold count.
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default)]
    pub transform: TransformMode,
    /// Worker threads; 0 uses the available parallelism.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    /// Algorithm families to run; empty means all five.
    #[serde(default, rename = "algorithm")]
    pub algorithms: Vec<PredictorSpec>,
    #[serde(default)]
    pub curve: CurveConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            k: default_k(),
            transform: TransformMode::default(),
            workers: 0,
            out_dir: default_out_dir(),
            dataset: None,
            algorithms: Vec::new(),
            curve: CurveConfig::default(),
            network: NetworkConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Parse(format!("config '{}': {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidInput("config: k must be at least 2".into()));
        }
        for spec in &self.algorithms {
            spec.validate()?;
        }
        if let Some(sizes) = &self.curve.sizes {
            if sizes.is_empty() {
                return Err(Error::InvalidInput("config: curve.sizes is empty".into()));
            }
        }
        if self.curve.replicates == 0 {
            return Err(Error::InvalidInput(
                "config: curve.replicates must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidInput(
                "config: no seed given; set `seed` in the config file or pass --seed".into(),
            )
        })
    }

    pub fn require_dataset(&self) -> Result<&DatasetConfig> {
        self.dataset.as_ref().ok_or_else(|| {
            Error::InvalidInput(
                "config: no dataset given; set [dataset] in the config file or pass --input".into(),
            )
        })
    }

    /// The configured algorithm list, or all five families.
    pub fn algorithm_specs(&self) -> Vec<PredictorSpec> {
        if self.algorithms.is_empty() {
            Family::all().iter().map(|&f| PredictorSpec::new(f)).collect()
        } else {
            self.algorithms.clone()
        }
    }

    /// Sample-size grid for the curve experiment: the configured sizes,
    /// or multiples of 10 capped at `n`.
    pub fn curve_sizes(&self, n: usize) -> Vec<usize> {
        match &self.curve.sizes {
            Some(sizes) => sizes.clone(),
            None => {
                let sizes: Vec<usize> = (1..).map(|i| i * 10).take_while(|&s| s <= n).collect();
                if sizes.is_empty() {
                    vec![n]
                } else {
                    sizes
                }
            }
        }
    }
}

/// Annotated default configuration, printed by `--print-config`.
pub const DEFAULT_CONFIG_TOML: &str = r#"# coocnet run configuration. Flags override file values:
# --seed, --out-dir, --workers, --orientation, --input, --dataset-id.

# Master seed; mandatory (no wall-clock default).
seed = 0
# Outer cross-validation folds.
k = 3
# Preprocessing: "yj-then-scale" or "scale-only".
transform = "yj-then-scale"
# Worker threads; 0 = available parallelism.
workers = 0
out_dir = "out"

[dataset]
path = "table.csv"
# "rows-are-samples" (default) or "rows-are-taxa".
orientation = "rows-are-samples"
# id = "my-dataset"      # defaults to the file stem

# Omit all [[algorithm]] sections to run every family:
# featureless, pearson, spearman, lasso, ggm.
[[algorithm]]
family = "pearson"
# grid = [0.0, 0.1, 0.2]       # threshold grid; default: 50 steps in [0, 1)
# inner_fraction = 0.75        # subtrain share of the inner split

[[algorithm]]
family = "spearman"

[[algorithm]]
family = "lasso"
# lambda_mode = "per-target"   # or "global" (one penalty for all targets)
# grid = [0.5, 0.1, 0.02]      # descending penalties; default: 100 log steps

[[algorithm]]
family = "ggm"
# selection = "validation-loglik"  # or "validation-mse"

[[algorithm]]
family = "featureless"

[curve]
# sizes = [10, 20, 30]   # default: 10, 20, ... capped at N
replicates = 3

[network]
# "raw-precision" (default) or "partial-correlation"
ggm_convention = "raw-precision"

[simulate]
taxa = 10
samples = 200
edge_density = 0.2
counts = false
"#;

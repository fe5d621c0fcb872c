//! Run configuration files (TOML). Unknown keys are rejected and every
//! relative path is resolved against the file's directory before anything
//! runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::csv::{load_csv, CsvSchema};
use super::idx::load_idx;
use super::synthetic::{generate_synthetic, SyntheticKind};
use crate::data::FullyLabeledDataset;
use crate::error::{Error, Result};
use crate::eval::Regime;
use crate::model::{Activation, HeadKind, ModelSpec};
use crate::pairing::{PairingConfig, PairingMode};
use crate::trainer::TrainConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Synthetic {
        kind: SyntheticKind,
        n_per_class: usize,
        #[serde(default)]
        test_per_class: Option<usize>,
        noise: f64,
        /// Seed of the training draw; the test draw uses `seed + 1`.
        seed: u64,
    },
    Csv {
        train: PathBuf,
        test: Option<PathBuf>,
        #[serde(default)]
        schema: CsvSchema,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: Option<PathBuf>,
        test_labels: Option<PathBuf>,
        /// Keep only the first `limit` training examples.
        #[serde(default)]
        limit: Option<usize>,
    },
}

impl DataSource {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DataSource::Synthetic { .. } => {}
            DataSource::Csv { train, test, .. } => {
                fix(train);
                if let Some(t) = test {
                    fix(t);
                }
            }
            DataSource::Idx { train_images, train_labels, test_images, test_labels, .. } => {
                fix(train_images);
                fix(train_labels);
                for p in [test_images, test_labels].into_iter().flatten() {
                    fix(p);
                }
            }
        }
    }

    /// Training set and, when configured, test set.
    pub fn load(&self) -> Result<(FullyLabeledDataset, Option<FullyLabeledDataset>)> {
        match self {
            DataSource::Synthetic { kind, n_per_class, test_per_class, noise, seed } => {
                let train = generate_synthetic(*kind, *n_per_class, *noise, *seed)?;
                let test =
                    generate_synthetic(*kind, test_per_class.unwrap_or(*n_per_class), *noise, seed.wrapping_add(1))?;
                Ok((train, Some(test)))
            }
            DataSource::Csv { train, test, schema } => {
                let tr = load_csv(train, schema)?;
                let schema = CsvSchema { class_count: Some(tr.class_count()), ..schema.clone() };
                let te = test.as_ref().map(|t| load_csv(t, &schema)).transpose()?;
                Ok((tr, te))
            }
            DataSource::Idx { train_images, train_labels, test_images, test_labels, limit } => {
                let mut tr = load_idx(train_images, train_labels)?;
                if let Some(n) = limit {
                    let keep: Vec<usize> = (0..tr.len().min(*n)).collect();
                    tr = tr.subset(&keep);
                }
                let te = match (test_images, test_labels) {
                    (Some(i), Some(l)) => Some(load_idx(i, l)?),
                    (None, None) => None,
                    _ => return Err(Error::InvalidConfig("test_images and test_labels go together".into())),
                };
                Ok((tr, te))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub hidden: Vec<usize>,
    pub feature_dim: usize,
    #[serde(default = "identity")]
    pub feature_activation: Activation,
    #[serde(default = "unit")]
    pub radius: f64,
    pub head: HeadKind,
}

fn identity() -> Activation {
    Activation::Identity
}

fn unit() -> f64 {
    1.0
}

impl ModelSection {
    pub fn spec(&self, input_dim: usize) -> ModelSpec {
        ModelSpec {
            input_dim,
            hidden: self.hidden.clone(),
            feature_dim: self.feature_dim,
            feature_activation: self.feature_activation,
            radius: self.radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingSection {
    pub mode: PairingMode,
    #[serde(default)]
    pub n_pairs: usize,
    #[serde(default)]
    pub class_batch: Option<usize>,
    /// Defaults to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl PairingSection {
    pub fn to_config(&self, run_seed: u64) -> PairingConfig {
        PairingConfig {
            mode: self.mode,
            n_pairs: self.n_pairs,
            class_batch: self.class_batch,
            seed: self.seed.unwrap_or(run_seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsSection {
    /// Fully-labeled examples per class for Step 2.
    pub per_class: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n1: Vec<usize>,
    pub n2: Vec<usize>,
    pub reps: usize,
    #[serde(default)]
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub regimes: Vec<Regime>,
    #[serde(default = "five")]
    pub trials: usize,
    #[serde(default)]
    pub baseline_train: Option<TrainConfig>,
}

fn five() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub data: DataSource,
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainConfig,
    pub pairing: Option<PairingSection>,
    pub labels: Option<LabelsSection>,
    pub sweep: Option<SweepSection>,
    pub protocol: Option<ProtocolSection>,
    /// Output directory for checkpoints, manifests and results.
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::VersionMismatch { expected: CONFIG_VERSION, found: cfg.version });
        }
        cfg.train.validate()?;
        cfg.data.resolve(base);
        if let Some(out) = &mut cfg.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The training configuration with the run seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }
}

//! Model checkpoints: a JSON document holding every parameter. Floats are
//! written in shortest round-trip form, so load ∘ save is exact and equal
//! models produce identical bytes.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, DenseLayer, FeatureMap, HiddenNetwork, LinearHead, TwoPartClassifier};
use crate::trainer::TrainConfig;

pub const FORMAT: &str = "suflab-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerState {
    pub activation: Activation,
    /// `out` rows of `in` weights.
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HeadState {
    Binary { w: Vec<f64> },
    Multiclass { w: Vec<Vec<f64>>, b: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub class_count: usize,
    pub radius: f64,
    pub layers: Vec<LayerState>,
    pub head: HeadState,
    #[serde(default)]
    pub train: Option<TrainConfig>,
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidConfig("ragged weight matrix in checkpoint".into()));
    }
    Ok(Array2::from_shape_vec((n, d), rows.concat()).expect("shape checked"))
}

impl Checkpoint {
    pub fn from_model(m: &TwoPartClassifier, train: Option<&TrainConfig>) -> Self {
        let layers = m
            .hidden
            .layers()
            .iter()
            .map(|l| LayerState { activation: l.activation, weight: rows(&l.weight), bias: l.bias.to_vec() })
            .collect();
        let head = match &m.head {
            LinearHead::Binary { w } => HeadState::Binary { w: w.to_vec() },
            LinearHead::Multiclass { w, b } => HeadState::Multiclass { w: rows(w), b: b.to_vec() },
        };
        Self {
            format: FORMAT.into(),
            version: VERSION,
            class_count: m.class_count(),
            radius: m.radius(),
            layers,
            head,
            train: train.cloned(),
        }
    }

    pub fn to_model(&self) -> Result<TwoPartClassifier> {
        if self.format != FORMAT {
            return Err(Error::InvalidConfig(format!("not a checkpoint: format '{}'", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::VersionMismatch { expected: VERSION, found: self.version });
        }
        let layers = self
            .layers
            .iter()
            .map(|l| DenseLayer::new(matrix(&l.weight)?, Array1::from(l.bias.clone()), l.activation))
            .collect::<Result<Vec<_>>>()?;
        let head = match &self.head {
            HeadState::Binary { w } => LinearHead::Binary { w: Array1::from(w.clone()) },
            HeadState::Multiclass { w, b } => LinearHead::Multiclass { w: matrix(w)?, b: Array1::from(b.clone()) },
        };
        TwoPartClassifier::new(HiddenNetwork::new(layers)?, FeatureMap::new(self.radius)?, head, self.class_count)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("checkpoint serializes");
        v.push(b'\n');
        v
    }
}

pub fn save_checkpoint(m: &TwoPartClassifier, train: Option<&TrainConfig>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, Checkpoint::from_model(m, train).to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(TwoPartClassifier, Option<TrainConfig>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint =
        serde_json::from_slice(&bytes).map_err(|e| Error::Malformed { path: path.into(), message: e.to_string() })?;
    Ok((ck.to_model()?, ck.train))
}

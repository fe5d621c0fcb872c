//! Run manifests: what was run, what it produced, and checksums of the
//! produced files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::trainer::EpochRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// The configuration as read, verbatim.
    pub config: String,
    pub trace: Vec<EpochRecord>,
    pub metrics: BTreeMap<String, f64>,
    /// Output file name → SHA-256 (hex).
    pub outputs: BTreeMap<String, String>,
    pub wall_seconds: f64,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: &str) -> Self {
        Self {
            tool: "suflab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config: config.into(),
            trace: Vec::new(),
            metrics: BTreeMap::new(),
            outputs: BTreeMap::new(),
            wall_seconds: 0.0,
        }
    }

    /// Records the checksum of an output file under its file name.
    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.outputs.insert(name, sha256_file(path)?);
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        fs::write(path, v).map_err(|e| Error::io(path, e))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

use std::path::PathBuf;

use crate::data::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("insufficient examples: need at least {needed}, got {got}")]
    InsufficientExamples { needed: usize, got: usize },

    #[error("insufficient examples for disjoint pairing: N = {examples} must exceed 2n = {}", 2 * pairs)]
    InsufficientForDisjoint { examples: usize, pairs: usize },

    #[error("requested {requested} pairs but only {available} distinct pairs exist")]
    TooManyPairs { requested: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("degenerate activation: representation norm {0:e} is below the detection threshold")]
    DegenerateActivation(f64),

    #[error("degenerate kernel batch: kernel or target vector has zero norm")]
    DegenerateKernelBatch,

    #[error("contrastive loss undefined: batch contains no same-class pair")]
    ContrastiveUndefined,

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("class count mismatch: model has {model} classes, data has {data}")]
    ClassCountMismatch { model: usize, data: usize },

    #[error("invalid dataset: {}", format_violations(.0))]
    InvalidDataset(Vec<Violation>),

    #[error("unresolvable example id {0} in pair dataset")]
    UnknownId(u64),

    #[error("invalid pair dataset: {0}")]
    InvalidPairs(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trivial risk: gamma = {0} must be negative")]
    TrivialRisk(f64),

    #[error("risk below model capacity: gamma = {gamma} needs head norm {required} > 1/r = {limit}")]
    RiskBelowCapacity { gamma: f64, required: f64, limit: f64 },

    #[error("magic mismatch in {path}: expected {expected:#010x}, found {found:#010x}")]
    MagicMismatch { path: PathBuf, expected: u32, found: u32 },

    #[error("count mismatch: {images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("truncated file {path}: expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, expected: u64, found: u64 },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("unsupported format version {found} (this build reads version {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("checksum failure in {0}")]
    ChecksumFailure(PathBuf),

    #[error("malformed file {path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by the caller's invocation rather than by data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

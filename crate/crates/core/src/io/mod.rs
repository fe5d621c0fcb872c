//! Reading, writing and generating datasets and run artifacts.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod idx;
pub mod manifest;
pub mod pairfile;
pub mod synthetic;

pub use self::csv::{load_csv, load_sweep_csv, save_csv, save_sweep_csv, CsvSchema};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{DataSource, RunConfig};
pub use idx::{load_idx, save_idx};
pub use manifest::Manifest;
pub use pairfile::{load_pairs, save_pairs};
pub use synthetic::{generate_blobs, generate_synthetic, SyntheticKind};

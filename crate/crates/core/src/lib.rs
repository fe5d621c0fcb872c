//! Learning classifiers from pairwise same-class / different-class labels.
//!
//! The crate covers pair-dataset construction, a two-part model (hidden
//! network, normalized feature map, linear head), pair and head losses, a
//! two-stage trainer, a finite-problem theory oracle, the pair-encoding
//! privacy analysis, and evaluation sweeps.
//!
//! ```
//! use suflab::eval::stratified_subset;
//! use suflab::io::{generate_synthetic, SyntheticKind};
//! use suflab::{accuracy, pair_sampled, rng, train_two_stage, HeadKind, ModelSpec, PairingConfig, TrainConfig};
//!
//! let pool = generate_synthetic(SyntheticKind::Blobs, 500, 0.6, 0)?;
//! let test = generate_synthetic(SyntheticKind::Blobs, 500, 0.6, 1)?;
//! let pairs = pair_sampled(&pool, &PairingConfig::sampled(5000, 0))?;
//! let labels = stratified_subset(&pool, 2, &mut rng::stream(0, rng::LABELS, 0))?;
//! let mut model = ModelSpec::mlp(2, vec![16, 16], 8).build(2, HeadKind::Binary, 0)?;
//! train_two_stage(&mut model, &labels, &pairs, Some(&pool), &TrainConfig::default())?;
//! assert!(accuracy(&model, &test)? > 0.95);
//! # Ok::<(), suflab::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod io;
pub mod losses;
pub mod model;
pub mod pairing;
pub mod privacy;
pub mod rng;
pub mod theory;
pub mod trainer;

pub use data::{
    class_histogram, sufficient_label, validate_dataset, Example, ExampleId, FeatureVector, FullyLabeledDataset,
    InlinePair, PairDataset, PairView, SufficientLabel, SufficientPair, Violation,
};
pub use error::{Error, Result};
pub use eval::{accuracy, compare_regimes, run_sweep, ProtocolSpec, Regime, SweepResult, SweepSpec};
pub use losses::{HeadLoss, PairLoss};
pub use model::{FeatureMap, HeadKind, LinearHead, ModelSpec, NormMode, TwoPartClassifier};
pub use pairing::{make_pairs, pair_disjoint, pair_exhaustive, pair_sampled, PairingConfig, PairingMode};
pub use privacy::{encrypt_disjoint, recover_clusters, strength_report, EncryptionReport};
pub use theory::{generalization_bound, FiniteProblem};
pub use trainer::{
    train_baseline_full, train_online, train_step1, train_step2, train_two_stage, PairSource, TrainConfig, TrainRun,
    Trainer,
};

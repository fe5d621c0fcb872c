//! Accuracy, sample-complexity sweeps and the regime comparison protocol.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FullyLabeledDataset;
use crate::error::{Error, Result};
use crate::model::{HeadKind, ModelSpec, TwoPartClassifier};
use crate::pairing::{pair_sampled, PairingConfig};
use crate::rng;
use crate::trainer::{train_baseline_full, train_online, train_two_stage, TrainConfig};

/// Fraction of examples whose predicted class matches the label.
pub fn accuracy(m: &TwoPartClassifier, ds: &FullyLabeledDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if ds.class_count() != m.class_count() {
        return Err(Error::ClassCountMismatch { model: m.class_count(), data: ds.class_count() });
    }
    let pred = m.predict_batch(ds.feature_matrix().view())?;
    let hits = pred.iter().zip(ds.examples()).filter(|(p, e)| **p == e.y).count();
    Ok(hits as f64 / ds.len() as f64)
}

/// Mean and sample standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Picks `n` examples spread as evenly as possible over the classes
/// (lower class indices get the remainder), uniformly within each class.
pub fn stratified_subset(ds: &FullyLabeledDataset, n: usize, g: &mut rng::Rng) -> Result<FullyLabeledDataset> {
    let c = ds.class_count();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by_key(|&i| ds.examples()[i].id);
    for i in order {
        by_class[ds.examples()[i].y].push(i);
    }
    let mut chosen = Vec::with_capacity(n);
    for (k, members) in by_class.iter_mut().enumerate() {
        let want = n / c + usize::from(k < n % c);
        if want > members.len() {
            return Err(Error::InsufficientExamples { needed: want, got: members.len() });
        }
        members.shuffle(g);
        chosen.extend_from_slice(&members[..want]);
    }
    chosen.sort_unstable();
    Ok(ds.subset(&chosen))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Pair counts for Step 1.
    pub n1: Vec<usize>,
    /// Fully-labeled counts for Step 2.
    pub n2: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub model: ModelSpec,
    pub head: HeadKind,
    pub train: TrainConfig,
    /// Record wall-clock time per run. Off by default so output files are
    /// reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub class_batch: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n1: usize,
    pub n2: usize,
    pub rep: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n1: usize,
    pub n2: usize,
    pub mean: f64,
    pub std: f64,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Per-cell statistics, recomputed from the stored rows.
    pub fn cells(&self) -> Vec<CellStats> {
        let mut keys: Vec<(usize, usize)> = Vec::new();
        for r in &self.rows {
            if !keys.contains(&(r.n1, r.n2)) {
                keys.push((r.n1, r.n2));
            }
        }
        keys.into_iter()
            .map(|(n1, n2)| {
                let acc: Vec<f64> = self.rows.iter().filter(|r| r.n1 == n1 && r.n2 == n2).map(|r| r.accuracy).collect();
                let (mean, std) = mean_std(&acc);
                CellStats { n1, n2, mean, std, reps: acc.len() }
            })
            .collect()
    }

    pub fn cell(&self, n1: usize, n2: usize) -> Option<CellStats> {
        self.cells().into_iter().find(|c| c.n1 == n1 && c.n2 == n2)
    }
}

/// Seeds of one sweep run. Label subsets depend only on `(n2, rep)` and pair
/// sets only on `(n1, rep)`, so cells sharing a coordinate share that sample.
pub fn sweep_seeds(base: u64, n1: usize, n2: usize, rep: usize) -> (u64, u64, u64) {
    let rep = rep as u64;
    let pairs = rng::derive(base, "sweep-pairs", ((n1 as u64) << 20) ^ rep);
    let labels = rng::derive(base, "sweep-labels", ((n2 as u64) << 20) ^ rep);
    let train = rng::derive(base, rng::SWEEP, rep);
    (pairs, labels, train)
}

/// One two-stage run: `n1` sampled pairs from `pool`, `n2` stratified labels.
pub fn sweep_run(
    spec: &SweepSpec,
    pool: &FullyLabeledDataset,
    test: &FullyLabeledDataset,
    n1: usize,
    n2: usize,
    rep: usize,
) -> Result<SweepRow> {
    let start = Instant::now();
    let (pair_seed, label_seed, train_seed) = sweep_seeds(spec.seed, n1, n2, rep);
    let mut pcfg = PairingConfig::sampled(n1, pair_seed);
    pcfg.class_batch = spec.class_batch;
    let pairs = pair_sampled(pool, &pcfg)?;
    let small = stratified_subset(pool, n2, &mut rng::stream(label_seed, rng::LABELS, 0))?;
    let cfg = TrainConfig { seed: train_seed, ..spec.train.clone() };
    let mut m = spec.model.build(pool.class_count(), spec.head, train_seed)?;
    train_two_stage(&mut m, &small, &pairs, Some(pool), &cfg)?;
    let accuracy = accuracy(&m, test)?;
    let wall_seconds = if spec.timing { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok(SweepRow { n1, n2, rep, seed: train_seed, accuracy, wall_seconds })
}

/// Every `(n1, n2, rep)` run of the grid, executed in parallel; rows come
/// back in grid order regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec, pool: &FullyLabeledDataset, test: &FullyLabeledDataset) -> Result<SweepResult> {
    if spec.n1.is_empty() || spec.n2.is_empty() || spec.reps == 0 {
        return Err(Error::InvalidConfig("sweep grid must be nonempty with reps ≥ 1".into()));
    }
    spec.train.validate()?;
    let mut tasks = Vec::new();
    for &n1 in &spec.n1 {
        for &n2 in &spec.n2 {
            for rep in 0..spec.reps {
                tasks.push((n1, n2, rep));
            }
        }
    }
    let rows =
        tasks.par_iter().map(|&(n1, n2, rep)| sweep_run(spec, pool, test, n1, n2, rep)).collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "pairs")]
pub enum Regime {
    /// Joint training on every labeled example.
    Full,
    /// Step 1 on this many sampled pairs.
    Pairs(usize),
    /// Step 1 on all within-batch pairs.
    Online,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Full => write!(f, "full"),
            Regime::Pairs(k) => write!(f, "pairs-{k}"),
            Regime::Online => write!(f, "online"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub regimes: Vec<Regime>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Full labels per class given to the two-stage regimes.
    #[serde(default = "default_labels_per_class")]
    pub labels_per_class: usize,
    pub seed: u64,
    pub model: ModelSpec,
    pub head: HeadKind,
    pub train: TrainConfig,
    /// Overrides for the full-label regime, when it should differ.
    #[serde(default)]
    pub baseline_train: Option<TrainConfig>,
}

fn default_trials() -> usize {
    5
}

fn default_labels_per_class() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub regime: Regime,
    pub full_labels: usize,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub rows: Vec<RegimeRow>,
}

impl ProtocolReport {
    pub fn row(&self, regime: Regime) -> Option<&RegimeRow> {
        self.rows.iter().find(|r| r.regime == regime)
    }
}

/// Accuracy of one regime in one trial. Trials share seeds across regimes.
pub fn protocol_trial(
    spec: &ProtocolSpec,
    pool: &FullyLabeledDataset,
    test: &FullyLabeledDataset,
    regime: Regime,
    trial: usize,
) -> Result<f64> {
    let seed = rng::derive(spec.seed, rng::TRIAL, trial as u64);
    let mut m = spec.model.build(pool.class_count(), spec.head, seed)?;
    let cfg = TrainConfig { seed, ..spec.train.clone() };
    let small =
        || stratified_subset(pool, spec.labels_per_class * pool.class_count(), &mut rng::stream(seed, rng::LABELS, 0));
    match regime {
        Regime::Full => {
            let base = spec.baseline_train.clone().unwrap_or_else(|| spec.train.clone());
            train_baseline_full(&mut m, pool, &TrainConfig { seed, ..base })?;
        }
        Regime::Pairs(k) => {
            let pairs = pair_sampled(pool, &PairingConfig::sampled(k, rng::derive(seed, rng::PAIRING, 0)))?;
            train_two_stage(&mut m, &small()?, &pairs, Some(pool), &cfg)?;
        }
        Regime::Online => {
            train_online(&mut m, pool, &small()?, &TrainConfig { online: true, ..cfg })?;
        }
    }
    accuracy(&m, test)
}

/// Runs every regime for every trial on the same test set.
pub fn compare_regimes(
    spec: &ProtocolSpec,
    pool: &FullyLabeledDataset,
    test: &FullyLabeledDataset,
) -> Result<ProtocolReport> {
    if spec.trials == 0 || spec.regimes.is_empty() {
        return Err(Error::InvalidConfig("protocol needs at least one regime and one trial".into()));
    }
    let tasks: Vec<(Regime, usize)> =
        spec.regimes.iter().flat_map(|&r| (0..spec.trials).map(move |t| (r, t))).collect();
    let acc = tasks.par_iter().map(|&(r, t)| protocol_trial(spec, pool, test, r, t)).collect::<Result<Vec<_>>>()?;
    let rows = spec
        .regimes
        .iter()
        .enumerate()
        .map(|(k, &regime)| {
            let accuracies = acc[k * spec.trials..(k + 1) * spec.trials].to_vec();
            let (mean, std) = mean_std(&accuracies);
            let full_labels = match regime {
                Regime::Full => pool.len(),
                _ => spec.labels_per_class * pool.class_count(),
            };
            RegimeRow { regime, full_labels, accuracies, mean, std }
        })
        .collect();
    Ok(ProtocolReport { rows })
}

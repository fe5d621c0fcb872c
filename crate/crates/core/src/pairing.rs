//! Turning fully-labeled data into sufficiently-labeled pairs.
//!
//! Four regimes are supported:
//! - exhaustive: every unordered pair of distinct examples;
//! - disjoint: each example appears in at most one pair, and the unused
//!   examples are returned as a fully-labeled remainder;
//! - sampled: a fixed number of distinct pairs drawn in class-restricted
//!   batches (each batch draws `M` classes, then pairs among them);
//! - online: every within-minibatch pair, regenerated from a fresh shuffle at
//!   each epoch.

use std::collections::HashSet;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{
    sufficient_label, Example, ExampleId, FullyLabeledDataset, PairDataset, SufficientLabel, SufficientPair,
};
use crate::error::{Error, Result};
use crate::rng;

/// Pairs emitted per class-restricted batch in sampled mode.
pub const SAMPLED_BATCH_PAIRS: usize = 1024;
/// Upper bound on classes drawn per batch when none is configured.
pub const DEFAULT_CLASS_BATCH: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingMode {
    Exhaustive,
    Disjoint,
    Sampled,
    Online,
}

impl FromStr for PairingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(PairingMode::Exhaustive),
            "disjoint" => Ok(PairingMode::Disjoint),
            "sampled" => Ok(PairingMode::Sampled),
            "online" => Ok(PairingMode::Online),
            other => Err(Error::InvalidConfig(format!("unknown pairing mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingConfig {
    pub mode: PairingMode,
    /// Requested pair count (sampled and disjoint modes).
    pub n_pairs: usize,
    /// Classes drawn per sampled batch; defaults to `min(10, class_count)`.
    pub class_batch: Option<usize>,
    pub seed: u64,
}

impl PairingConfig {
    pub fn sampled(n_pairs: usize, seed: u64) -> Self {
        Self { mode: PairingMode::Sampled, n_pairs, class_batch: None, seed }
    }

    pub fn class_batch_for(&self, class_count: usize) -> usize {
        self.class_batch.unwrap_or(DEFAULT_CLASS_BATCH.min(class_count))
    }
}

fn pair_of(a: &Example, b: &Example) -> SufficientPair {
    SufficientPair::new(a.id, b.id, sufficient_label(a.y, b.y)).expect("distinct ids within a validated dataset")
}

fn all_pairs_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Every unordered pair of distinct examples, in dataset order.
pub fn pair_exhaustive(ds: &FullyLabeledDataset) -> Result<PairDataset> {
    let ex = ds.examples();
    if ex.len() < 2 {
        return Err(Error::InsufficientExamples { needed: 2, got: ex.len() });
    }
    let mut pairs = Vec::with_capacity(all_pairs_count(ex.len()));
    for i in 0..ex.len() {
        for j in i + 1..ex.len() {
            pairs.push(pair_of(&ex[i], &ex[j]));
        }
    }
    Ok(PairDataset::Referenced(pairs))
}

/// Sequential-anchor disjoint pairing.
///
/// Records are visited in id order: the smallest remaining id is the anchor,
/// its partner is drawn uniformly from the other remaining records, and both
/// leave the pool. Requires `N > 2n`, so at least one record is always left
/// in the fully-labeled remainder.
pub fn pair_disjoint(ds: &FullyLabeledDataset, n: usize, seed: u64) -> Result<(PairDataset, FullyLabeledDataset)> {
    let total = ds.len();
    if n == 0 {
        return Err(Error::InvalidConfig("disjoint pairing needs n >= 1".into()));
    }
    if total <= 2 * n {
        return Err(Error::InsufficientForDisjoint { examples: total, pairs: n });
    }
    let ex = ds.examples();
    let mut pool: Vec<usize> = (0..total).collect();
    pool.sort_by_key(|&i| ex[i].id);

    let mut rng = rng::stream(seed, rng::PAIRING, 0);
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let partner = rng.random_range(1..pool.len());
        let b = pool.remove(partner);
        let a = pool.remove(0);
        pairs.push(pair_of(&ex[a], &ex[b]));
    }

    let left: HashSet<usize> = pool.into_iter().collect();
    let remainder: Vec<Example> = (0..total).filter(|i| left.contains(i)).map(|i| ex[i].clone()).collect();
    Ok((PairDataset::Referenced(pairs), ds.with_examples(remainder)))
}

/// Fixed-size sampling without replacement under the class-batch sampler.
pub fn pair_sampled(ds: &FullyLabeledDataset, cfg: &PairingConfig) -> Result<PairDataset> {
    let ex = ds.examples();
    let available = all_pairs_count(ex.len());
    if cfg.n_pairs > available {
        return Err(Error::TooManyPairs { requested: cfg.n_pairs, available });
    }
    let m = cfg.class_batch_for(ds.class_count());
    if m < 2 || m > ds.class_count() {
        return Err(Error::InvalidConfig(format!("class batch size {m} must lie in [2, {}]", ds.class_count())));
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.class_count()];
    for (i, e) in ex.iter().enumerate() {
        by_class[e.y].push(i);
    }
    let present: Vec<usize> = (0..ds.class_count()).filter(|&c| !by_class[c].is_empty()).collect();
    let m = m.min(present.len());

    let mut rng = rng::stream(cfg.seed, rng::PAIRING, 0);
    let mut used: HashSet<(ExampleId, ExampleId)> = HashSet::with_capacity(cfg.n_pairs);
    let mut pairs = Vec::with_capacity(cfg.n_pairs);

    while pairs.len() < cfg.n_pairs {
        let mut classes: Vec<usize> =
            index::sample(&mut rng, present.len(), m).into_iter().map(|k| present[k]).collect();
        classes.sort_unstable();
        let pool: Vec<usize> = classes.iter().flat_map(|&c| by_class[c].iter().copied()).collect();
        if pool.len() < 2 {
            continue;
        }
        let target = SAMPLED_BATCH_PAIRS.min(cfg.n_pairs - pairs.len());
        let mut emitted = 0;
        let mut attempts = 0;
        let max_attempts = 4 * target + 64;
        while emitted < target && attempts < max_attempts {
            attempts += 1;
            let i = rng.random_range(0..pool.len());
            let mut j = rng.random_range(0..pool.len() - 1);
            if j >= i {
                j += 1;
            }
            let p = pair_of(&ex[pool[i]], &ex[pool[j]]);
            if used.insert(p.key()) {
                pairs.push(p);
                emitted += 1;
            }
        }
        if emitted < target {
            // Pool nearly exhausted: draw from the explicit list of unused pairs.
            let mut rest = Vec::new();
            for x in 0..pool.len() {
                for y in x + 1..pool.len() {
                    let p = pair_of(&ex[pool[x]], &ex[pool[y]]);
                    if !used.contains(&p.key()) {
                        rest.push(p);
                    }
                }
            }
            rest.shuffle(&mut rng);
            for p in rest.into_iter().take(target - emitted) {
                used.insert(p.key());
                pairs.push(p);
            }
        }
    }
    Ok(PairDataset::Referenced(pairs))
}

/// All within-batch pairs of one minibatch; empty for batches of fewer than two.
pub fn online_epoch_pairs(batch: &[Example]) -> PairDataset {
    let mut pairs = Vec::with_capacity(all_pairs_count(batch.len()));
    for i in 0..batch.len() {
        for j in i + 1..batch.len() {
            if batch[i].id != batch[j].id {
                pairs.push(pair_of(&batch[i], &batch[j]));
            }
        }
    }
    PairDataset::Referenced(pairs)
}

/// Position pairs `(i, j)`, `i < j`, over a minibatch with the given labels.
pub fn within_batch_index_pairs(labels: &[usize]) -> (Vec<(usize, usize)>, Vec<SufficientLabel>) {
    let n = all_pairs_count(labels.len());
    let mut idx = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n);
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            idx.push((i, j));
            t.push(sufficient_label(labels[i], labels[j]));
        }
    }
    (idx, t)
}

/// Shuffled minibatches (as positions) for one epoch of online pairing.
pub fn epoch_batches(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::SHUFFLE, epoch));
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

/// Dispatches on `cfg.mode`. Disjoint mode discards the remainder; call
/// [`pair_disjoint`] directly to keep it. Online mode has no static pair set.
pub fn make_pairs(ds: &FullyLabeledDataset, cfg: &PairingConfig) -> Result<PairDataset> {
    match cfg.mode {
        PairingMode::Exhaustive => pair_exhaustive(ds),
        PairingMode::Disjoint => pair_disjoint(ds, cfg.n_pairs, cfg.seed).map(|(p, _)| p),
        PairingMode::Sampled => pair_sampled(ds, cfg),
        PairingMode::Online => {
            Err(Error::InvalidConfig("online pairing is generated per minibatch during training".into()))
        }
    }
}

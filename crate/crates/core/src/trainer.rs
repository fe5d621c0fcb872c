//! Two-stage training: Step 1 fits the hidden network on pairs, Step 2 fits
//! the linear head on a small fully-labeled set with the hidden network
//! frozen. Also the jointly trained full-label baseline.

use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array2, ArrayViewMut2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{FullyLabeledDataset, PairDataset, SufficientLabel};
use crate::error::{Error, Result};
use crate::losses::{all_pairs_risk_and_grad, head_batch_loss, pair_risk_and_grad, HeadLoss, PairLoss};
use crate::model::{predict_from_scores, project_head, HeadGrad, LayerGrad, LinearHead, TwoPartClassifier};
use crate::pairing::epoch_batches;
use crate::rng;

/// One constant-rate stretch of the step-size schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub rate: f64,
    pub epochs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Step 1 and baseline schedule.
    pub schedule: Vec<Stage>,
    pub head_rate: f64,
    pub head_epochs: usize,
    pub seed: u64,
    pub pair_loss: PairLoss,
    pub head_loss: HeadLoss,
    /// Kernel target for different-class pairs; `-r²` when absent.
    pub beta: Option<f64>,
    pub validation_fraction: f64,
    pub online: bool,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Rescale the head onto the `‖w‖ ≤ 1/r` ball after every update. The
    /// returned head is projected either way.
    pub project_head: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            schedule: vec![
                Stage { rate: 0.1, epochs: 20 },
                Stage { rate: 0.01, epochs: 10 },
                Stage { rate: 0.001, epochs: 5 },
            ],
            head_rate: 0.1,
            head_epochs: 50,
            seed: 0,
            pair_loss: PairLoss::Sqdist,
            head_loss: HeadLoss::Hinge,
            beta: None,
            validation_fraction: 1.0 / 12.0,
            online: false,
            momentum: 0.0,
            weight_decay: 0.0,
            project_head: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.schedule.iter().any(|s| !(s.rate > 0.0 && s.rate.is_finite()) || s.epochs == 0) {
            return bad("schedule rates must be positive and stage epochs at least 1");
        }
        if !(self.head_rate > 0.0 && self.head_rate.is_finite()) {
            return bad("head_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.momentum) || self.weight_decay < 0.0 {
            return bad("momentum must lie in [0, 1) and weight_decay be nonnegative");
        }
        Ok(())
    }

    pub fn total_epochs(&self) -> usize {
        self.schedule.iter().map(|s| s.epochs).sum()
    }

    /// Step size in effect at zero-based epoch `e` of the schedule.
    pub fn rate_at(&self, e: usize) -> Option<f64> {
        let mut end = 0;
        for s in &self.schedule {
            end += s.epochs;
            if e < end {
                return Some(s.rate);
            }
        }
        None
    }

    pub fn beta_for(&self, r: f64) -> f64 {
        self.beta.unwrap_or(-r * r)
    }
}

/// Transforms a batch of inputs in place before the forward pass.
pub type Augmentation = Arc<dyn Fn(ArrayViewMut2<f64>, &mut rng::Rng) + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pairs,
    Head,
    Joint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub phase: Phase,
    pub epoch: usize,
    pub rate: f64,
    pub train_loss: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub config: TrainConfig,
    pub trace: Vec<EpochRecord>,
    /// Index into `trace` of the epoch whose parameters were kept.
    pub best_epoch: Option<usize>,
    pub wall_seconds: f64,
    /// Largest number of pairs held in memory at once during Step 1.
    pub max_pair_buffer: usize,
    /// Batches skipped because the pair loss was undefined on them.
    pub skipped_batches: usize,
}

impl TrainRun {
    fn new(config: &TrainConfig) -> Self {
        Self {
            config: config.clone(),
            trace: Vec::new(),
            best_epoch: None,
            wall_seconds: 0.0,
            max_pair_buffer: 0,
            skipped_batches: 0,
        }
    }

    fn absorb(&mut self, other: TrainRun) {
        let offset = self.trace.len();
        self.trace.extend(other.trace);
        self.best_epoch = other.best_epoch.map(|b| b + offset);
        self.max_pair_buffer = self.max_pair_buffer.max(other.max_pair_buffer);
        self.skipped_batches += other.skipped_batches;
    }
}

/// Where Step 1 gets its pairs.
#[derive(Clone, Copy, Debug)]
pub enum PairSource<'a> {
    /// A fixed pair set; id-referencing pairs resolve against `store`.
    Fixed { pairs: &'a PairDataset, store: Option<&'a FullyLabeledDataset> },
    /// All within-batch pairs of per-epoch reshuffled minibatches.
    Online(&'a FullyLabeledDataset),
}

/// Plain SGD with optional heavy-ball momentum and L2 weight decay.
struct Sgd {
    momentum: f64,
    decay: f64,
    hidden_v: Option<Vec<LayerGrad>>,
    head_v: Option<HeadGrad>,
}

impl Sgd {
    fn new(cfg: &TrainConfig) -> Self {
        Self { momentum: cfg.momentum, decay: cfg.weight_decay, hidden_v: None, head_v: None }
    }

    fn plain(&self) -> bool {
        self.momentum == 0.0 && self.decay == 0.0
    }

    fn step_hidden(&mut self, m: &mut TwoPartClassifier, mut g: Vec<LayerGrad>, rate: f64) {
        if !self.plain() {
            for (gl, l) in g.iter_mut().zip(m.hidden.layers()) {
                gl.weight.scaled_add(self.decay, &l.weight);
                gl.bias.scaled_add(self.decay, &l.bias);
            }
            let v = self.hidden_v.get_or_insert_with(|| m.hidden.zero_grads());
            for (vl, gl) in v.iter_mut().zip(&g) {
                vl.weight = &vl.weight * self.momentum + &gl.weight;
                vl.bias = &vl.bias * self.momentum + &gl.bias;
            }
            g.clone_from(v);
        }
        m.hidden.apply_update(&g, rate);
    }

    fn step_head(&mut self, head: &mut LinearHead, g: HeadGrad, rate: f64) {
        let g = if self.plain() {
            g
        } else {
            let g = match (g, &*head) {
                (HeadGrad::Binary { w: gw }, LinearHead::Binary { w }) => {
                    HeadGrad::Binary { w: gw + &(w * self.decay) }
                }
                (HeadGrad::Multiclass { w: gw, b: gb }, LinearHead::Multiclass { w, b }) => {
                    HeadGrad::Multiclass { w: gw + &(w * self.decay), b: gb + &(b * self.decay) }
                }
                (g, _) => g,
            };
            let v = self.head_v.get_or_insert_with(|| head.zero_grad());
            *v = match (&*v, &g) {
                (HeadGrad::Binary { w: vw }, HeadGrad::Binary { w: gw }) => {
                    HeadGrad::Binary { w: vw * self.momentum + gw }
                }
                (HeadGrad::Multiclass { w: vw, b: vb }, HeadGrad::Multiclass { w: gw, b: gb }) => {
                    HeadGrad::Multiclass { w: vw * self.momentum + gw, b: vb * self.momentum + gb }
                }
                _ => g.clone(),
            };
            v.clone()
        };
        head.apply_update(&g, rate);
    }
}

/// Positions of `ds` sorted by example id, so results do not depend on the
/// order examples were supplied in.
fn canonical_order(ds: &FullyLabeledDataset) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.sort_by_key(|&i| ds.examples()[i].id);
    idx
}

/// Splits off a validation set when it can hold at least one example per
/// class; otherwise everything is used for training.
fn split_validation(
    ds: &FullyLabeledDataset,
    frac: f64,
    seed: u64,
) -> (FullyLabeledDataset, Option<FullyLabeledDataset>) {
    let mut idx = canonical_order(ds);
    let n_val = (ds.len() as f64 * frac).floor() as usize;
    if n_val < ds.class_count() || n_val >= ds.len() {
        return (ds.subset(&idx), None);
    }
    idx.shuffle(&mut rng::stream(seed, rng::SPLIT, 0));
    let (val, train) = idx.split_at(n_val);
    let mut train = train.to_vec();
    train.sort_by_key(|&i| ds.examples()[i].id);
    (ds.subset(&train), Some(ds.subset(val)))
}

fn accuracy_on(scores: &Array2<f64>, labels: &[usize]) -> f64 {
    let hits = scores.rows().into_iter().zip(labels).filter(|(s, &y)| predict_from_scores(s.view()) == y).count();
    hits as f64 / labels.len() as f64
}

fn check_classes(m: &TwoPartClassifier, ds: &FullyLabeledDataset) -> Result<()> {
    if ds.class_count() != m.class_count() {
        return Err(Error::ClassCountMismatch { model: m.class_count(), data: ds.class_count() });
    }
    if ds.dim() != m.input_dim() {
        return Err(Error::DimMismatch { expected: m.input_dim(), got: ds.dim() });
    }
    Ok(())
}

fn gather_rows(x: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    x.select(Axis(0), rows)
}

/// Runs the training procedures of a [`TrainConfig`], optionally with an
/// input augmentation applied to every training batch.
#[derive(Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    augmentation: Option<Augmentation>,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, augmentation: None })
    }

    pub fn with_augmentation(mut self, f: Augmentation) -> Self {
        self.augmentation = Some(f);
        self
    }

    fn augment(&self, mut x: Array2<f64>, epoch: usize, batch: usize) -> Array2<f64> {
        if let Some(f) = &self.augmentation {
            let mut g = rng::stream(self.config.seed, "augment", ((epoch as u64) << 32) | batch as u64);
            f(x.view_mut(), &mut g);
        }
        x
    }

    /// Step 1: fits the hidden network on pair data. The head is untouched.
    pub fn step1(&self, m: &mut TwoPartClassifier, source: PairSource<'_>) -> Result<TrainRun> {
        let cfg = &self.config;
        let mut run = TrainRun::new(cfg);
        let beta = cfg.beta_for(m.radius());
        let mut sgd = Sgd::new(cfg);
        let dim = m.input_dim();
        match source {
            PairSource::Fixed { pairs, store } => {
                if pairs.is_empty() {
                    return Err(Error::Empty("pair dataset"));
                }
                let views = pairs.resolve(store)?;
                if let Some(v) = views.iter().find(|v| v.a.len() != dim || v.b.len() != dim) {
                    return Err(Error::DimMismatch { expected: dim, got: v.a.len().max(v.b.len()) });
                }
                for e in 0..cfg.total_epochs() {
                    let rate = cfg.rate_at(e).expect("epoch within schedule");
                    let mut sum = 0.0;
                    let mut count = 0usize;
                    for (bi, batch) in epoch_batches(views.len(), cfg.batch_size, cfg.seed, e as u64).iter().enumerate()
                    {
                        let n = batch.len();
                        let mut x = Array2::zeros((2 * n, dim));
                        let mut labels = Vec::with_capacity(n);
                        for (k, &p) in batch.iter().enumerate() {
                            x.row_mut(k).assign(&ndarray::ArrayView1::from(views[p].a));
                            x.row_mut(n + k).assign(&ndarray::ArrayView1::from(views[p].b));
                            labels.push(views[p].t);
                        }
                        let x = self.augment(x, e, bi);
                        let index: Vec<_> = (0..n).map(|k| (k, n + k)).collect();
                        run.max_pair_buffer = run.max_pair_buffer.max(n);
                        match self.pair_update(m, &mut sgd, x, &index, &labels, beta, rate)? {
                            Some(r) => {
                                sum += r * n as f64;
                                count += n;
                            }
                            None => run.skipped_batches += 1,
                        }
                    }
                    run.trace.push(epoch_record(Phase::Pairs, e, rate, sum, count));
                }
            }
            PairSource::Online(ds) => {
                if ds.len() < 2 {
                    return Err(Error::InsufficientExamples { needed: 2, got: ds.len() });
                }
                if ds.dim() != dim {
                    return Err(Error::DimMismatch { expected: dim, got: ds.dim() });
                }
                let order = canonical_order(ds);
                let ds = ds.subset(&order);
                let x_all = ds.feature_matrix();
                let y_all = ds.labels();
                for e in 0..cfg.total_epochs() {
                    let rate = cfg.rate_at(e).expect("epoch within schedule");
                    let mut sum = 0.0;
                    let mut count = 0usize;
                    for (bi, batch) in epoch_batches(ds.len(), cfg.batch_size, cfg.seed, e as u64).iter().enumerate() {
                        if batch.len() < 2 {
                            continue;
                        }
                        let ys: Vec<usize> = batch.iter().map(|&i| y_all[i]).collect();
                        let pairs = batch.len() * (batch.len() - 1) / 2;
                        run.max_pair_buffer = run.max_pair_buffer.max(pairs);
                        let x = self.augment(gather_rows(&x_all, batch), e, bi);
                        match all_pairs_risk_and_grad(m, x.view(), &ys, cfg.pair_loss, beta) {
                            Ok((r, g)) => {
                                sgd.step_hidden(m, g, rate);
                                sum += r * pairs as f64;
                                count += pairs;
                            }
                            Err(Error::ContrastiveUndefined | Error::DegenerateKernelBatch) => run.skipped_batches += 1,
                            Err(e) => return Err(e),
                        }
                    }
                    run.trace.push(epoch_record(Phase::Pairs, e, rate, sum, count));
                }
            }
        }
        Ok(run)
    }

    #[allow(clippy::too_many_arguments)]
    fn pair_update(
        &self,
        m: &mut TwoPartClassifier,
        sgd: &mut Sgd,
        x: Array2<f64>,
        index: &[(usize, usize)],
        labels: &[SufficientLabel],
        beta: f64,
        rate: f64,
    ) -> Result<Option<f64>> {
        match pair_risk_and_grad(m, x.view(), index, labels, self.config.pair_loss, beta) {
            Ok((risk, g)) => {
                sgd.step_hidden(m, g, rate);
                Ok(Some(risk))
            }
            Err(Error::ContrastiveUndefined | Error::DegenerateKernelBatch) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Step 2: fits the head on `ds` with the hidden network frozen. The
    /// representation of every example is computed once up front.
    pub fn step2(&self, m: &mut TwoPartClassifier, ds: &FullyLabeledDataset) -> Result<TrainRun> {
        let cfg = &self.config;
        if ds.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        check_classes(m, ds)?;
        let mut run = TrainRun::new(cfg);
        let (train, val) = split_validation(ds, cfg.validation_fraction, cfg.seed);
        let phi = m.features_batch(train.feature_matrix().view())?;
        let y = train.labels();
        let val_data = match &val {
            Some(v) => Some((m.features_batch(v.feature_matrix().view())?, v.labels())),
            None => None,
        };
        let r = m.radius();
        let mut head = m.head.clone();
        if cfg.project_head {
            head = project_head(&head, r);
        }
        let mut best: Option<(f64, LinearHead)> = None;
        let mut sgd = Sgd::new(cfg);
        for e in 0..cfg.head_epochs {
            let mut g = rng::stream(cfg.seed, rng::HEAD_SHUFFLE, e as u64);
            let mut order: Vec<usize> = (0..train.len()).collect();
            order.shuffle(&mut g);
            let mut sum = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let p = gather_rows(&phi, batch);
                let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
                let scores = head.scores_batch(p.view());
                let (risk, ds_) = head_batch_loss(cfg.head_loss, scores.view(), &yb)?;
                let (grad, _) = head.backward(p.view(), ds_.view());
                sgd.step_head(&mut head, grad, cfg.head_rate);
                if cfg.project_head {
                    head = project_head(&head, r);
                }
                sum += risk * batch.len() as f64;
            }
            let val_acc = val_data.as_ref().map(|(vp, vy)| accuracy_on(&head.scores_batch(vp.view()), vy));
            if let Some(a) = val_acc {
                if best.as_ref().is_none_or(|(b, _)| a > *b) {
                    best = Some((a, head.clone()));
                    run.best_epoch = Some(e);
                }
            }
            run.trace.push(EpochRecord {
                phase: Phase::Head,
                epoch: e,
                rate: cfg.head_rate,
                train_loss: sum / train.len() as f64,
                validation_accuracy: val_acc,
            });
        }
        let kept = match best {
            Some((_, h)) => h,
            None => {
                run.best_epoch = cfg.head_epochs.checked_sub(1);
                head
            }
        };
        m.head = project_head(&kept, r);
        Ok(run)
    }

    /// Step 1 on `pairs` followed by Step 2 on `small`.
    pub fn two_stage(
        &self,
        m: &mut TwoPartClassifier,
        source: PairSource<'_>,
        small: &FullyLabeledDataset,
    ) -> Result<TrainRun> {
        let start = Instant::now();
        check_classes(m, small)?;
        let mut run = self.step1(m, source)?;
        run.absorb(self.step2(m, small)?);
        run.wall_seconds = start.elapsed().as_secs_f64();
        Ok(run)
    }

    /// Trains hidden network and head jointly on the head loss.
    pub fn baseline(&self, m: &mut TwoPartClassifier, ds: &FullyLabeledDataset) -> Result<TrainRun> {
        let start = Instant::now();
        let cfg = &self.config;
        if ds.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        check_classes(m, ds)?;
        let mut run = TrainRun::new(cfg);
        let (train, val) = split_validation(ds, cfg.validation_fraction, cfg.seed);
        let x = train.feature_matrix();
        let y = train.labels();
        let val_data = val.as_ref().map(|v| (v.feature_matrix(), v.labels()));
        let r = m.radius();
        if cfg.project_head {
            m.head = project_head(&m.head, r);
        }
        let mut best: Option<(f64, TwoPartClassifier)> = None;
        let mut sgd = Sgd::new(cfg);
        for e in 0..cfg.total_epochs() {
            let rate = cfg.rate_at(e).expect("epoch within schedule");
            let mut sum = 0.0;
            for (bi, batch) in epoch_batches(train.len(), cfg.batch_size, cfg.seed, e as u64).iter().enumerate() {
                let xb = self.augment(gather_rows(&x, batch), e, bi);
                let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
                let trace = m.forward_traced(xb.view())?;
                let (risk, ds_) = head_batch_loss(cfg.head_loss, trace.scores.view(), &yb)?;
                let g = m.backward(&trace, ds_.view())?;
                sgd.step_hidden(m, g.hidden, rate);
                sgd.step_head(&mut m.head, g.head, rate);
                if cfg.project_head {
                    m.head = project_head(&m.head, r);
                }
                sum += risk * batch.len() as f64;
            }
            let val_acc = match &val_data {
                Some((vx, vy)) => Some(accuracy_on(&m.scores_batch(vx.view())?, vy)),
                None => None,
            };
            if let Some(a) = val_acc {
                if best.as_ref().is_none_or(|(b, _)| a > *b) {
                    best = Some((a, m.clone()));
                    run.best_epoch = Some(e);
                }
            }
            run.trace.push(EpochRecord {
                phase: Phase::Joint,
                epoch: e,
                rate,
                train_loss: sum / train.len() as f64,
                validation_accuracy: val_acc,
            });
        }
        match best {
            Some((_, b)) => *m = b,
            None => run.best_epoch = cfg.total_epochs().checked_sub(1),
        }
        m.head = project_head(&m.head, r);
        run.wall_seconds = start.elapsed().as_secs_f64();
        Ok(run)
    }
}

fn epoch_record(phase: Phase, epoch: usize, rate: f64, sum: f64, count: usize) -> EpochRecord {
    EpochRecord {
        phase,
        epoch,
        rate,
        train_loss: if count > 0 { sum / count as f64 } else { f64::NAN },
        validation_accuracy: None,
    }
}

pub fn train_step1(m: &mut TwoPartClassifier, source: PairSource<'_>, cfg: &TrainConfig) -> Result<TrainRun> {
    Trainer::new(cfg.clone())?.step1(m, source)
}

pub fn train_step2(m: &mut TwoPartClassifier, ds: &FullyLabeledDataset, cfg: &TrainConfig) -> Result<TrainRun> {
    Trainer::new(cfg.clone())?.step2(m, ds)
}

/// Two-stage training from a fixed pair set.
pub fn train_two_stage(
    m: &mut TwoPartClassifier,
    small: &FullyLabeledDataset,
    pairs: &PairDataset,
    store: Option<&FullyLabeledDataset>,
    cfg: &TrainConfig,
) -> Result<TrainRun> {
    Trainer::new(cfg.clone())?.two_stage(m, PairSource::Fixed { pairs, store }, small)
}

/// Two-stage training with Step 1 drawing all within-batch pairs of `for_pairs`.
pub fn train_online(
    m: &mut TwoPartClassifier,
    for_pairs: &FullyLabeledDataset,
    small: &FullyLabeledDataset,
    cfg: &TrainConfig,
) -> Result<TrainRun> {
    if !cfg.online {
        return Err(Error::InvalidConfig("online training needs `online = true`".into()));
    }
    Trainer::new(cfg.clone())?.two_stage(m, PairSource::Online(for_pairs), small)
}

pub fn train_baseline_full(m: &mut TwoPartClassifier, ds: &FullyLabeledDataset, cfg: &TrainConfig) -> Result<TrainRun> {
    Trainer::new(cfg.clone())?.baseline(m, ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_lookup() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.total_epochs(), 35);
        assert_eq!(cfg.rate_at(0), Some(0.1));
        assert_eq!(cfg.rate_at(19), Some(0.1));
        assert_eq!(cfg.rate_at(20), Some(0.01));
        assert_eq!(cfg.rate_at(34), Some(0.001));
        assert_eq!(cfg.rate_at(35), None);
    }

    #[test]
    fn config_validation() {
        let cfg = TrainConfig { validation_fraction: 1.0, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::default();
        cfg.schedule[1].epochs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::default();
        cfg.schedule.clear();
        assert!(cfg.validate().is_ok());
    }
}

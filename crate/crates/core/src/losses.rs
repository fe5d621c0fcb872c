//! Head losses, pair losses, and empirical risks.
//!
//! Batch functions return the batch risk together with its adjoint, so the
//! trainer can hand the result straight to a backward pass.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{FullyLabeledDataset, PairDataset, SufficientLabel};
use crate::error::{Error, Result};
use crate::model::TwoPartClassifier;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLoss {
    Sqdist,
    Ncs,
    Contrastive,
    Mse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadLoss {
    Hinge,
    Xent,
}

impl FromStr for PairLoss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqdist" => Ok(PairLoss::Sqdist),
            "ncs" => Ok(PairLoss::Ncs),
            "contrastive" => Ok(PairLoss::Contrastive),
            "mse" => Ok(PairLoss::Mse),
            _ => Err(Error::InvalidConfig(format!("unknown pair loss '{s}'"))),
        }
    }
}

impl FromStr for HeadLoss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(HeadLoss::Hinge),
            "xent" => Ok(HeadLoss::Xent),
            _ => Err(Error::InvalidConfig(format!("unknown head loss '{s}'"))),
        }
    }
}

impl fmt::Display for PairLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairLoss::Sqdist => "sqdist",
            PairLoss::Ncs => "ncs",
            PairLoss::Contrastive => "contrastive",
            PairLoss::Mse => "mse",
        })
    }
}

impl fmt::Display for HeadLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadLoss::Hinge => "hinge",
            HeadLoss::Xent => "xent",
        })
    }
}

/// `−y·ŷ` for `y = ±1`.
pub fn hinge_unbounded(y_hat: f64, y: f64) -> f64 {
    -y * y_hat
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `−log softmax(scores)[y]`.
pub fn cross_entropy(scores: &[f64], y: usize) -> f64 {
    log_sum_exp(scores.iter().copied()) - scores[y]
}

/// `+‖u − u′‖²` for same-class pairs, `−‖u − u′‖²` otherwise.
pub fn pair_loss_sqdist(u: &[f64], v: &[f64], t: SufficientLabel) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    if t.is_same() {
        d2
    } else {
        -d2
    }
}

/// Inner product of two already-normalized representations.
pub fn kernel(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Minimum of the kernel on the radius-`r` sphere.
pub fn default_beta(r: f64) -> f64 {
    -r * r
}

/// Kernel values of a pair batch and their targets.
#[derive(Clone, Debug, PartialEq)]
pub struct PairBatchContext {
    pub kernel: Vec<f64>,
    pub target: Vec<f64>,
    pub beta: f64,
}

impl PairBatchContext {
    pub fn new(kernel: Vec<f64>, labels: &[SufficientLabel], r: f64, beta: f64) -> Result<Self> {
        if kernel.len() != labels.len() {
            return Err(Error::DimMismatch { expected: labels.len(), got: kernel.len() });
        }
        let target = labels.iter().map(|t| if t.is_same() { r * r } else { beta }).collect();
        Ok(Self { kernel, target, beta })
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    fn norms(&self) -> Result<(f64, f64)> {
        let nk = self.kernel.iter().map(|k| k * k).sum::<f64>().sqrt();
        let nt = self.target.iter().map(|k| k * k).sum::<f64>().sqrt();
        if nk == 0.0 || nt == 0.0 || !nk.is_finite() {
            return Err(Error::DegenerateKernelBatch);
        }
        Ok((nk, nt))
    }
}

/// Per-pair NCS term; the batch mean of these is `−cos(K, K*)`.
pub fn pair_loss_ncs(ctx: &PairBatchContext, i: usize) -> Result<f64> {
    let (nk, nt) = ctx.norms()?;
    Ok(-(ctx.len() as f64) * ctx.kernel[i] * ctx.target[i] / (nk * nt))
}

pub fn ncs_risk(ctx: &PairBatchContext) -> Result<f64> {
    let (nk, nt) = ctx.norms()?;
    Ok(-kernel(&ctx.kernel, &ctx.target) / (nk * nt))
}

/// `−log(Σ_{t=1} e^k / Σ e^k)` over the whole batch.
pub fn pair_loss_contrastive(ctx: &PairBatchContext, labels: &[SufficientLabel]) -> Result<f64> {
    if !labels.iter().any(|t| t.is_same()) {
        return Err(Error::ContrastiveUndefined);
    }
    let pos = ctx.kernel.iter().zip(labels).filter(|(_, t)| t.is_same()).map(|(k, _)| *k);
    Ok(log_sum_exp(ctx.kernel.iter().copied()) - log_sum_exp(pos))
}

pub fn pair_loss_mse(ctx: &PairBatchContext, i: usize) -> f64 {
    let r = ctx.kernel[i] - ctx.target[i];
    r * r
}

/// Batch risk of a pair loss over rows of `phi_a`, `phi_b`, with adjoints.
pub fn pair_batch_loss(
    loss: PairLoss,
    phi_a: ArrayView2<f64>,
    phi_b: ArrayView2<f64>,
    labels: &[SufficientLabel],
    r: f64,
    beta: f64,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::Empty("pair batch"));
    }
    if phi_a.nrows() != n || phi_b.nrows() != n || phi_a.ncols() != phi_b.ncols() {
        return Err(Error::DimMismatch { expected: n, got: phi_a.nrows().min(phi_b.nrows()) });
    }
    let nf = n as f64;
    if loss == PairLoss::Sqdist {
        let diff = &phi_a - &phi_b;
        let sign = Array1::from_iter(labels.iter().map(|t| if t.is_same() { 1.0 } else { -1.0 }));
        let d2 = (&diff * &diff).sum_axis(Axis(1));
        let risk = sign.dot(&d2) / nf;
        let da = diff * &(sign * (2.0 / nf)).insert_axis(Axis(1));
        let db = -&da;
        return Ok((risk, da, db));
    }
    let k: Vec<f64> = (&phi_a * &phi_b).sum_axis(Axis(1)).to_vec();
    let ctx = PairBatchContext::new(k, labels, r, beta)?;
    let (risk, dk) = kernel_risk_grad(loss, &ctx, labels)?;
    let dk = Array1::from(dk).insert_axis(Axis(1));
    Ok((risk, &phi_b * &dk, &phi_a * &dk))
}

/// Risk and its gradient with respect to the kernel vector.
pub fn kernel_risk_grad(loss: PairLoss, ctx: &PairBatchContext, labels: &[SufficientLabel]) -> Result<(f64, Vec<f64>)> {
    let n = ctx.len() as f64;
    match loss {
        PairLoss::Ncs => {
            let (nk, nt) = ctx.norms()?;
            let dot = kernel(&ctx.kernel, &ctx.target);
            let risk = -dot / (nk * nt);
            let g =
                ctx.kernel.iter().zip(&ctx.target).map(|(k, t)| -t / (nk * nt) + dot * k / (nk.powi(3) * nt)).collect();
            Ok((risk, g))
        }
        PairLoss::Contrastive => {
            let risk = pair_loss_contrastive(ctx, labels)?;
            let lse_all = log_sum_exp(ctx.kernel.iter().copied());
            let lse_pos = log_sum_exp(ctx.kernel.iter().zip(labels).filter(|(_, t)| t.is_same()).map(|(k, _)| *k));
            let g = ctx
                .kernel
                .iter()
                .zip(labels)
                .map(|(k, t)| {
                    let all = (k - lse_all).exp();
                    if t.is_same() {
                        all - (k - lse_pos).exp()
                    } else {
                        all
                    }
                })
                .collect();
            Ok((risk, g))
        }
        PairLoss::Mse => {
            let risk = (0..ctx.len()).map(|i| pair_loss_mse(ctx, i)).sum::<f64>() / n;
            let g = ctx.kernel.iter().zip(&ctx.target).map(|(k, t)| 2.0 * (k - t) / n).collect();
            Ok((risk, g))
        }
        PairLoss::Sqdist => Err(Error::InvalidConfig("sqdist is not a kernel loss".into())),
    }
}

/// Batch mean head loss over score rows, with the adjoint at the scores.
///
/// A single score column is the binary head: hinge uses `y = 2·class − 1`
/// and cross-entropy treats the score as the logit of class 1. With several
/// columns hinge is one-vs-rest, summed over classes.
pub fn head_batch_loss(loss: HeadLoss, scores: ArrayView2<f64>, y: &[usize]) -> Result<(f64, Array2<f64>)> {
    let n = y.len();
    if n == 0 {
        return Err(Error::Empty("batch"));
    }
    if scores.nrows() != n {
        return Err(Error::DimMismatch { expected: n, got: scores.nrows() });
    }
    let c = scores.ncols();
    let classes = if c == 1 { 2 } else { c };
    if let Some(&bad) = y.iter().find(|&&v| v >= classes) {
        return Err(Error::ClassCountMismatch { model: classes, data: bad + 1 });
    }
    let nf = n as f64;
    let mut g = Array2::zeros(scores.raw_dim());
    let mut total = 0.0;
    for (i, (row, &yi)) in scores.rows().into_iter().zip(y).enumerate() {
        match (loss, c) {
            (HeadLoss::Hinge, 1) => {
                let ys = if yi == 1 { 1.0 } else { -1.0 };
                total += hinge_unbounded(row[0], ys);
                g[[i, 0]] = -ys / nf;
            }
            (HeadLoss::Hinge, _) => {
                for j in 0..c {
                    let ys = if j == yi { 1.0 } else { -1.0 };
                    total += hinge_unbounded(row[j], ys);
                    g[[i, j]] = -ys / nf;
                }
            }
            (HeadLoss::Xent, 1) => {
                let logits = [0.0, row[0]];
                total += cross_entropy(&logits, yi);
                let p1 = 1.0 / (1.0 + (-row[0]).exp());
                g[[i, 0]] = (p1 - yi as f64) / nf;
            }
            (HeadLoss::Xent, _) => {
                let v = row.to_vec();
                let lse = log_sum_exp(v.iter().copied());
                total += lse - v[yi];
                for j in 0..c {
                    g[[i, j]] = ((v[j] - lse).exp() - f64::from(u8::from(j == yi))) / nf;
                }
            }
        }
    }
    Ok((total / nf, g))
}

/// Mean per-example head loss of `m` on `ds`.
pub fn empirical_risk_full(m: &TwoPartClassifier, ds: &FullyLabeledDataset, loss: HeadLoss) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let scores = m.scores_batch(ds.feature_matrix().view())?;
    Ok(head_batch_loss(loss, scores.view(), &ds.labels())?.0)
}

/// Stacks the two sides of resolved pairs into `[A; B]`.
pub fn stack_pairs(pairs: &PairDataset, store: Option<&FullyLabeledDataset>, dim: usize) -> Result<Array2<f64>> {
    let views = pairs.resolve(store)?;
    let n = views.len();
    let mut x = Array2::zeros((2 * n, dim));
    for (i, p) in views.iter().enumerate() {
        if p.a.len() != dim || p.b.len() != dim {
            return Err(Error::DimMismatch { expected: dim, got: p.a.len() });
        }
        x.row_mut(i).assign(&ArrayView1::from(p.a));
        x.row_mut(n + i).assign(&ArrayView1::from(p.b));
    }
    Ok(x)
}

/// Pair risk of `m` over the whole pair set, weighting every pair by `1/n₁`.
/// Batch-level losses (NCS, contrastive) treat the set as one batch.
pub fn empirical_risk_pairs(
    m: &TwoPartClassifier,
    pairs: &PairDataset,
    store: Option<&FullyLabeledDataset>,
    loss: PairLoss,
    beta: f64,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("pair dataset"));
    }
    let x = stack_pairs(pairs, store, m.input_dim())?;
    let phi = m.features_batch(x.view())?;
    let n = pairs.len();
    let (risk, _, _) =
        pair_batch_loss(loss, phi.slice(s![..n, ..]), phi.slice(s![n.., ..]), &pairs.labels(), m.radius(), beta)?;
    Ok(risk)
}

/// Pair loss over pairs of rows of `phi`, with the adjoint at `phi`.
pub fn pair_rows_loss(
    loss: PairLoss,
    phi: ArrayView2<f64>,
    index: &[(usize, usize)],
    labels: &[SufficientLabel],
    r: f64,
    beta: f64,
) -> Result<(f64, Array2<f64>)> {
    if index.len() != labels.len() {
        return Err(Error::DimMismatch { expected: labels.len(), got: index.len() });
    }
    let rows_a: Vec<usize> = index.iter().map(|p| p.0).collect();
    let rows_b: Vec<usize> = index.iter().map(|p| p.1).collect();
    let a = phi.select(Axis(0), &rows_a);
    let b = phi.select(Axis(0), &rows_b);
    let (risk, da, db) = pair_batch_loss(loss, a.view(), b.view(), labels, r, beta)?;
    let mut dphi = Array2::zeros(phi.raw_dim());
    for (k, (&i, &j)) in rows_a.iter().zip(&rows_b).enumerate() {
        dphi.row_mut(i).scaled_add(1.0, &da.row(k));
        dphi.row_mut(j).scaled_add(1.0, &db.row(k));
    }
    Ok((risk, dphi))
}

/// Pair loss over every unordered pair of rows of `phi` (labels from
/// `classes`), computed through the Gram matrix. Pairs are ordered
/// `(0,1), (0,2), …, (1,2), …` as in [`crate::pairing::within_batch_index_pairs`].
pub fn all_pairs_loss(
    loss: PairLoss,
    phi: ArrayView2<f64>,
    classes: &[usize],
    r: f64,
    beta: f64,
) -> Result<(f64, Array2<f64>)> {
    let n = phi.nrows();
    if classes.len() != n {
        return Err(Error::DimMismatch { expected: n, got: classes.len() });
    }
    if n < 2 {
        return Err(Error::Empty("pair batch"));
    }
    let gram = phi.dot(&phi.t());
    let mut labels = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            labels.push(if classes[i] == classes[j] { SufficientLabel::Same } else { SufficientLabel::Different });
        }
    }
    let pf = labels.len() as f64;
    let mut g = Array2::<f64>::zeros((n, n));
    let risk = if loss == PairLoss::Sqdist {
        let mut sum = 0.0;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let s = if labels[k].is_same() { 1.0 } else { -1.0 };
                sum += s * (gram[[i, i]] + gram[[j, j]] - 2.0 * gram[[i, j]]);
                g[[i, j]] = -2.0 * s / pf;
                g[[j, i]] = -2.0 * s / pf;
                g[[i, i]] += 2.0 * s / pf;
                g[[j, j]] += 2.0 * s / pf;
                k += 1;
            }
        }
        sum / pf
    } else {
        let mut kv = Vec::with_capacity(labels.len());
        for i in 0..n {
            for j in i + 1..n {
                kv.push(gram[[i, j]]);
            }
        }
        let ctx = PairBatchContext::new(kv, &labels, r, beta)?;
        let (risk, dk) = kernel_risk_grad(loss, &ctx, &labels)?;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                g[[i, j]] = dk[k];
                g[[j, i]] = dk[k];
                k += 1;
            }
        }
        risk
    };
    Ok((risk, g.dot(&phi)))
}

/// Risk over all within-batch pairs of rows of `x`, and hidden-layer gradients.
pub fn all_pairs_risk_and_grad(
    m: &TwoPartClassifier,
    x: ArrayView2<f64>,
    classes: &[usize],
    loss: PairLoss,
    beta: f64,
) -> Result<(f64, Vec<crate::model::LayerGrad>)> {
    let trace = m.forward_traced(x)?;
    let (risk, dphi) = all_pairs_loss(loss, trace.phi.view(), classes, m.radius(), beta)?;
    Ok((risk, m.backward_features(&trace, dphi.view())?))
}

/// Pair risk and hidden-layer gradients for pairs of rows of `x`.
pub fn pair_risk_and_grad(
    m: &TwoPartClassifier,
    x: ArrayView2<f64>,
    index: &[(usize, usize)],
    labels: &[SufficientLabel],
    loss: PairLoss,
    beta: f64,
) -> Result<(f64, Vec<crate::model::LayerGrad>)> {
    let trace = m.forward_traced(x)?;
    let (risk, dphi) = pair_rows_loss(loss, trace.phi.view(), index, labels, m.radius(), beta)?;
    Ok((risk, m.backward_features(&trace, dphi.view())?))
}

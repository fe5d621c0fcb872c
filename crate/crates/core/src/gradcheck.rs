//! Finite-difference checks of the analytic gradients.

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::data::SufficientLabel;
use crate::error::Result;
use crate::losses::{head_batch_loss, pair_batch_loss, pair_risk_and_grad, HeadLoss, PairLoss};
use crate::model::{flatten_hidden, Activation, HeadKind, ModelSpec, TwoPartClassifier};
use crate::rng;

/// Relative-error denominator floor.
pub const ERROR_FLOOR: f64 = 1e-6;
/// Instances with a ReLU pre-activation closer than this to zero are redrawn.
pub const KINK_MARGIN: f64 = 1e-3;

pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, ERROR_FLOOR)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(ERROR_FLOOR)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradTarget {
    Pair(PairLoss),
    Head(HeadLoss, HeadKind),
}

struct Instance {
    model: TwoPartClassifier,
    x: Array2<f64>,
    labels: Vec<SufficientLabel>,
    classes: Vec<usize>,
}

fn near_kink(m: &TwoPartClassifier, x: &Array2<f64>) -> Result<bool> {
    let trace = m.forward_traced(x.view())?;
    Ok(m.hidden
        .layers()
        .iter()
        .zip(trace.hidden.pre_activations())
        .any(|(l, z)| l.activation == Activation::Relu && z.iter().any(|v| v.abs() < KINK_MARGIN)))
}

fn draw(target: GradTarget, seed: u64, attempt: u64) -> Result<Instance> {
    let mut g = rng::stream(seed, rng::TRIAL, attempt);
    let r = g.random_range(0.5..2.0);
    let mut spec = ModelSpec::mlp(4, vec![6], 3);
    spec.radius = r;
    let (head, classes) = match target {
        GradTarget::Head(_, HeadKind::Binary) | GradTarget::Pair(_) => (HeadKind::Binary, 2),
        GradTarget::Head(_, HeadKind::Multiclass) => (HeadKind::Multiclass, 3),
    };
    let mut model = spec.build(classes, head, g.random())?;
    let mut p = model.params_flat();
    for v in &mut p {
        *v += 0.3 * g.sample::<f64, _>(StandardNormal);
    }
    model.set_params_flat(&p)?;
    let rows = 8;
    let x = Array2::from_shape_fn((rows, 4), |_| g.sample(StandardNormal));
    let mut labels: Vec<SufficientLabel> = (0..rows / 2)
        .map(|_| if g.random_bool(0.5) { SufficientLabel::Same } else { SufficientLabel::Different })
        .collect();
    labels[0] = SufficientLabel::Same;
    labels[1] = SufficientLabel::Different;
    let classes = (0..rows).map(|_| g.random_range(0..classes)).collect();
    Ok(Instance { model, x, labels, classes })
}

/// Relative error between the analytic and numerical gradient on one random
/// instance. Pair losses are checked against the hidden parameters, head
/// losses against every parameter.
pub fn check_instance(target: GradTarget, seed: u64) -> Result<f64> {
    let mut attempt = 0;
    let inst = loop {
        let inst = draw(target, seed, attempt)?;
        if !near_kink(&inst.model, &inst.x)? {
            break inst;
        }
        attempt += 1;
    };
    let h = 1e-6;
    let beta = -inst.model.radius().powi(2);
    match target {
        GradTarget::Pair(loss) => {
            let n = inst.labels.len();
            let index: Vec<_> = (0..n).map(|i| (i, n + i)).collect();
            let (_, grads) = pair_risk_and_grad(&inst.model, inst.x.view(), &index, &inst.labels, loss, beta)?;
            let analytic = flatten_hidden(&grads);
            let hidden_len = analytic.len();
            let full = inst.model.params_flat();
            let f = |hp: &[f64]| {
                let mut m = inst.model.clone();
                let mut q = full.clone();
                q[..hidden_len].copy_from_slice(hp);
                m.set_params_flat(&q).unwrap();
                let phi = m.features_batch(inst.x.view()).unwrap();
                let (a, b) = phi.view().split_at(ndarray::Axis(0), n);
                pair_batch_loss(loss, a, b, &inst.labels, m.radius(), beta).unwrap().0
            };
            let numeric = central_difference(f, &full[..hidden_len], h);
            Ok(relative_error(&analytic, &numeric))
        }
        GradTarget::Head(loss, _) => {
            let trace = inst.model.forward_traced(inst.x.view())?;
            let (_, ds) = head_batch_loss(loss, trace.scores.view(), &inst.classes)?;
            let analytic = inst.model.backward(&trace, ds.view())?.flatten();
            let f = |p: &[f64]| {
                let mut m = inst.model.clone();
                m.set_params_flat(p).unwrap();
                let s = m.scores_batch(inst.x.view()).unwrap();
                head_batch_loss(loss, s.view(), &inst.classes).unwrap().0
            };
            let numeric = central_difference(f, &inst.model.params_flat(), h);
            Ok(relative_error(&analytic, &numeric))
        }
    }
}

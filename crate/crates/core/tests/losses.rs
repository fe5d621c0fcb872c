use ndarray::{array, Array2};
use rand::Rng;
use suflab::losses::*;
use suflab::model::{Activation, DenseLayer, HiddenNetwork, LinearHead};
use suflab::{
    rng, Example, FeatureMap, FullyLabeledDataset, HeadKind, HeadLoss, PairLoss, SufficientLabel, TwoPartClassifier,
};

const SAME: SufficientLabel = SufficientLabel::Same;
const DIFF: SufficientLabel = SufficientLabel::Different;

/// Neumaier-compensated sum.
fn ksum(v: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in v {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

fn unit_rows(n: usize, d: usize, r: f64, g: &mut rng::Rng) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((n, d), |_| g.random_range(-1.0..1.0));
    for mut row in m.rows_mut() {
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row.mapv_inplace(|v| r * v / norm);
    }
    m
}

#[test]
fn cross_entropy_matches_unshifted_evaluation() {
    let mut g = rng::stream(1, "test", 0);
    for _ in 0..200 {
        let c = g.random_range(2..12);
        let s: Vec<f64> = (0..c).map(|_| g.random_range(-6.0..6.0)).collect();
        let y = g.random_range(0..c);
        let oracle = ksum(s.iter().map(|v| v.exp())).ln() - s[y];
        assert!((cross_entropy(&s, y) - oracle).abs() < 1e-12);
    }
    assert!((cross_entropy(&[0.0; 10], 3) - 10f64.ln()).abs() < 1e-12);
    assert!(cross_entropy(&[1000.0, 0.0], 0).abs() < 1e-12);
}

#[test]
fn sqdist_examples_and_symmetry() {
    assert_eq!(pair_loss_sqdist(&[1.0, 0.0], &[0.0, 1.0], SAME), 2.0);
    assert_eq!(pair_loss_sqdist(&[1.0, 0.0], &[0.0, 1.0], DIFF), -2.0);
    assert_eq!(pair_loss_sqdist(&[0.6, 0.8], &[0.6, 0.8], SAME), 0.0);
    let mut g = rng::stream(2, "test", 0);
    let r = 1.7;
    let m = unit_rows(100, 5, r, &mut g);
    for i in 0..50 {
        let (u, v) = (m.row(2 * i).to_vec(), m.row(2 * i + 1).to_vec());
        let same = pair_loss_sqdist(&u, &v, SAME);
        assert_eq!(same, pair_loss_sqdist(&v, &u, SAME));
        assert!((0.0..=4.0 * r * r + 1e-12).contains(&same));
        assert!((-4.0 * r * r - 1e-12..=0.0).contains(&pair_loss_sqdist(&u, &v, DIFF)));
    }
}

#[test]
fn ncs_matches_direct_cosine() {
    let mut g = rng::stream(3, "test", 0);
    for _ in 0..50 {
        let n = g.random_range(2..40);
        let r = g.random_range(0.5..2.0);
        let labels: Vec<_> = (0..n).map(|_| if g.random_bool(0.4) { SAME } else { DIFF }).collect();
        let k: Vec<f64> = (0..n).map(|_| g.random_range(-r * r..r * r)).collect();
        let target: Vec<f64> = labels.iter().map(|t| if t.is_same() { r * r } else { -r * r }).collect();
        let dot = ksum(k.iter().zip(&target).map(|(a, b)| a * b));
        let cos = dot / (ksum(k.iter().map(|a| a * a)).sqrt() * ksum(target.iter().map(|a| a * a)).sqrt());
        let ctx = PairBatchContext::new(k, &labels, r, -r * r).unwrap();
        let risk = ncs_risk(&ctx).unwrap();
        assert!((risk + cos).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&risk));
        let mean = ksum((0..n).map(|i| pair_loss_ncs(&ctx, i).unwrap())) / n as f64;
        assert!((mean - risk).abs() < 1e-12);
    }
    let ctx = PairBatchContext::new(vec![1.0, -1.0], &[SAME, DIFF], 1.0, -1.0).unwrap();
    assert!((ncs_risk(&ctx).unwrap() + 1.0).abs() < 1e-15);
    let ctx = PairBatchContext::new(vec![1.0, 1.0], &[SAME, DIFF], 1.0, -1.0).unwrap();
    assert!(ncs_risk(&ctx).unwrap().abs() < 1e-15);
    let ctx = PairBatchContext::new(vec![0.0, 0.0], &[SAME, DIFF], 1.0, -1.0).unwrap();
    assert!(matches!(ncs_risk(&ctx), Err(suflab::Error::DegenerateKernelBatch)));
}

#[test]
fn contrastive_matches_direct_ratio() {
    let mut g = rng::stream(4, "test", 0);
    for _ in 0..50 {
        let n = g.random_range(2..30);
        let mut labels: Vec<_> = (0..n).map(|_| if g.random_bool(0.3) { SAME } else { DIFF }).collect();
        labels[0] = SAME;
        let k: Vec<f64> = (0..n).map(|_| g.random_range(-4.0..4.0)).collect();
        let pos = ksum(k.iter().zip(&labels).filter(|(_, t)| t.is_same()).map(|(v, _)| v.exp()));
        let all = ksum(k.iter().map(|v| v.exp()));
        let ctx = PairBatchContext::new(k, &labels, 2.0, -4.0).unwrap();
        let got = pair_loss_contrastive(&ctx, &labels).unwrap();
        assert!((got + (pos / all).ln()).abs() < 1e-12);
    }
    let ctx = PairBatchContext::new(vec![0.3; 5], &[SAME, SAME, DIFF, DIFF, DIFF], 1.0, -1.0).unwrap();
    assert!((pair_loss_contrastive(&ctx, &[SAME, SAME, DIFF, DIFF, DIFF]).unwrap() + (0.4f64).ln()).abs() < 1e-14);
    let ctx = PairBatchContext::new(vec![0.3, -0.1], &[SAME, SAME], 1.0, -1.0).unwrap();
    assert!(pair_loss_contrastive(&ctx, &[SAME, SAME]).unwrap().abs() < 1e-15);
    let ctx = PairBatchContext::new(vec![0.3], &[DIFF], 1.0, -1.0).unwrap();
    assert!(matches!(pair_loss_contrastive(&ctx, &[DIFF]), Err(suflab::Error::ContrastiveUndefined)));
}

#[test]
fn mse_examples() {
    let ctx = PairBatchContext::new(vec![0.5, 0.0, -1.0], &[SAME, SAME, SAME], 1.0, -1.0).unwrap();
    assert_eq!(pair_loss_mse(&ctx, 1), 1.0);
    assert_eq!(pair_loss_mse(&ctx, 2), 4.0);
    let ctx = PairBatchContext::new(vec![1.0], &[SAME], 1.0, -1.0).unwrap();
    assert_eq!(pair_loss_mse(&ctx, 0), 0.0);
}

/// Identity hidden map on R², binary head `w`, radius 1.
fn planar(w: [f64; 2]) -> TwoPartClassifier {
    let layer = DenseLayer::new(Array2::eye(2), ndarray::Array1::zeros(2), Activation::Identity).unwrap();
    TwoPartClassifier::new(
        HiddenNetwork::new(vec![layer]).unwrap(),
        FeatureMap::new(1.0).unwrap(),
        LinearHead::Binary { w: array![w[0], w[1]] },
        2,
    )
    .unwrap()
}

fn dataset(points: &[([f64; 2], usize)]) -> FullyLabeledDataset {
    let ex = points.iter().enumerate().map(|(i, (x, y))| Example { id: i as u64, x: x.to_vec(), y: *y }).collect();
    FullyLabeledDataset::new(ex, 2, 2).unwrap()
}

#[test]
fn full_risk_matches_naive_sum() {
    // x = (1, 0) normalizes to itself; ŷ = 0.3, y = +1
    let m = planar([0.3, 0.0]);
    let one = dataset(&[([1.0, 0.0], 1)]);
    assert!((empirical_risk_full(&m, &one, HeadLoss::Hinge).unwrap() + 0.3).abs() < 1e-15);

    let mut g = rng::stream(5, "test", 0);
    let w = [0.6, -0.5];
    let m = planar(w);
    let pts: Vec<([f64; 2], usize)> =
        (0..97).map(|_| ([g.random_range(-3.0..3.0), g.random_range(-3.0..3.0)], g.random_range(0..2))).collect();
    let naive = ksum(pts.iter().map(|(x, y)| {
        let n = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let score = (w[0] * x[0] + w[1] * x[1]) / n;
        let sign = if *y == 1 { 1.0 } else { -1.0 };
        -sign * score
    })) / pts.len() as f64;
    let ds = dataset(&pts);
    assert!((empirical_risk_full(&m, &ds, HeadLoss::Hinge).unwrap() - naive).abs() < 1e-12);
    let doubled: Vec<_> = pts.iter().chain(&pts).copied().collect();
    let dd = dataset(&doubled);
    assert!((empirical_risk_full(&m, &dd, HeadLoss::Hinge).unwrap() - naive).abs() < 1e-12);
    assert!(empirical_risk_full(&m, &dataset(&[]), HeadLoss::Hinge).is_err());
}

#[test]
fn pair_risk_on_collapsed_representation() {
    // class 0 sits at (1, 0), class 1 at (-1, 0)
    let pts = [([2.0, 0.0], 0), ([0.5, 0.0], 0), ([-1.0, 0.0], 1), ([-3.0, 0.0], 1), ([4.0, 0.0], 0)];
    let ds = dataset(&pts);
    let pairs = suflab::pair_exhaustive(&ds).unwrap();
    let diff = pairs.labels().iter().filter(|t| !t.is_same()).count() as f64 / pairs.len() as f64;
    let risk = empirical_risk_pairs(&planar([0.0, 0.0]), &pairs, Some(&ds), PairLoss::Sqdist, -1.0).unwrap();
    assert!((risk + 4.0 * diff).abs() < 1e-12);
}

#[test]
fn one_step_decreases_pair_risk() {
    let mut spec = suflab::ModelSpec::mlp(3, vec![5], 4);
    spec.feature_activation = Activation::Identity;
    for loss in [PairLoss::Sqdist, PairLoss::Ncs, PairLoss::Contrastive, PairLoss::Mse] {
        let mut m = spec.build(2, HeadKind::Binary, 11).unwrap();
        let mut g = rng::stream(6, "test", 0);
        let x = Array2::from_shape_fn((12, 3), |_| g.random_range(-1.0..1.0));
        let index: Vec<_> = (0..6).map(|i| (i, 6 + i)).collect();
        let labels = [SAME, DIFF, SAME, DIFF, DIFF, SAME];
        let (before, grads) = pair_risk_and_grad(&m, x.view(), &index, &labels, loss, -1.0).unwrap();
        m.hidden.apply_update(&grads, 1e-3);
        let (after, _) = pair_risk_and_grad(&m, x.view(), &index, &labels, loss, -1.0).unwrap();
        assert!(after < before, "{loss}: {before} -> {after}");
    }
}

#[test]
fn kernel_range_on_sphere() {
    let mut g = rng::stream(7, "test", 0);
    let r = 1.3;
    let m = unit_rows(200, 6, r, &mut g);
    for i in 0..100 {
        let k = kernel(&m.row(2 * i).to_vec(), &m.row(2 * i + 1).to_vec());
        assert!(k.abs() <= r * r * (1.0 + 1e-12));
    }
}

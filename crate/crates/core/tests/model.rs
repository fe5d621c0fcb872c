use ndarray::{array, Array1, Array2};
use rand::Rng;
use suflab::model::{phi_normalize, predict_from_scores, project_head, Activation, DenseLayer, HiddenNetwork};
use suflab::{rng, FeatureMap, HeadKind, LinearHead, ModelSpec, NormMode, TwoPartClassifier};

/// Layer-by-layer evaluation with explicit loops.
fn hand_forward(m: &TwoPartClassifier, x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    for l in m.hidden.layers() {
        let mut out = vec![0.0; l.out_dim()];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = l.bias[i];
            for (j, xj) in v.iter().enumerate() {
                s += l.weight[[i, j]] * xj;
            }
            *o = if l.activation == Activation::Relu { s.max(0.0) } else { s };
        }
        v = out;
    }
    v
}

#[test]
fn forward_matches_hand_evaluation() {
    let mut spec = ModelSpec::mlp(5, vec![7, 6], 4);
    spec.feature_activation = Activation::Relu;
    let mut g = rng::stream(0, "test", 0);
    for seed in 0..20 {
        let m = spec.build(3, HeadKind::Multiclass, seed).unwrap();
        let x: Vec<f64> = (0..5).map(|_| g.random_range(-2.0..2.0)).collect();
        let got = m.forward_hidden(&x).unwrap();
        let want = hand_forward(&m, &x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn small_forward_examples() {
    let relu = DenseLayer::new(array![[1.0, 0.0], [0.0, -1.0]], Array1::zeros(2), Activation::Relu).unwrap();
    let net = HiddenNetwork::new(vec![relu]).unwrap();
    assert_eq!(net.forward_batch(array![[1.0, 2.0]].view()).unwrap(), array![[1.0, 0.0]]);
    let id = DenseLayer::new(Array2::eye(2), Array1::zeros(2), Activation::Identity).unwrap();
    let m = TwoPartClassifier::new(
        HiddenNetwork::new(vec![id]).unwrap(),
        FeatureMap::new(1.0).unwrap(),
        LinearHead::Binary { w: array![1.0, 0.0] },
        2,
    )
    .unwrap();
    assert_eq!(m.forward_hidden(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    assert!((m.forward_full(&[3.0, 4.0]).unwrap()[0] - 0.6).abs() < 1e-15);
    assert!(m.forward_hidden(&[1.0]).is_err());
}

#[test]
fn normalization_lands_on_sphere() {
    let mut g = rng::stream(1, "test", 0);
    for _ in 0..1000 {
        let r = g.random_range(0.1..10.0);
        let f = FeatureMap::new(r).unwrap();
        let scale = 10f64.powi(g.random_range(-6..6));
        let v: Vec<f64> = (0..8).map(|_| scale * g.random_range(-1.0..1.0)).collect();
        let u = phi_normalize(&f, &v, NormMode::Strict).unwrap();
        let n = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((n - r).abs() <= 1e-9 * r);
        // direction preserved
        let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!(dot > 0.0);
    }
    let f = FeatureMap::new(2.0).unwrap();
    assert_eq!(phi_normalize(&f, &[0.0, 5.0], NormMode::Strict).unwrap(), vec![0.0, 2.0]);
    assert!(phi_normalize(&f, &[0.0, 0.0], NormMode::Strict).is_err());
    assert!(phi_normalize(&f, &[0.0, 0.0], NormMode::Training).unwrap().iter().all(|v| v.is_finite()));
}

#[test]
fn constrained_binary_scores_are_bounded() {
    let mut g = rng::stream(2, "test", 0);
    let mut spec = ModelSpec::mlp(3, vec![8], 5);
    spec.radius = 2.5;
    let mut m = spec.build(2, HeadKind::Binary, 4).unwrap();
    if let LinearHead::Binary { w } = &mut m.head {
        w.mapv_inplace(|v| 40.0 * v);
    }
    let m = m.projected();
    for _ in 0..1000 {
        let x: Vec<f64> = (0..3).map(|_| g.random_range(-50.0..50.0)).collect();
        assert!(m.forward_full(&x).unwrap()[0].abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn projection_examples() {
    let h = LinearHead::Binary { w: array![2.0, 0.0] };
    assert_eq!(project_head(&h, 1.0), LinearHead::Binary { w: array![1.0, 0.0] });
    let h = LinearHead::Binary { w: array![0.5, 0.0] };
    assert_eq!(project_head(&h, 1.0), h);
    let h = LinearHead::Multiclass { w: array![[3.0, 4.0], [0.1, 0.0]], b: array![1.0, -1.0] };
    let once = project_head(&h, 2.0);
    assert!(once.max_weight_norm() <= 0.5 + 1e-15);
    assert_eq!(project_head(&once, 2.0), once);
}

#[test]
fn argmax_rules() {
    assert_eq!(predict_from_scores(array![0.1, 0.9, 0.3].view()), 1);
    assert_eq!(predict_from_scores(array![0.5, 0.5].view()), 0);
    let mut g = rng::stream(3, "test", 0);
    for _ in 0..200 {
        let s = Array1::from_shape_fn(6, |_| g.random_range(-1.0..1.0));
        let k = g.random_range(0.01..100.0);
        let c = g.random_range(-5.0..5.0);
        let base = predict_from_scores(s.view());
        assert_eq!(predict_from_scores((&s * k).view()), base);
        assert_eq!(predict_from_scores((&s + c).view()), base);
    }
}

#[test]
fn zero_head_and_zero_adjoint() {
    let spec = ModelSpec::mlp(3, vec![4], 3);
    let mut m = spec.build(3, HeadKind::Multiclass, 0).unwrap();
    m.head = LinearHead::zeros(HeadKind::Multiclass, 3, 3);
    let x = array![[0.3, -1.0, 2.0], [1.0, 1.0, 1.0]];
    assert!(m.scores_batch(x.view()).unwrap().iter().all(|v| *v == 0.0));
    let m = spec.build(3, HeadKind::Multiclass, 0).unwrap();
    let trace = m.forward_traced(x.view()).unwrap();
    let g = m.backward(&trace, Array2::zeros((2, 3)).view()).unwrap();
    assert!(g.flatten().iter().all(|v| *v == 0.0));
}

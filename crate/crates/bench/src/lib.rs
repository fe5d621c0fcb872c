//! Fixtures shared by the benchmarks.

use suflab::io::{generate_synthetic, SyntheticKind};
use suflab::{rng, FullyLabeledDataset, HeadKind, ModelSpec, TwoPartClassifier};

use rand::Rng;

/// Two-blob pool with `n_per_class` examples per class.
pub fn blobs(n_per_class: usize) -> FullyLabeledDataset {
    generate_synthetic(SyntheticKind::Blobs, n_per_class, 0.6, 0).expect("valid blobs")
}

/// A batch of `n` points on the radius-`r` sphere in `d` dimensions and
/// their classes (`c` of them, round-robin).
pub fn sphere_batch(n: usize, d: usize, c: usize, r: f64) -> (ndarray::Array2<f64>, Vec<usize>) {
    let mut g = rng::stream(0, "bench", 0);
    let mut phi = ndarray::Array2::from_shape_fn((n, d), |_| g.random_range(-1.0..1.0));
    for mut row in phi.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row.mapv_inplace(|v| r * v / norm);
    }
    (phi, (0..n).map(|i| i % c).collect())
}

/// The MNIST-sized network: 784 → 256 → 128, ten classes.
pub fn mnist_model() -> TwoPartClassifier {
    let mut spec = ModelSpec::mlp(784, vec![256], 128);
    spec.radius = 4.0;
    spec.build(10, HeadKind::Multiclass, 0).expect("valid spec")
}

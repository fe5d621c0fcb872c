use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use suflab::losses::{all_pairs_loss, pair_rows_loss};
use suflab::pairing::within_batch_index_pairs;
use suflab::theory::{check_problem, GeneratorOptions};
use suflab::{pair_sampled, PairLoss, PairingConfig};
use suflab_bench::{blobs, mnist_model, sphere_batch};

fn batch_pair_loss(c: &mut Criterion) {
    let mut group = c.benchmark_group("pair_loss_batch_64");
    let (phi, classes) = sphere_batch(64, 128, 10, 4.0);
    let (index, labels) = within_batch_index_pairs(&classes);
    for loss in [PairLoss::Sqdist, PairLoss::Ncs] {
        group.bench_with_input(BenchmarkId::new("gram", loss), &loss, |b, &loss| {
            b.iter(|| all_pairs_loss(loss, black_box(phi.view()), &classes, 4.0, 0.0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gathered", loss), &loss, |b, &loss| {
            b.iter(|| pair_rows_loss(loss, black_box(phi.view()), &index, &labels, 4.0, 0.0).unwrap())
        });
    }
    group.finish();
}

fn forward(c: &mut Criterion) {
    let m = mnist_model();
    let x = ndarray::Array2::from_elem((64, 784), 0.3);
    c.bench_function("features_batch_mnist_64", |b| b.iter(|| m.features_batch(black_box(x.view())).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let pool = blobs(500);
    c.bench_function("pair_sampled_5000", |b| {
        b.iter(|| pair_sampled(&pool, &PairingConfig::sampled(5000, 1)).unwrap())
    });
}

fn theory(c: &mut Criterion) {
    let opts = GeneratorOptions::default();
    c.bench_function("check_problem", |b| b.iter(|| check_problem(black_box(3), &opts).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = batch_pair_loss, forward, sampling, theory
}
criterion_main!(benches);

use proptest::prelude::*;
use suflab::eval::{mean_std, stratified_subset, sweep_run};
use suflab::io::pairfile::{decode_pairs, encode_pairs};
use suflab::io::{generate_synthetic, load_sweep_csv, save_sweep_csv, SyntheticKind};
use suflab::{
    accuracy, pair_sampled, rng, run_sweep, sufficient_label, train_two_stage, Example, FullyLabeledDataset, HeadKind,
    LinearHead, ModelSpec, PairDataset, PairingConfig, SufficientLabel, SufficientPair, SweepSpec, TrainConfig,
    TwoPartClassifier,
};

fn blobs() -> (FullyLabeledDataset, FullyLabeledDataset) {
    (
        generate_synthetic(SyntheticKind::Blobs, 300, 0.6, 0).unwrap(),
        generate_synthetic(SyntheticKind::Blobs, 200, 0.6, 1).unwrap(),
    )
}

fn spec() -> SweepSpec {
    SweepSpec {
        n1: vec![500],
        n2: vec![2, 10],
        reps: 3,
        seed: 4,
        model: ModelSpec::mlp(2, vec![8], 4),
        head: HeadKind::Binary,
        train: TrainConfig::default(),
        timing: false,
        class_batch: None,
    }
}

#[test]
fn accuracy_matches_a_loop() {
    let (pool, test) = blobs();
    let m = ModelSpec::mlp(2, vec![8], 4).build(2, HeadKind::Binary, 3).unwrap();
    let hits = test.examples().iter().filter(|e| m.predict(&e.x).unwrap() == e.y).count();
    assert_eq!(accuracy(&m, &test).unwrap(), hits as f64 / test.len() as f64);

    // a zero head scores 0 everywhere, which the binary rule maps to one class
    let mut constant = m.clone();
    constant.head = LinearHead::zeros(HeadKind::Binary, 4, 2);
    assert_eq!(accuracy(&constant, &pool).unwrap(), 0.5);
    assert!(accuracy(&m, &pool.subset(&[])).is_err());
    let three = FullyLabeledDataset::new(vec![Example { id: 0, x: vec![0.0, 0.0], y: 2 }], 3, 2).unwrap();
    assert!(accuracy(&m, &three).is_err());
}

#[test]
fn one_cell_sweep_is_a_plain_run() {
    let (pool, test) = blobs();
    let s = SweepSpec { n2: vec![2], reps: 1, ..spec() };
    let res = run_sweep(&s, &pool, &test).unwrap();
    assert_eq!(res.rows.len(), 1);
    let (pair_seed, label_seed, train_seed) = suflab::eval::sweep_seeds(s.seed, 500, 2, 0);
    let pairs = pair_sampled(&pool, &PairingConfig::sampled(500, pair_seed)).unwrap();
    let small = stratified_subset(&pool, 2, &mut rng::stream(label_seed, rng::LABELS, 0)).unwrap();
    let mut m: TwoPartClassifier = s.model.build(2, s.head, train_seed).unwrap();
    train_two_stage(&mut m, &small, &pairs, Some(&pool), &TrainConfig { seed: train_seed, ..s.train.clone() }).unwrap();
    assert_eq!(res.rows[0].accuracy, accuracy(&m, &test).unwrap());
    assert_eq!(res.rows[0].wall_seconds, 0.0);
}

#[test]
fn sweep_is_reproducible_and_round_trips() {
    let (pool, test) = blobs();
    let a = run_sweep(&spec(), &pool, &test).unwrap();
    let b = run_sweep(&spec(), &pool, &test).unwrap();
    assert_eq!(a, b);
    let cells = a.cells();
    assert_eq!(cells.len(), 2);
    for c in &cells {
        let acc: Vec<f64> = a.rows.iter().filter(|r| r.n2 == c.n2).map(|r| r.accuracy).collect();
        let (m, s) = mean_std(&acc);
        assert_eq!((c.mean, c.std, c.reps), (m, s, 3));
    }
    // a single run reproduces its row
    let row = &a.rows[4];
    assert_eq!(&sweep_run(&spec(), &pool, &test, row.n1, row.n2, row.rep).unwrap(), row);

    let dir = tempfile::tempdir().unwrap();
    let (p, q) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    save_sweep_csv(&a, &p).unwrap();
    save_sweep_csv(&b, &q).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
    assert_eq!(load_sweep_csv(&p).unwrap(), a);
}

#[test]
fn mean_std_small_cases() {
    assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
    assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
    assert!(mean_std(&[]).0.is_nan());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_std_matches_two_pass(v in prop::collection::vec(-1e3f64..1e3, 2..50)) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let (m, s) = mean_std(&v);
        prop_assert!((m - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
        prop_assert!((s - var.sqrt()).abs() <= 1e-9 * (1.0 + var.sqrt()));
    }

    #[test]
    fn stratified_subset_balances_classes(c in 2usize..6, per in 3usize..20, n in 1usize..15, seed in any::<u64>()) {
        let ex = (0..c * per).map(|i| Example { id: i as u64, x: vec![0.0], y: i % c }).collect();
        let ds = FullyLabeledDataset::new(ex, c, 1).unwrap();
        let n = n.min(c * per);
        let sub = stratified_subset(&ds, n, &mut rng::stream(seed, rng::LABELS, 0)).unwrap();
        prop_assert_eq!(sub.len(), n);
        let mut counts = vec![0usize; c];
        for e in sub.examples() {
            counts[e.y] += 1;
        }
        prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sufficient_label_is_symmetric(y in 0usize..10, z in 0usize..10) {
        prop_assert_eq!(sufficient_label(y, z), sufficient_label(z, y));
        prop_assert_eq!(sufficient_label(y, z).is_same(), y == z);
        prop_assert!(sufficient_label(y, y).is_same());
    }

    #[test]
    fn pair_files_round_trip(raw in prop::collection::btree_set((0u64..500, 0u64..500), 0..100), same in any::<u64>()) {
        let pairs: Vec<SufficientPair> = raw
            .iter()
            .filter(|(a, b)| a < b)
            .enumerate()
            .map(|(k, &(a, b))| {
                let t = if (same >> (k % 64)) & 1 == 1 { SufficientLabel::Same } else { SufficientLabel::Different };
                SufficientPair::new(b, a, t).unwrap()
            })
            .collect();
        let pd = PairDataset::referenced(pairs).unwrap();
        prop_assert_eq!(decode_pairs(&encode_pairs(&pd), std::path::Path::new("mem")).unwrap(), pd);
    }
}

//! The `suflab` command line. [`cli_main`] parses arguments, runs one
//! subcommand and maps the outcome to a process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use suflab::eval::{stratified_subset, ProtocolSpec, SweepSpec};
use suflab::io::{
    generate_synthetic, load_checkpoint, load_csv, load_idx, load_pairs, save_checkpoint, save_csv, save_pairs,
    save_sweep_csv, CsvSchema, Manifest, RunConfig, SyntheticKind,
};
use suflab::theory::{check_problem, generalization_bound, GeneratorOptions};
use suflab::trainer::PairSource;
use suflab::{
    accuracy, compare_regimes, encrypt_disjoint, make_pairs, rng, run_sweep, Error, FullyLabeledDataset, PairingConfig,
    PairingMode, TrainRun, Trainer,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Absolute tolerance for the numerical cross-checks in `verify-theory`.
pub const THEORY_TOL: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(name = "suflab", version, about = "Classifiers from same/different-class pairs plus a few labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic labeled dataset as CSV.
    Generate(GenerateArgs),
    /// Turn a labeled dataset into a pair file.
    Convert(ConvertArgs),
    /// Disjoint pairs with inline features, plus an attack report.
    Encrypt(EncryptArgs),
    /// Train a model from a run configuration.
    Train(TrainArgs),
    /// Accuracy of a checkpoint on a labeled dataset.
    Eval(EvalArgs),
    /// Pair-count × label-count grid of two-stage runs.
    Sweep(RunArgs),
    /// Compare training regimes over repeated trials.
    Compare(RunArgs),
    /// Run the finite-problem oracle suite.
    VerifyTheory(VerifyArgs),
    /// Evaluate the generalization bound.
    Bound(BoundArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Labeled CSV file with columns id, x0, x1, …, label.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// IDX image file (use with --labels).
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file (use with --images).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Declared class count for CSV input; inferred when absent.
    #[arg(long)]
    class_count: Option<usize>,
}

impl DataArgs {
    fn given(&self) -> bool {
        self.csv.is_some() || self.images.is_some() || self.labels.is_some()
    }

    fn load(&self) -> Result<FullyLabeledDataset, Failure> {
        match (&self.csv, &self.images, &self.labels) {
            (Some(csv), None, None) => {
                let schema = CsvSchema { class_count: self.class_count, ..CsvSchema::default() };
                Ok(load_csv(csv, &schema)?)
            }
            (None, Some(i), Some(l)) => Ok(load_idx(i, l)?),
            _ => Err(Failure::Usage("give either --csv or both --images and --labels".into())),
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value = "blobs")]
    kind: SyntheticKind,
    #[arg(long, default_value_t = 500)]
    n_per_class: usize,
    #[arg(long, default_value_t = 0.6)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConvertMode {
    Exhaustive,
    Disjoint,
    Sampled,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    mode: ConvertMode,
    /// Pair count (disjoint and sampled modes).
    #[arg(long, default_value_t = 0)]
    n_pairs: usize,
    /// Classes per sampler batch (sampled mode).
    #[arg(long)]
    class_batch: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EncryptArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    n_pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Encrypted pair file.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the unused, still fully-labeled examples.
    #[arg(long)]
    holdout: Option<PathBuf>,
    /// Where to write the attack report (JSON); printed to stdout regardless.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TrainRegime {
    TwoStage,
    Baseline,
    Online,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "two-stage")]
    regime: TrainRegime,
    /// Train Step 1 on this pair file instead of pairing the training set.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the manifest.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Evaluate on the test split of this run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    start: u64,
    /// Let the generator add constant hypotheses.
    #[arg(long)]
    constant_maps: bool,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long)]
    t: f64,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    n2: u64,
    #[arg(long)]
    delta: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e)
        }
    }
}

type Outcome = Result<(), Failure>;

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 success, 1 usage error, 2 data error, 3 failed verification.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
        Err(Failure::Verify(m)) => {
            eprintln!("verification failed: {m}");
            EXIT_VERIFY
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Convert(a) => convert(a),
        Command::Encrypt(a) => encrypt(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::VerifyTheory(a) => verify_theory(a),
        Command::Bound(a) => bound(a),
    }
}

fn generate(a: GenerateArgs) -> Outcome {
    let ds = generate_synthetic(a.kind, a.n_per_class, a.noise, a.seed)?;
    save_csv(&ds, &a.out)?;
    println!("wrote {} examples (d = {}, c = {}) to {}", ds.len(), ds.dim(), ds.class_count(), a.out.display());
    Ok(())
}

fn convert(a: ConvertArgs) -> Outcome {
    let ds = a.data.load()?;
    let mode = match a.mode {
        ConvertMode::Exhaustive => PairingMode::Exhaustive,
        ConvertMode::Disjoint => PairingMode::Disjoint,
        ConvertMode::Sampled => PairingMode::Sampled,
    };
    let cfg = PairingConfig { mode, n_pairs: a.n_pairs, class_batch: a.class_batch, seed: a.seed };
    let pairs = make_pairs(&ds, &cfg)?;
    save_pairs(&pairs, &a.out)?;
    println!("wrote {} pairs ({:.4} same-class) to {}", pairs.len(), pairs.same_fraction(), a.out.display());
    Ok(())
}

fn encrypt(a: EncryptArgs) -> Outcome {
    let ds = a.data.load()?;
    let (pairs, holdout, report) = encrypt_disjoint(&ds, a.n_pairs, a.seed)?;
    save_pairs(&pairs, &a.out)?;
    if let Some(h) = &a.holdout {
        save_csv(&holdout, h)?;
    }
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    if let Some(r) = &a.report {
        write_text(r, &json)?;
    }
    println!("{json}");
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    let mut f = fs::File::create(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    writeln!(f, "{text}").map_err(|e| Error::Io { path: path.into(), source: e })?;
    Ok(())
}

fn read_config(path: &Path) -> Result<(RunConfig, String), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    Ok((RunConfig::load(path)?, text))
}

fn out_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = flag
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Failure::Usage("no output directory: set `output` in the config or pass --out".into()))?;
    fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    Ok(dir)
}

fn labels_per_class(cfg: &RunConfig) -> usize {
    cfg.labels.as_ref().map_or(1, |l| l.per_class)
}

fn train(a: TrainArgs) -> Outcome {
    let start = Instant::now();
    let (cfg, text) = read_config(&a.config)?;
    let dir = out_dir(a.out.clone(), &cfg)?;
    let (pool, test) = cfg.data.load()?;
    let mut tc = cfg.train_config();
    let spec = cfg.model.spec(pool.dim());
    let mut m = spec.build(pool.class_count(), cfg.model.head, cfg.seed)?;
    let small = || {
        stratified_subset(
            &pool,
            labels_per_class(&cfg) * pool.class_count(),
            &mut rng::stream(cfg.seed, rng::LABELS, 0),
        )
    };
    let run: TrainRun = match a.regime {
        TrainRegime::Baseline => Trainer::new(tc.clone())?.baseline(&mut m, &pool)?,
        TrainRegime::Online => {
            tc.online = true;
            Trainer::new(tc.clone())?.two_stage(&mut m, PairSource::Online(&pool), &small()?)?
        }
        TrainRegime::TwoStage => {
            let pairs = match &a.pairs {
                Some(p) => load_pairs(p)?,
                None => {
                    let section = cfg.pairing.as_ref().ok_or_else(|| {
                        Failure::Usage("two-stage training needs a [pairing] section or --pairs".into())
                    })?;
                    make_pairs(&pool, &section.to_config(cfg.seed))?
                }
            };
            let store = if pairs.is_inline() { None } else { Some(&pool) };
            Trainer::new(tc.clone())?.two_stage(&mut m, PairSource::Fixed { pairs: &pairs, store }, &small()?)?
        }
    };
    let ckpt = dir.join("checkpoint.json");
    save_checkpoint(&m, Some(&tc), &ckpt)?;
    let regime = a.regime.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut man = Manifest::new(&format!("train --regime {regime}"), cfg.seed, &text);
    man.trace = run.trace.clone();
    man.metrics.insert("train_accuracy".into(), accuracy(&m, &pool)?);
    if let Some(t) = &test {
        let acc = accuracy(&m, t)?;
        man.metrics.insert("test_accuracy".into(), acc);
        println!("test accuracy {acc:.4}");
    }
    man.metrics.insert("skipped_batches".into(), run.skipped_batches as f64);
    man.metrics.insert("max_pair_buffer".into(), run.max_pair_buffer as f64);
    man.add_output(&ckpt)?;
    if a.timing {
        man.wall_seconds = start.elapsed().as_secs_f64();
    }
    man.save(dir.join("manifest.json"))?;
    println!("wrote {}", ckpt.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Outcome {
    let (m, _) = load_checkpoint(&a.checkpoint)?;
    let ds = match (&a.config, a.data.given()) {
        (Some(c), false) => {
            let (cfg, _) = read_config(c)?;
            cfg.data.load()?.1.ok_or_else(|| Failure::Usage("the config has no test split".into()))?
        }
        (None, true) => a.data.load()?,
        _ => return Err(Failure::Usage("give either --config or a dataset (--csv, or --images with --labels)".into())),
    };
    println!("accuracy {:.6} on {} examples", accuracy(&m, &ds)?, ds.len());
    Ok(())
}

fn require_test(test: Option<FullyLabeledDataset>) -> Result<FullyLabeledDataset, Failure> {
    test.ok_or_else(|| Failure::Usage("this command needs a test split in the data section".into()))
}

fn sweep(a: RunArgs) -> Outcome {
    let (cfg, text) = read_config(&a.config)?;
    let section = cfg.sweep.clone().ok_or_else(|| Failure::Usage("missing [sweep] section".into()))?;
    let dir = out_dir(a.out, &cfg)?;
    let (pool, test) = cfg.data.load()?;
    let test = require_test(test)?;
    let spec = SweepSpec {
        n1: section.n1,
        n2: section.n2,
        reps: section.reps,
        seed: cfg.seed,
        model: cfg.model.spec(pool.dim()),
        head: cfg.model.head,
        train: cfg.train_config(),
        timing: section.timing,
        class_batch: cfg.pairing.as_ref().and_then(|p| p.class_batch),
    };
    let result = run_sweep(&spec, &pool, &test)?;
    let csv = dir.join("sweep.csv");
    save_sweep_csv(&result, &csv)?;
    let mut man = Manifest::new("sweep", cfg.seed, &text);
    println!("{:>8} {:>6} {:>8} {:>8}", "n1", "n2", "mean", "std");
    for c in result.cells() {
        println!("{:>8} {:>6} {:>8.4} {:>8.4}", c.n1, c.n2, c.mean, c.std);
        man.metrics.insert(format!("mean_n1_{}_n2_{}", c.n1, c.n2), c.mean);
    }
    man.add_output(&csv)?;
    man.save(dir.join("manifest.json"))?;
    println!("wrote {}", csv.display());
    Ok(())
}

fn compare(a: RunArgs) -> Outcome {
    let (cfg, text) = read_config(&a.config)?;
    let section = cfg.protocol.clone().ok_or_else(|| Failure::Usage("missing [protocol] section".into()))?;
    let dir = out_dir(a.out, &cfg)?;
    let (pool, test) = cfg.data.load()?;
    let test = require_test(test)?;
    let spec = ProtocolSpec {
        regimes: section.regimes,
        trials: section.trials,
        labels_per_class: labels_per_class(&cfg),
        seed: cfg.seed,
        model: cfg.model.spec(pool.dim()),
        head: cfg.model.head,
        train: cfg.train_config(),
        baseline_train: section.baseline_train,
    };
    let report = compare_regimes(&spec, &pool, &test)?;
    let path = dir.join("compare.json");
    write_text(&path, &serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
    let mut man = Manifest::new("compare", cfg.seed, &text);
    println!("{:>14} {:>12} {:>8} {:>8}", "regime", "full labels", "mean", "std");
    for r in &report.rows {
        println!("{:>14} {:>12} {:>8.4} {:>8.4}", r.regime.to_string(), r.full_labels, r.mean, r.std);
        man.metrics.insert(format!("mean_{}", r.regime), r.mean);
    }
    man.add_output(&path)?;
    man.save(dir.join("manifest.json"))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn verify_theory(a: VerifyArgs) -> Outcome {
    let start = Instant::now();
    let opts = GeneratorOptions { constant_maps: a.constant_maps, ..GeneratorOptions::default() };
    let mut failed = Vec::new();
    let (mut risk_gap, mut t_gap) = (0.0f64, 0.0f64);
    for seed in a.start..a.start + a.seeds {
        let check = check_problem(seed, &opts)?;
        risk_gap = risk_gap.max(check.head_risk_gap);
        t_gap = t_gap.max(check.t_gap);
        if !check.passed(THEORY_TOL) {
            println!("seed {seed}: FAIL {check:?}");
            failed.push(seed);
        }
    }
    println!(
        "{}/{} problems passed; max head-risk gap {risk_gap:.2e}; max t gap {t_gap:.2e}; {:.1} s",
        a.seeds - failed.len() as u64,
        a.seeds,
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!("{} of {} seeds failed: {failed:?}", failed.len(), a.seeds)))
    }
}

fn bound(a: BoundArgs) -> Outcome {
    let b = generalization_bound(a.t, a.r, a.n2, a.delta)?;
    println!("{b:.6}");
    Ok(())
}

//! Command-line front end: `cluster` a single file, `bench` a whole suite, `gen`
//! synthetic datasets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{cost_with_nearest, dist_pow, kmeanspp_seed, nearest_assignment, CenterSet};
use crate::coreset::{
    boosted_prone, cluster_coreset, coreset_size, lightweight_distribution, sample_coreset,
    sensitivity_distribution, SensitivityDistribution,
};
use crate::dataset::{
    gen_adversarial_gaussian, gen_gaussian_mixture, load_auto, load_dense_csv, load_sparse, Dataset,
};
use crate::error::Error;
use crate::pipeline::{prone, ProneConfig};
use crate::projection::ProjectionVariant;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "prone", version, about = "Fast k-means++ style clustering via random 1-D projection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster one dataset and print a JSON record.
    Cluster(ClusterArgs),
    /// Run a benchmark suite and write JSON-lines records plus a summary CSV.
    Bench(BenchArgs),
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Prone,
    ProneVariance,
    ProneCovariance,
    Kmeanspp,
    Boosted,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Self::Prone => "prone",
            Self::ProneVariance => "prone-variance",
            Self::ProneCovariance => "prone-covariance",
            Self::Kmeanspp => "kmeanspp",
            Self::Boosted => "boosted",
        }
    }

    fn variant(self) -> Option<ProjectionVariant> {
        match self {
            Self::Prone => Some(ProjectionVariant::Standard),
            Self::ProneVariance => Some(ProjectionVariant::Variance),
            Self::ProneCovariance => Some(ProjectionVariant::Covariance),
            _ => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// The CSV input starts with a header line.
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 2.0)]
    pub z: f64,
    #[arg(long, value_enum, default_value_t = Algo::Prone)]
    pub algo: Algo,
    /// Coreset size as a fraction of n (boosted only).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reassign every point to its nearest center (PRONE variants).
    #[arg(long)]
    pub assign_nearest: bool,
    /// Centers CSV; labels go to the same path with `.labels` appended.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Include seeding counters in the record.
    #[arg(long)]
    pub stats: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Direct,
    Coreset,
    Boosted,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// `gaussian-small`, `gaussian-medium`, `gaussian-adversarial`, or a file path.
    #[arg(long)]
    pub dataset: String,
    #[arg(long, value_delimiter = ',', default_value = "10,25,50,100")]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON-lines records; the summary goes to `<out>` with extension `summary.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (falls back to `PRONE_THREADS`, then all cores). 1 = serial.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
}

#[derive(Debug, Args)]
pub struct GenCommon {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Mirrored Gaussian pairs on the axes plus origin points (8m + 5 rows).
    GaussianAdversarial {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Unit-variance Gaussian mixture with centers uniform in `[0, separation]^d`.
    Mixture {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        per_cluster: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        d: u64,
        #[arg(long)]
        separation: f64,
        #[command(flatten)]
        common: GenCommon,
    },
}

/// One run of one algorithm on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub algorithm: String,
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub z: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub seed: u64,
    pub cost_assignment: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_nearest: Option<f64>,
    /// Phase name to milliseconds; `total` excludes evaluation-only phases.
    pub wall_time_ms: BTreeMap<String, f64>,
    pub total_updates: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsRecord>,
}

impl ExperimentRecord {
    /// Nearest-center cost when available, else the assignment cost.
    pub fn quality(&self) -> f64 {
        self.cost_nearest.unwrap_or(self.cost_assignment)
    }

    pub fn total_ms(&self) -> f64 {
        self.wall_time_ms.get("total").copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub comparisons: u64,
    pub tree_nodes_touched: u64,
    pub centers: usize,
    pub exhausted: bool,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

struct Run {
    record: ExperimentRecord,
    centers: CenterSet,
    labels: Vec<usize>,
}

struct RunSpec<'a> {
    data: &'a Dataset,
    dataset: &'a str,
    algo: Algo,
    k: usize,
    z: f64,
    alpha: Option<f64>,
    seed: u64,
    nearest: bool,
}

fn record(spec: &RunSpec<'_>, algorithm: &str) -> ExperimentRecord {
    ExperimentRecord {
        algorithm: algorithm.to_string(),
        dataset: spec.dataset.to_string(),
        n: spec.data.n(),
        d: spec.data.d(),
        k: spec.k,
        z: spec.z,
        alpha: spec.alpha,
        seed: spec.seed,
        cost_assignment: 0.0,
        cost_nearest: None,
        wall_time_ms: BTreeMap::new(),
        total_updates: 0,
        stats: None,
    }
}

fn run_algo(spec: &RunSpec<'_>) -> CliResult<Run> {
    let mut rec = record(spec, spec.algo.name());
    let data = spec.data;
    match spec.algo {
        Algo::Prone | Algo::ProneVariance | Algo::ProneCovariance => {
            let cfg = ProneConfig::new(spec.k)
                .with_z(spec.z)
                .with_seed(spec.seed)
                .with_variant(spec.algo.variant().expect("PRONE variant"));
            let r = prone(data, &cfg)?;
            let t = &r.timings;
            rec.wall_time_ms.insert("project".into(), ms(t.project));
            rec.wall_time_ms.insert("seed".into(), ms(t.seed));
            rec.wall_time_ms.insert("lift".into(), ms(t.lift));
            rec.wall_time_ms.insert("total".into(), ms(t.algorithm()));
            rec.cost_assignment = r.model.cost;
            if let Some(s) = &r.stats {
                rec.total_updates = s.total_updates;
                rec.stats = Some(StatsRecord {
                    comparisons: s.comparisons,
                    tree_nodes_touched: s.tree_nodes_touched,
                    centers: r.model.k(),
                    exhausted: r.model.exhausted,
                });
            }
            let mut labels = r.model.assignment;
            if spec.nearest {
                let t = Instant::now();
                let (near, sq) = nearest_assignment(data, &r.model.centers)?;
                rec.cost_nearest = Some(sq.iter().map(|&s| dist_pow(s, spec.z)).sum());
                rec.wall_time_ms.insert("assign".into(), ms(t.elapsed()));
                labels = near;
            }
            Ok(Run {
                record: rec,
                centers: r.model.centers,
                labels,
            })
        }
        Algo::Kmeanspp => {
            let t = Instant::now();
            let m = kmeanspp_seed(data, spec.k, spec.z, &mut rng_from_seed(spec.seed))?;
            let el = ms(t.elapsed());
            rec.wall_time_ms.insert("seed".into(), el);
            rec.wall_time_ms.insert("total".into(), el);
            rec.cost_assignment = m.cost;
            rec.cost_nearest = Some(m.cost);
            // one distance refresh per point per placed center
            rec.total_updates = (data.n() * m.k()) as u64;
            Ok(Run {
                record: rec,
                centers: m.centers,
                labels: m.assignment,
            })
        }
        Algo::Boosted => {
            let alpha = spec.alpha.ok_or_else(|| usage("--alpha is required for --algo boosted"))?;
            let r = boosted_prone(data, spec.k, spec.z, alpha, spec.seed)?;
            let t = &r.timings;
            rec.wall_time_ms.insert("prone".into(), ms(t.prone));
            rec.wall_time_ms.insert("coreset".into(), ms(t.coreset));
            rec.wall_time_ms.insert("seed".into(), ms(t.seed));
            rec.wall_time_ms.insert("total".into(), ms(t.total()));
            rec.total_updates = r.prone.stats.as_ref().map_or(0, |s| s.total_updates);
            let t = Instant::now();
            let m = r.evaluate(data)?;
            rec.wall_time_ms.insert("assign".into(), ms(t.elapsed()));
            rec.cost_assignment = m.cost;
            rec.cost_nearest = Some(m.cost);
            Ok(Run {
                record: rec,
                centers: m.centers,
                labels: m.assignment,
            })
        }
    }
}

fn check_z(z: f64) -> CliResult<()> {
    if !(z >= 1.0 && z.is_finite()) {
        return Err(usage(format!("--z must be a finite value >= 1, got {z}")));
    }
    Ok(())
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Runs `cluster` and returns the JSON record line printed to stdout.
pub fn cmd_cluster(args: &ClusterArgs) -> CliResult<String> {
    check_z(args.z)?;
    match (args.algo, args.alpha) {
        (Algo::Boosted, None) => return Err(usage("--alpha is required for --algo boosted")),
        (Algo::Boosted, Some(_)) => {}
        (_, Some(_)) => return Err(usage("--alpha only applies to --algo boosted")),
        _ => {}
    }
    let t = Instant::now();
    let data = match args.format {
        Some(Format::Csv) => load_dense_csv(&args.input, args.header)?,
        Some(Format::Sparse) => load_sparse(&args.input)?,
        None if args.header => load_dense_csv(&args.input, true)?,
        None => load_auto(&args.input)?,
    };
    let load = ms(t.elapsed());
    let k = args.k as usize;
    if k > data.n() {
        return Err(usage(format!("--k {k} exceeds the number of points {}", data.n())));
    }
    let name = dataset_name(&args.input);
    let spec = RunSpec {
        data: &data,
        dataset: &name,
        algo: args.algo,
        k,
        z: args.z,
        alpha: args.alpha,
        seed: args.seed,
        nearest: args.assign_nearest,
    };
    let mut run = run_algo(&spec)?;
    run.record.wall_time_ms.insert("load".into(), load);
    if !args.stats {
        run.record.stats = None;
    }
    if let Some(out) = &args.output {
        let centers = Dataset::from_rows(&run.centers.to_rows())?;
        centers.write_csv(out)?;
        let mut labels = String::with_capacity(run.labels.len() * 3);
        for l in &run.labels {
            writeln!(labels, "{l}").expect("write to String");
        }
        fs::write(labels_path(out), labels)?;
    }
    Ok(serde_json::to_string(&run.record)?)
}

/// `<output>.labels`.
pub fn labels_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".labels");
    PathBuf::from(s)
}

/// `<out>` with its extension replaced by `summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.csv")
}

pub const CORESET_SIZES: [f64; 7] = [0.001, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.1];
pub const BOOSTED_ALPHAS: [f64; 3] = [0.001, 0.01, 0.1];
pub const DIRECT_ALGOS: [Algo; 4] = [Algo::Prone, Algo::ProneVariance, Algo::ProneCovariance, Algo::Kmeanspp];

/// Built-in datasets, generated deterministically from the bench seed.
pub fn named_dataset(name: &str, seed: u64) -> Option<Dataset> {
    let s = derive_seed(seed, &[0xda7a]);
    let data = match name {
        "gaussian-small" => gen_gaussian_mixture(20, 500, 10, 100.0, s).ok()?.data,
        "gaussian-medium" => gen_gaussian_mixture(50, 2000, 16, 100.0, s).ok()?.data,
        "gaussian-adversarial" => gen_adversarial_gaussian(3000, s).ok()?,
        _ => return None,
    };
    Some(data)
}

fn resolve_dataset(spec: &str, seed: u64) -> CliResult<(String, Dataset)> {
    if let Some(d) = named_dataset(spec, seed) {
        return Ok((spec.to_string(), d));
    }
    let path = Path::new(spec);
    if path.is_file() {
        return Ok((dataset_name(path), load_auto(path)?));
    }
    Err(usage(format!(
        "unknown dataset '{spec}' (expected gaussian-small, gaussian-medium, gaussian-adversarial or a file)"
    )))
}

fn coreset_record(
    data: &Dataset,
    dataset: &str,
    construction: &str,
    k: usize,
    frac: f64,
    seed: u64,
) -> CliResult<ExperimentRecord> {
    let spec = RunSpec {
        data,
        dataset,
        algo: Algo::Kmeanspp,
        k,
        z: 2.0,
        alpha: Some(frac),
        seed,
        nearest: true,
    };
    let mut rec = record(&spec, construction);
    let mut rng = rng_from_seed(seed);
    let s = coreset_size(frac, data.n())?;
    let t = Instant::now();
    let dist: SensitivityDistribution = match construction {
        "kmeanspp-sensitivity" => sensitivity_distribution(data, &kmeanspp_seed(data, k, 2.0, &mut rng)?)?,
        "prone-sensitivity" => {
            let r = prone(data, &ProneConfig::new(k).with_seed(seed))?;
            rec.total_updates = r.stats.as_ref().map_or(0, |s| s.total_updates);
            sensitivity_distribution(data, &r.model)?
        }
        _ => lightweight_distribution(data),
    };
    let cs = sample_coreset(data, &dist, s, &mut rng)?;
    let t_coreset = t.elapsed();
    let t = Instant::now();
    let model = cluster_coreset(&cs, k, &mut rng)?;
    let t_cluster = t.elapsed();
    let t = Instant::now();
    let cost = cost_with_nearest(data, &model.centers, 2.0)?;
    rec.wall_time_ms.insert("coreset".into(), ms(t_coreset));
    rec.wall_time_ms.insert("seed".into(), ms(t_cluster));
    rec.wall_time_ms.insert("assign".into(), ms(t.elapsed()));
    rec.wall_time_ms.insert("total".into(), ms(t_coreset + t_cluster));
    rec.cost_assignment = cost;
    rec.cost_nearest = Some(cost);
    Ok(rec)
}

fn bench_cell(suite: Suite, data: &Dataset, dataset: &str, k: usize, seed: u64) -> CliResult<Vec<ExperimentRecord>> {
    let run = |algo: Algo, alpha: Option<f64>| -> CliResult<ExperimentRecord> {
        let spec = RunSpec {
            data,
            dataset,
            algo,
            k,
            z: 2.0,
            alpha,
            seed,
            nearest: true,
        };
        Ok(run_algo(&spec)?.record)
    };
    let mut out = Vec::new();
    match suite {
        Suite::Direct => {
            for algo in DIRECT_ALGOS {
                out.push(run(algo, None)?);
            }
        }
        Suite::Coreset => {
            out.push(run(Algo::Kmeanspp, None)?);
            for frac in CORESET_SIZES {
                if coreset_size(frac, data.n())? < k {
                    continue;
                }
                for c in ["kmeanspp-sensitivity", "prone-sensitivity", "lightweight"] {
                    out.push(coreset_record(data, dataset, c, k, frac, seed)?);
                }
            }
        }
        Suite::Boosted => {
            out.push(run(Algo::Kmeanspp, None)?);
            for alpha in BOOSTED_ALPHAS {
                if coreset_size(alpha, data.n())? < k {
                    continue;
                }
                out.push(run(Algo::Boosted, Some(alpha))?);
            }
        }
    }
    Ok(out)
}

/// Summary CSV header. `cost_ratio` is mean cost over the mean k-means++ cost at
/// the same `k`; `speedup` is mean k-means++ time over mean algorithm time.
pub const SUMMARY_HEADER: &str =
    "algorithm,k,alpha,runs,mean_cost,mean_cost_kmeanspp,cost_ratio,mean_time_ms,mean_time_kmeanspp_ms,speedup";

pub fn summarize(records: &[ExperimentRecord]) -> String {
    #[derive(Default)]
    struct Acc {
        runs: usize,
        cost: f64,
        time: f64,
    }
    // keyed by (k, alpha bits, algorithm) so rows come out in a stable order
    let mut cells: BTreeMap<(usize, u64, String), Acc> = BTreeMap::new();
    let mut order: Vec<(usize, u64, String)> = Vec::new();
    for r in records {
        let key = (r.k, r.alpha.map_or(0, f64::to_bits), r.algorithm.clone());
        let acc = cells.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Acc::default()
        });
        acc.runs += 1;
        acc.cost += r.quality();
        acc.time += r.total_ms();
    }
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for key in &order {
        let acc = &cells[key];
        let (cost, time) = (acc.cost / acc.runs as f64, acc.time / acc.runs as f64);
        let base = cells.get(&(key.0, 0, "kmeanspp".to_string()));
        let (bc, bt) = base.map_or((f64::NAN, f64::NAN), |b| (b.cost / b.runs as f64, b.time / b.runs as f64));
        let alpha = if key.1 == 0 { String::new() } else { f64::from_bits(key.1).to_string() };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            key.2,
            key.0,
            alpha,
            acc.runs,
            cost,
            bc,
            cost / bc,
            time,
            bt,
            bt / time
        )
        .expect("write to String");
    }
    out
}

fn thread_count(jobs: Option<usize>) -> CliResult<usize> {
    if let Some(j) = jobs {
        return Ok(j);
    }
    match std::env::var("PRONE_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("PRONE_THREADS must be a non-negative integer, got '{v}'"))),
        Err(_) => Ok(0),
    }
}

/// Runs a suite; returns the number of records written.
pub fn cmd_bench(args: &BenchArgs) -> CliResult<usize> {
    if args.ks.is_empty() || args.ks.contains(&0) {
        return Err(usage("--ks must list positive values"));
    }
    if args.reps == 0 {
        return Err(usage("--reps must be >= 1"));
    }
    let (name, data) = resolve_dataset(&args.dataset, args.seed)?;
    if let Some(&k) = args.ks.iter().find(|&&k| k > data.n()) {
        return Err(usage(format!("k = {k} exceeds the number of points {}", data.n())));
    }
    let cells: Vec<(usize, u64)> = args
        .ks
        .iter()
        .flat_map(|&k| (0..args.reps as u64).map(move |rep| (k, derive_seed(args.seed, &[k as u64, rep]))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(args.jobs)?)
        .build()?;
    let results: Vec<Vec<ExperimentRecord>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(k, seed)| bench_cell(args.suite, &data, &name, k, seed))
            .collect::<CliResult<_>>()
    })?;
    let records: Vec<ExperimentRecord> = results.into_iter().flatten().collect();

    let mut w = BufWriter::new(fs::File::create(&args.out)?);
    for r in &records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    fs::write(summary_path(&args.out), summarize(&records))?;
    Ok(records.len())
}

/// Writes the dataset; returns its row count.
pub fn cmd_gen(args: &GenArgs) -> CliResult<usize> {
    let (data, out) = match &args.kind {
        GenKind::GaussianAdversarial { m, common } => (gen_adversarial_gaussian(*m as usize, common.seed)?, &common.out),
        GenKind::Mixture {
            k,
            per_cluster,
            d,
            separation,
            common,
        } => {
            if !(*separation > 0.0 && separation.is_finite()) {
                return Err(usage(format!("--separation must be positive, got {separation}")));
            }
            let mx = gen_gaussian_mixture(*k as usize, *per_cluster as usize, *d as usize, *separation, common.seed)?;
            (mx.data, &common.out)
        }
    };
    data.write_csv(out)?;
    Ok(data.n())
}

/// Dispatches a parsed command; returns text for stdout.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Bench(a) => {
            let n = cmd_bench(a)?;
            Ok(format!(
                "wrote {n} records to {} and summary to {}",
                a.out.display(),
                summary_path(&a.out).display()
            ))
        }
        Command::Gen(a) => {
            let n = cmd_gen(a)?;
            let out = match &a.kind {
                GenKind::GaussianAdversarial { common, .. } | GenKind::Mixture { common, .. } => &common.out,
            };
            Ok(format!("wrote {n} rows to {}", out.display()))
        }
    }
}

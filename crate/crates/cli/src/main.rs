//! `sms`: generate data, cluster it, benchmark, sweep and verify.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 verification failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sms_core::experiment::SweepKind;
use sms_core::{Algorithm, Preset, Profile};

#[derive(Debug, Parser)]
#[command(
    name = "sms",
    version,
    about = "Mean-shift, blurring and stochastic mean-shift clustering"
)]
struct Cli {
    /// Worker threads for repetitions (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Cluster a dataset and write the partition, trace and metrics.
    Cluster(ClusterArgs),
    /// Time algorithms to convergence across sizes and fit scaling slopes.
    Bench(BenchArgs),
    /// Run the convergence-theory checks.
    Verify(VerifyArgs),
    /// Sweep a preset parameter and record metric quantiles.
    Sweep(SweepArgs),
    /// Cluster with kNN neighborhoods taken from a score matrix.
    Knn(KnnArgs),
}

/// Algorithm settings shared by the clustering commands.
#[derive(Debug, Clone, Args)]
pub struct AlgoArgs {
    /// Weight profile: epanechnikov (uniform), biweight, triweight, quadweight or polyN.
    #[arg(long, default_value = "epanechnikov")]
    pub profile: Profile,
    /// Bandwidth.
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    /// Budget in point-updates.
    #[arg(long, default_value_t = sms_core::algorithms::DEFAULT_MAX_UPDATES)]
    pub max_updates: u64,
    /// Movement below which a point counts as settled.
    #[arg(long, default_value_t = sms_core::algorithms::DEFAULT_MOVE_TOLERANCE)]
    pub tol: f64,
    /// Fraction of points that must be settled for SMS to stop.
    #[arg(long, default_value_t = sms_core::algorithms::DEFAULT_STOP_FRACTION)]
    pub stop_fraction: f64,
    /// Cluster merge radius as a fraction of h.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub merge_factor: f64,
    /// Base seed; repetition r uses seed + r.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// set1..set4, complexity:M, imbalance:R, dim:D or num-clusters:R.
    #[arg(long)]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Input CSV: coordinates, then an optional `label` column.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub input: Option<PathBuf>,
    /// Generate the data from a preset instead of reading a file.
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long, default_value = "sms")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub algo_args: AlgoArgs,
    /// Repetitions; more than one also writes experiment.json.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Points per cluster (three clusters each).
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    pub sizes: Vec<usize>,
    #[arg(long = "algo", value_delimiter = ',', default_value = "ms,bms,sms")]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Per-run wall-clock limit in seconds; slower runs are censored.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[command(flatten)]
    pub algo_args: AlgoArgs,
    /// Output directory for bench.json and bench.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_value = "set1,set2")]
    pub preset: Vec<Preset>,
    #[arg(long, default_value = "biweight")]
    pub profile: Profile,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    /// Number of seeds per preset.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report the constructed violating inputs; exits 3 when they fail.
    #[arg(long)]
    pub negative_controls: bool,
    /// Report file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub kind: SweepKind,
    /// Explicit values, e.g. 0.5,1,2.
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "range",
        required_unless_present = "range"
    )]
    pub values: Vec<f64>,
    /// Inclusive range start:end[:step].
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long = "algo", value_delimiter = ',', default_value = "ms,bms,sms")]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[command(flatten)]
    pub algo_args: AlgoArgs,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KnnArgs {
    /// Points CSV (same format as `cluster --input`).
    #[arg(long)]
    pub input: PathBuf,
    /// Score matrix: dense CSV, or the binary format for `.bin` files.
    /// Without one, scores are negative squared distances between the
    /// (possibly normalized) points, refreshed as points move.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value_t = 17)]
    pub k: usize,
    /// Spherically normalize the points to this many dimensions first;
    /// the algorithm then moves the normalized vectors.
    #[arg(long)]
    pub normalize: Option<usize>,
    /// Whitening regularizer for --normalize.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[command(flatten)]
    pub algo_args: AlgoArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Bench(a) => commands::bench(a),
        Command::Verify(a) => commands::verify(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Knn(a) => commands::knn(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

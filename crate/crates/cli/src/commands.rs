use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;
use sms_core::affinity::{knn_sms_run, spherical_normalize, PreprocessConfig, ScoreMatrix, ScoreRefresh};
use sms_core::experiment::{
    cluster_dataset, run_bench, run_experiment, run_sweep, write_bench_csv, write_sweep_csv, BenchConfig,
    ClusterOutcome, DataSource, ExperimentConfig, SweepConfig, METRICS_SCHEMA,
};
use sms_core::io::{
    create, load_dataset, write_cluster_summary, write_dataset, write_json, write_partition, write_state,
};
use sms_core::theory::{run_suite, SuiteConfig};
use sms_core::{
    extract_clusters, generate, preset, AlgoConfig, Algorithm, Bandwidth, Error, LabeledDataset, MergePolicy,
    MetricsReport, Partition, RunTrace, State, StopReason, TraceOptions,
};

use crate::{AlgoArgs, BenchArgs, ClusterArgs, KnnArgs, SweepArgs, SynthArgs, VerifyArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Verification(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Unknown { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Prefixes data errors with the file they came from.
fn at(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| match CliError::from(e) {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

impl AlgoArgs {
    fn config(&self, algorithm: Algorithm) -> CliResult<(AlgoConfig, MergePolicy)> {
        let h = Bandwidth::new(self.h).map_err(usage)?;
        let cfg = AlgoConfig::new(algorithm, self.profile, h)
            .with_max_updates(self.max_updates)
            .with_tolerance(self.tol)
            .with_stop_fraction(self.stop_fraction)
            .with_seed(self.seed);
        let merge = MergePolicy::new(self.merge_factor).map_err(usage)?;
        Ok((cfg, merge))
    }
}

pub fn synth(a: SynthArgs) -> CliResult {
    let data = generate(&preset(a.preset, a.seed)?)?;
    write_dataset(&data, create(&a.out)?)?;
    println!(
        "wrote {}: n={} d={} R={}",
        a.out.display(),
        data.len(),
        data.points.dim(),
        data.label_count()
    );
    Ok(())
}

/// Contents of `metrics.json`; free of timings so reruns are byte-identical.
#[derive(Serialize)]
struct RunReport<'a> {
    schema: &'static str,
    algorithm: Algorithm,
    profile: String,
    h: f64,
    merge_factor: f64,
    seed: u64,
    n: usize,
    d: usize,
    num_clusters: usize,
    total_updates: u64,
    stop_reason: StopReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<&'a MetricsReport>,
}

fn write_run(
    dir: &Path,
    cfg: &AlgoConfig,
    merge: MergePolicy,
    partition: &Partition,
    state: &State,
    trace: &RunTrace,
    metrics: Option<&MetricsReport>,
) -> CliResult {
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    write_partition(partition, create(&dir.join("partition.csv"))?)?;
    write_state(state, create(&dir.join("final_state.csv"))?)?;
    trace.write_jsonl(create(&dir.join("trace.jsonl"))?)?;
    let summary = sms_core::clustering::summarize(partition, state);
    write_cluster_summary(&summary, create(&dir.join("clusters.json"))?)?;
    let report = RunReport {
        schema: METRICS_SCHEMA,
        algorithm: cfg.algorithm,
        profile: cfg.profile.to_string(),
        h: cfg.h.get(),
        merge_factor: merge.factor(),
        seed: cfg.seed,
        n: state.len(),
        d: state.dim(),
        num_clusters: partition.cluster_count(),
        total_updates: trace.total_updates,
        stop_reason: trace.stop_reason,
        metrics,
    };
    write_json(&report, create(&dir.join("metrics.json"))?)?;
    Ok(())
}

fn print_metrics(m: &MetricsReport) {
    println!(
        "ACP={:.4} ALP={:.4} K={:.4} Pur(C,D)={:.4} Pur(D,C)={:.4} G={:.4}",
        m.acp, m.alp, m.k, m.pur_cd, m.pur_dc, m.g
    );
}

pub fn cluster(a: ClusterArgs) -> CliResult {
    let (cfg, merge) = a.algo_args.config(a.algo)?;
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let (data, source) = match (&a.input, a.preset) {
        (Some(path), _) => {
            let d = load_dataset(path).map_err(at(path))?;
            (d.clone(), DataSource::Dataset(d))
        }
        (None, Some(p)) => (generate(&preset(p, cfg.seed)?)?, DataSource::Preset(p)),
        (None, None) => return Err(CliError::Usage("either --input or --preset is required".into())),
    };
    let started = Instant::now();
    let ClusterOutcome {
        partition,
        final_state,
        trace,
        metrics,
        ..
    } = cluster_dataset(&data, &cfg, merge, TraceOptions::default())?;
    write_run(&a.out, &cfg, merge, &partition, &final_state, &trace, metrics.as_ref())?;
    println!(
        "{}: n={} clusters={} updates={} stop={:?} in {:.3}s",
        cfg.algorithm,
        data.len(),
        partition.cluster_count(),
        trace.total_updates,
        trace.stop_reason,
        started.elapsed().as_secs_f64()
    );
    if let Some(m) = &metrics {
        print_metrics(m);
    }
    if a.reps > 1 {
        let exp = ExperimentConfig {
            source,
            algo: cfg,
            merge,
            repetitions: a.reps,
            seed_base: a.algo_args.seed,
        };
        let summary = run_experiment(&exp)?;
        write_json(&summary, create(&a.out.join("experiment.json"))?)?;
        if let Some(m) = summary.mean {
            println!(
                "mean over {} runs: ACP={:.4} ALP={:.4} K={:.4} Pur(C,D)={:.4} Pur(D,C)={:.4} G={:.4} clusters={:.2}",
                a.reps, m.acp, m.alp, m.k, m.pur_cd, m.pur_dc, m.g, m.num_clusters
            );
        }
    }
    Ok(())
}

pub fn bench(a: BenchArgs) -> CliResult {
    let (algo, _) = a.algo_args.config(Algorithm::Sms)?;
    let cell_timeout = match a.timeout {
        Some(t) if t.is_finite() && t > 0.0 => Some(Duration::from_secs_f64(t)),
        Some(t) => return Err(CliError::Usage(format!("--timeout must be positive, got {t}"))),
        None => None,
    };
    let cfg = BenchConfig {
        sizes_per_cluster: a.sizes,
        algorithms: a.algorithms,
        algo,
        repetitions: a.reps,
        seed_base: a.algo_args.seed,
        cell_timeout,
    };
    let result = run_bench(&cfg)?;
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    write_json(&result, create(&a.out.join("bench.json"))?)?;
    write_bench_csv(&result, create(&a.out.join("bench.csv"))?)?;
    for c in &result.cells {
        if let Some(t) = c.time {
            println!(
                "{:>3} n={:<6} median={:.4}s q05={:.4}s q95={:.4}s updates={}",
                c.algorithm, c.n, t.median, t.q05, t.q95, c.median_updates
            );
        }
    }
    for f in &result.fits {
        println!(
            "{} log-log slope {:.3} (updates slope {:.3})",
            f.algorithm, f.slope, f.updates_slope
        );
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn verify(a: VerifyArgs) -> CliResult {
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let cfg = SuiteConfig {
        presets: a.preset,
        profile: a.profile,
        h: Bandwidth::new(a.h).map_err(usage)?,
        seed_base: a.seed,
        seeds: a.seeds,
        negative_controls: a.negative_controls,
        ..SuiteConfig::default()
    };
    let report = run_suite(&cfg)?;
    write_json(&report, create(&a.out)?)?;
    for c in &report.checks {
        let slack = c.worst_slack.map_or("-".to_string(), |s| format!("{s:.3e}"));
        println!(
            "{:<40} {:<28} worst_slack={slack} pass_fraction={:.2}/{:.2} trials={}",
            c.name,
            c.status.to_string(),
            c.pass_fraction,
            c.required_fraction,
            c.n_trials
        );
    }
    if !a.negative_controls {
        println!(
            "negative controls {}",
            if report.negative_controls_detected {
                "detected"
            } else {
                "NOT detected"
            }
        );
    }
    if report.all_pass {
        Ok(())
    } else {
        Err(CliError::Verification("one or more checks failed".into()))
    }
}

fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("range must be start:end[:step], got `{s}`"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    let (start, end, step) = match parts.as_slice() {
        [a, b] => (*a, *b, 1.0),
        [a, b, c] => (*a, *b, *c),
        _ => return Err(bad()),
    };
    if step.is_nan() || step <= 0.0 || end < start {
        return Err(CliError::Usage(format!("empty range `{s}`")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

pub fn sweep(a: SweepArgs) -> CliResult {
    let (algo, merge) = a.algo_args.config(Algorithm::Sms)?;
    let values = match &a.range {
        Some(r) => parse_range(r)?,
        None => a.values.clone(),
    };
    let cfg = SweepConfig {
        kind: a.kind,
        values,
        algorithms: a.algorithms,
        algo,
        merge,
        repetitions: a.reps,
        seed_base: a.algo_args.seed,
    };
    let rows = run_sweep(&cfg)?;
    write_sweep_csv(&rows, create(&a.out)?)?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

fn refresh_distances(s: &State, i: usize, scores: &mut ScoreMatrix) {
    let xi = s.point(i);
    for (j, xj) in s.points().enumerate() {
        let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
        scores.set(j, i, -d2);
        scores.set(i, j, -d2);
    }
}

pub fn knn(a: KnnArgs) -> CliResult {
    let (cfg, merge) = a.algo_args.config(Algorithm::Sms)?;
    let data: LabeledDataset = load_dataset(&a.input).map_err(at(&a.input))?;
    let points = match a.normalize {
        Some(q) => spherical_normalize(&data.points, &PreprocessConfig::new(q, a.epsilon).map_err(usage)?)?,
        None => data.points.clone(),
    };
    // Scores derived from positions are kept in step with the moving points;
    // a supplied matrix stays fixed.
    let (scores, mut refresh) = match &a.scores {
        Some(path) => (ScoreMatrix::load(path).map_err(at(path))?, None),
        None => (
            ScoreMatrix::negative_squared_distances(&points),
            Some(refresh_distances),
        ),
    };
    let refresh = refresh.as_mut().map(|f| f as &mut ScoreRefresh);
    let (state, trace) = knn_sms_run(&points, &scores, a.k, &cfg, TraceOptions::default(), refresh)?;
    let partition = extract_clusters(&state, cfg.h, merge);
    let metrics = if data.labels.is_empty() {
        None
    } else {
        Some(MetricsReport::evaluate(&partition, &data.labels)?)
    };
    write_run(&a.out, &cfg, merge, &partition, &state, &trace, metrics.as_ref())?;
    println!(
        "knn-sms: n={} k={} clusters={} updates={} stop={:?}",
        state.len(),
        a.k,
        partition.cluster_count(),
        trace.total_updates,
        trace.stop_reason
    );
    if let Some(m) = &metrics {
        print_metrics(m);
    }
    Ok(())
}

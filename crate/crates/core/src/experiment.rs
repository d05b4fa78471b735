//! Repeated clustering runs, parameter sweeps and wall-clock scaling
//! benchmarks.
//!
//! Repetition `r` uses seed `base + r` for both the generated data (when the
//! source is a preset) and the SMS index stream. Repetitions run on the rayon
//! pool and are collected in repetition order, so results do not depend on
//! the number of worker threads.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run, AlgoConfig, Algorithm, RunTrace, StopReason, TraceOptions};
use crate::clustering::{extract_clusters, summarize, ClusterSummary, MergePolicy, Partition};
use crate::error::{config, Error, Result};
use crate::metrics::MetricsReport;
use crate::rng::derive_seed;
use crate::state::State;
use crate::synthdata::{generate, preset, LabeledDataset, Preset};

pub const EXPERIMENT_SCHEMA: &str = "sms-experiment/1";
pub const BENCH_SCHEMA: &str = "sms-bench/1";
pub const METRICS_SCHEMA: &str = "sms-metrics/1";

/// Everything one clustering run produces.
#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub partition: Partition,
    /// Final SMS/BMS state, or the MS modes.
    pub final_state: State,
    pub trace: RunTrace,
    pub metrics: Option<MetricsReport>,
    pub summary: Vec<ClusterSummary>,
}

/// Runs `algo` on `data`, merges the limits into clusters and scores them
/// against the labels when present.
pub fn cluster_dataset(
    data: &LabeledDataset,
    algo: &AlgoConfig,
    merge: MergePolicy,
    opts: TraceOptions,
) -> Result<ClusterOutcome> {
    let (final_state, trace) = run(&data.points, algo, opts)?;
    let partition = extract_clusters(&final_state, algo.h, merge);
    let metrics = if data.labels.is_empty() {
        None
    } else {
        Some(MetricsReport::evaluate(&partition, &data.labels)?)
    };
    let summary = summarize(&partition, &final_state);
    Ok(ClusterOutcome {
        partition,
        final_state,
        trace,
        metrics,
        summary,
    })
}

/// Where each repetition gets its data.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// Regenerated per repetition from the repetition seed.
    Preset(Preset),
    /// Fixed data; only the algorithm seed changes.
    Dataset(LabeledDataset),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub algo: AlgoConfig,
    pub merge: MergePolicy,
    pub repetitions: usize,
    pub seed_base: u64,
}

impl ExperimentConfig {
    pub fn new(source: DataSource, algo: AlgoConfig) -> Self {
        Self {
            source,
            algo,
            merge: MergePolicy::default(),
            repetitions: 20,
            seed_base: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(config("repetitions must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub run: usize,
    pub seed: u64,
    pub n: usize,
    pub num_clusters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    pub total_updates: u64,
    pub stop_reason: StopReason,
}

/// Means over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub acp: f64,
    pub alp: f64,
    pub k: f64,
    pub pur_cd: f64,
    pub pur_dc: f64,
    pub g: f64,
    pub num_clusters: f64,
}

impl MetricMeans {
    pub fn of(reports: &[MetricsReport]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let m = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / reports.len() as f64;
        Some(Self {
            acp: m(|r| r.acp),
            alp: m(|r| r.alp),
            k: m(|r| r.k),
            pur_cd: m(|r| r.pur_cd),
            pur_dc: m(|r| r.pur_dc),
            g: m(|r| r.g),
            num_clusters: m(|r| r.num_clusters as f64),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema: String,
    pub algorithm: Algorithm,
    pub profile: String,
    pub h: f64,
    pub merge_factor: f64,
    pub seed_base: u64,
    pub repetitions: Vec<RepetitionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<MetricMeans>,
}

fn repetition(cfg: &ExperimentConfig, r: usize) -> Result<RepetitionResult> {
    let seed = derive_seed(cfg.seed_base, r as u64);
    let generated;
    let data = match &cfg.source {
        DataSource::Preset(p) => {
            generated = generate(&preset(*p, seed)?)?;
            &generated
        }
        DataSource::Dataset(d) => d,
    };
    let algo = cfg.algo.clone().with_seed(seed);
    let out = cluster_dataset(data, &algo, cfg.merge, TraceOptions::minimal())?;
    Ok(RepetitionResult {
        run: r,
        seed,
        n: data.len(),
        num_clusters: out.partition.cluster_count(),
        metrics: out.metrics,
        total_updates: out.trace.total_updates,
        stop_reason: out.trace.stop_reason,
    })
}

/// All repetitions, in parallel, reported in repetition order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let reps: Vec<RepetitionResult> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| repetition(cfg, r))
        .collect::<Result<_>>()?;
    let reports: Vec<MetricsReport> = reps.iter().filter_map(|r| r.metrics).collect();
    Ok(ExperimentSummary {
        schema: EXPERIMENT_SCHEMA.to_string(),
        algorithm: cfg.algo.algorithm,
        profile: cfg.algo.profile.to_string(),
        h: cfg.algo.h.get(),
        merge_factor: cfg.merge.factor(),
        seed_base: cfg.seed_base,
        mean: MetricMeans::of(&reports),
        repetitions: reps,
    })
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median and 5%/95% quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            median: quantile(&v, 0.5),
            q05: quantile(&v, 0.05),
            q95: quantile(&v, 0.95),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Imbalance,
    Dimension,
    NumClusters,
}

impl SweepKind {
    pub fn preset(self, value: f64) -> Result<Preset> {
        let whole = || {
            if value.fract() == 0.0 && value >= 1.0 {
                Ok(value as usize)
            } else {
                Err(config(format!(
                    "{self} sweep needs positive integer values, got {value}"
                )))
            }
        };
        Ok(match self {
            SweepKind::Imbalance => Preset::Imbalance(value),
            SweepKind::Dimension => Preset::Dim(whole()?),
            SweepKind::NumClusters => Preset::NumClusters(whole()?),
        })
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::Imbalance => "imbalance",
            SweepKind::Dimension => "dimension",
            SweepKind::NumClusters => "num_clusters",
        })
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "imbalance" => Ok(SweepKind::Imbalance),
            "dimension" | "dim" => Ok(SweepKind::Dimension),
            "num_clusters" | "clusters" => Ok(SweepKind::NumClusters),
            _ => Err(Error::Unknown {
                kind: "sweep",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    /// Algorithm, profile, bandwidth and budgets; the algorithm is overridden.
    pub algo: AlgoConfig,
    pub merge: MergePolicy,
    pub repetitions: usize,
    pub seed_base: u64,
}

/// One line of the long-format sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub metric: String,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

/// For each value and algorithm: median and 5%/95% quantiles of ACP and K.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.values.is_empty() {
        return Err(config("sweep range is empty"));
    }
    if cfg.algorithms.is_empty() {
        return Err(config("no algorithms selected"));
    }
    let mut rows = Vec::new();
    for &value in &cfg.values {
        let p = cfg.kind.preset(value)?;
        for &algorithm in &cfg.algorithms {
            let exp = ExperimentConfig {
                source: DataSource::Preset(p),
                algo: AlgoConfig {
                    algorithm,
                    ..cfg.algo.clone()
                },
                merge: cfg.merge,
                repetitions: cfg.repetitions,
                seed_base: cfg.seed_base,
            };
            let summary = run_experiment(&exp)?;
            let reports: Vec<MetricsReport> = summary.repetitions.iter().filter_map(|r| r.metrics).collect();
            for (metric, f) in [
                ("ACP", (|r: &MetricsReport| r.acp) as fn(&MetricsReport) -> f64),
                ("K", |r| r.k),
            ] {
                let values: Vec<f64> = reports.iter().map(f).collect();
                let s = Spread::of(&values).ok_or_else(|| config("sweep produced no labelled runs"))?;
                rows.push(SweepRow {
                    sweep_value: value,
                    algorithm,
                    metric: metric.to_string(),
                    median: s.median,
                    q05: s.q05,
                    q95: s.q95,
                });
            }
        }
    }
    Ok(rows)
}

/// `sweep_value,algorithm,metric,median,q05,q95`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["sweep_value", "algorithm", "metric", "median", "q05", "q95"])?;
    for r in rows {
        w.write_record([
            format!("{:?}", r.sweep_value),
            r.algorithm.to_string(),
            r.metric.clone(),
            format!("{:?}", r.median),
            format!("{:?}", r.q05),
            format!("{:?}", r.q95),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Points per cluster; three clusters per dataset.
    pub sizes_per_cluster: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub algo: AlgoConfig,
    pub repetitions: usize,
    pub seed_base: u64,
    /// Runs hitting this wall-clock limit are censored.
    pub cell_timeout: Option<Duration>,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes_per_cluster.len() < 3 {
            return Err(config(format!(
                "insufficient points for a fit: need at least 3 sizes, got {}",
                self.sizes_per_cluster.len()
            )));
        }
        if self.sizes_per_cluster.windows(2).any(|w| w[0] >= w[1]) || self.sizes_per_cluster[0] == 0 {
            return Err(config("sizes must be positive and strictly increasing"));
        }
        let span = *self.sizes_per_cluster.last().unwrap() as f64 / self.sizes_per_cluster[0] as f64;
        if span < 10.0 {
            return Err(config("sizes must span at least one decade"));
        }
        if self.repetitions == 0 {
            return Err(config("repetitions must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(config("no algorithms selected"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub algorithm: Algorithm,
    pub per_cluster: usize,
    pub n: usize,
    /// Seconds of every uncensored repetition.
    pub seconds: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<Spread>,
    pub censored: usize,
    /// Median point-updates to convergence.
    pub median_updates: f64,
    /// Median seconds per point-update.
    pub median_seconds_per_update: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub algorithm: Algorithm,
    /// Least-squares slope of `log(median time)` on `log(n)`.
    pub slope: f64,
    pub intercept: f64,
    /// Same fit for median point-updates.
    pub updates_slope: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub schema: String,
    pub cells: Vec<BenchCell>,
    pub fits: Vec<SlopeFit>,
    pub warnings: Vec<String>,
}

impl BenchResult {
    pub fn fit(&self, algorithm: Algorithm) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.algorithm == algorithm)
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, a)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Some((b, my - b * mx))
}

fn time_run(data: &State, algo: &AlgoConfig) -> Result<(f64, u64, StopReason)> {
    let started = Instant::now();
    let (_, trace) = run(data, algo, TraceOptions::minimal())?;
    Ok((started.elapsed().as_secs_f64(), trace.total_updates, trace.stop_reason))
}

/// Times each algorithm to convergence at each size. Repetitions run one at a
/// time on the calling thread; a warm-up run per cell is discarded.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for &algorithm in &cfg.algorithms {
        for &m in &cfg.sizes_per_cluster {
            let mut algo = AlgoConfig {
                algorithm,
                ..cfg.algo.clone()
            };
            algo.time_limit = cfg.cell_timeout;
            let mut seconds = Vec::new();
            let mut updates = Vec::new();
            let mut per_update = Vec::new();
            let mut censored = 0;
            let mut n = 0;
            for r in 0..=cfg.repetitions {
                let seed = derive_seed(cfg.seed_base, r.saturating_sub(1) as u64);
                let data = generate(&preset(Preset::Complexity(m), seed)?)?;
                n = data.len();
                let (secs, ups, reason) = time_run(&data.points, &algo.clone().with_seed(seed))?;
                if r == 0 {
                    continue;
                }
                if reason == StopReason::TimeLimit {
                    censored += 1;
                } else {
                    seconds.push(secs);
                    updates.push(ups as f64);
                    per_update.push(secs / ups.max(1) as f64);
                }
            }
            if censored > 0 {
                warnings.push(format!(
                    "{algorithm} at n={n}: {censored} censored run(s) excluded from the fit"
                ));
            }
            cells.push(BenchCell {
                algorithm,
                per_cluster: m,
                n,
                time: Spread::of(&seconds),
                median_updates: Spread::of(&updates).map_or(f64::NAN, |s| s.median),
                median_seconds_per_update: Spread::of(&per_update).map_or(f64::NAN, |s| s.median),
                seconds,
                censored,
            });
        }
    }
    let mut fits = Vec::new();
    for &algorithm in &cfg.algorithms {
        let usable: Vec<&BenchCell> = cells
            .iter()
            .filter(|c| c.algorithm == algorithm && c.time.is_some())
            .collect();
        let xs: Vec<f64> = usable.iter().map(|c| (c.n as f64).ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|c| c.time.unwrap().median.ln()).collect();
        let us: Vec<f64> = usable.iter().map(|c| c.median_updates.ln()).collect();
        match (least_squares(&xs, &ys), least_squares(&xs, &us)) {
            (Some((slope, intercept)), Some((updates_slope, _))) => fits.push(SlopeFit {
                algorithm,
                slope,
                intercept,
                updates_slope,
                points_used: usable.len(),
            }),
            _ => warnings.push(format!("{algorithm}: insufficient uncensored sizes for a fit")),
        }
    }
    Ok(BenchResult {
        schema: BENCH_SCHEMA.to_string(),
        cells,
        fits,
        warnings,
    })
}

/// `algorithm,per_cluster,n,median,q05,q95,censored,median_updates`.
pub fn write_bench_csv<W: Write>(result: &BenchResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "algorithm",
        "per_cluster",
        "n",
        "median",
        "q05",
        "q95",
        "censored",
        "median_updates",
    ])?;
    for c in &result.cells {
        let (med, lo, hi) = c.time.map_or((String::new(), String::new(), String::new()), |s| {
            (
                format!("{:?}", s.median),
                format!("{:?}", s.q05),
                format!("{:?}", s.q95),
            )
        });
        w.write_record([
            c.algorithm.to_string(),
            c.per_cluster.to_string(),
            c.n.to_string(),
            med,
            lo,
            hi,
            c.censored.to_string(),
            format!("{:?}", c.median_updates),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Profile;
    use crate::state::Bandwidth;
    use crate::synthdata::GmmSpec;

    fn algo(a: Algorithm) -> AlgoConfig {
        AlgoConfig::new(a, Profile::Epanechnikov, Bandwidth::new(1.0).unwrap())
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 5.0);
        assert!((quantile(&v, 0.05) - 1.2).abs() < 1e-12);
        let s = Spread::of(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.0);
        assert!(s.q05 <= s.median && s.median <= s.q95);
        assert!(Spread::of(&[]).is_none());
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs: Vec<f64> = [10.0f64, 100.0, 1000.0].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = [10.0f64, 100.0, 1000.0].iter().map(|x| (3.0 * x * x).ln()).collect();
        let (b, a) = least_squares(&xs, &ys).unwrap();
        assert!((b - 2.0).abs() < 1e-12);
        assert!((a - 3.0f64.ln()).abs() < 1e-12);
        assert!(least_squares(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn separated_gaussians_are_recovered() {
        let spec = GmmSpec {
            means: vec![vec![0.0, 0.0], vec![20.0, 20.0]],
            covariance_scale: 0.01,
            sizes: vec![30, 30],
            seed: 1,
        };
        let data = generate(&spec).unwrap();
        for a in Algorithm::ALL {
            let out = cluster_dataset(&data, &algo(a), MergePolicy::default(), TraceOptions::minimal()).unwrap();
            let m = out.metrics.unwrap();
            assert_eq!(out.partition.cluster_count(), 2, "{a}");
            for v in [m.acp, m.alp, m.k, m.pur_cd, m.pur_dc, m.g] {
                assert_eq!(v, 1.0, "{a}");
            }
        }
    }

    #[test]
    fn single_point_dataset() {
        let data = LabeledDataset {
            points: State::from_rows(&[[0.5, 0.5]]).unwrap(),
            labels: vec![],
            spec: None,
        };
        let out = cluster_dataset(
            &data,
            &algo(Algorithm::Sms),
            MergePolicy::default(),
            TraceOptions::minimal(),
        )
        .unwrap();
        assert_eq!(out.partition.cluster_count(), 1);
        assert_eq!(out.trace.stop_reason, StopReason::Converged);
        assert!(out.metrics.is_none());
    }

    #[test]
    fn repetitions_are_ordered_and_deterministic() {
        let mut cfg = ExperimentConfig::new(DataSource::Preset(Preset::Complexity(15)), algo(Algorithm::Sms));
        cfg.repetitions = 4;
        cfg.seed_base = 10;
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        let seeds: Vec<u64> = a.repetitions.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![10, 11, 12, 13]);
        assert!(a.mean.is_some());
        cfg.repetitions = 0;
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn sweep_shape() {
        let cfg = SweepConfig {
            kind: SweepKind::Dimension,
            values: vec![2.0, 3.0],
            algorithms: vec![Algorithm::Ms, Algorithm::Sms],
            algo: algo(Algorithm::Sms),
            merge: MergePolicy::default(),
            repetitions: 2,
            seed_base: 0,
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2);
        for r in &rows {
            assert!(r.q05 <= r.median && r.median <= r.q95);
        }
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sweep_value,algorithm,metric,median,q05,q95\n2.0,ms,ACP,"));
        assert!(run_sweep(&SweepConfig {
            values: vec![],
            ..cfg.clone()
        })
        .is_err());
        assert!(SweepKind::Dimension.preset(2.5).is_err());
        assert_eq!("num-clusters".parse::<SweepKind>().unwrap(), SweepKind::NumClusters);
    }

    #[test]
    fn bench_validation() {
        let cfg = BenchConfig {
            sizes_per_cluster: vec![10],
            algorithms: vec![Algorithm::Sms],
            algo: algo(Algorithm::Sms),
            repetitions: 1,
            seed_base: 0,
            cell_timeout: None,
        };
        let err = run_bench(&cfg).unwrap_err().to_string();
        assert!(err.contains("insufficient points for a fit"), "{err}");
        let narrow = BenchConfig {
            sizes_per_cluster: vec![10, 20, 30],
            ..cfg.clone()
        };
        assert!(run_bench(&narrow).is_err());
        let ok = BenchConfig {
            sizes_per_cluster: vec![2, 6, 20],
            ..cfg
        };
        let r = run_bench(&ok).unwrap();
        assert_eq!(r.cells.len(), 3);
        assert_eq!(r.cells[2].n, 60);
        assert!(r.fit(Algorithm::Sms).is_some());
    }
}

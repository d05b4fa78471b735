//! Executable convergence checks run against recorded traces.
//!
//! Each check returns a [`CheckResult`] carrying its worst signed slack: a
//! check passes when the slack is at least `-tolerance`. Statements about
//! almost-sure limits are evaluated at a finite horizon and flagged as
//! surrogates in the report. Gradient thresholds are relative to
//! `scale = max(1, |grad L(X^(0))|)`.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    sms_run, AlgoConfig, Algorithm, RunTrace, Snapshot, StepRecord, StochasticMeanShift, StopReason, TraceOptions,
};
use crate::clustering::{forbidden_band_pairs, link_components};
use crate::error::{Error, Result};
use crate::kernels::Profile;
use crate::rng::{SeededRng, CHECK_STREAM, DATA_STREAM};
use crate::state::{
    full_gradient, norm, objective_upper_bound, partial_gradient_into, squared_distance, Bandwidth, State,
};
use crate::synthdata::{generate, preset, Preset};

pub const REPORT_SCHEMA: &str = "sms-theory-report/1";

/// Absolute slack allowed per unit of gradient scale.
pub const SLACK_TOLERANCE: f64 = 1e-9;
/// Gradient threshold (relative) under which a state counts as critical.
pub const CRITICAL_THRESHOLD: f64 = 1e-10;

/// `C = 2 G(0) / h^2` and `D = n sqrt(2 |k'(0)|) / h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub c: f64,
    pub d: f64,
}

impl TheoryConstants {
    pub fn new(n: usize, h: Bandwidth, p: Profile) -> Self {
        let h = h.get();
        Self {
            c: 2.0 * p.weight(0.0) / (h * h),
            d: n as f64 * (2.0 * p.slope_at_zero().abs()).sqrt() / h,
        }
    }
}

/// `max(1, |grad L(s)|)`.
pub fn gradient_scale(s: &State, h: Bandwidth, p: Profile) -> f64 {
    full_gradient(s, h, p).norm().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The hypothesis of the statement does not hold for the input.
    AssumptionUnmet,
    /// The statement needs a continuously differentiable profile.
    SkippedProfile,
}

impl CheckStatus {
    /// Everything except an outright failure.
    pub fn is_ok(self) -> bool {
        self != CheckStatus::Fail
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::AssumptionUnmet => "assumption unmet",
            CheckStatus::SkippedProfile => "skipped: profile assumption",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub pass: bool,
    /// Smallest signed margin seen; `None` when nothing was evaluated.
    pub worst_slack: Option<f64>,
    pub tolerance: f64,
    pub violations: u64,
    /// Steps, pairs or states evaluated.
    pub evaluations: u64,
    pub n_trials: usize,
    pub pass_fraction: f64,
    pub required_fraction: f64,
    pub finite_horizon_surrogate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            status: CheckStatus::Pass,
            pass: true,
            worst_slack: None,
            tolerance,
            violations: 0,
            evaluations: 0,
            n_trials: 1,
            pass_fraction: 1.0,
            required_fraction: 1.0,
            finite_horizon_surrogate: false,
            detail: None,
        }
    }

    fn skipped(name: &str, status: CheckStatus, why: &str) -> Self {
        Self {
            detail: Some(why.to_string()),
            status,
            ..Self::new(name, 0.0)
        }
    }

    fn observe(&mut self, slack: f64) {
        self.evaluations += 1;
        if slack < -self.tolerance || slack.is_nan() {
            self.violations += 1;
        }
        self.worst_slack = Some(match self.worst_slack {
            Some(w) if slack >= w || slack.is_nan() => w,
            _ => slack,
        });
    }

    fn settle(mut self) -> Self {
        if self.violations > 0 {
            self.status = CheckStatus::Fail;
        }
        self.pass = self.status.is_ok();
        self.pass_fraction = if self.pass { 1.0 } else { 0.0 };
        self
    }

    /// Combines per-trial results of one check. Trials whose hypothesis was
    /// unmet or skipped do not count towards the pass fraction.
    pub fn aggregate(name: &str, trials: &[CheckResult], required_fraction: f64) -> CheckResult {
        let counted: Vec<&CheckResult> = trials
            .iter()
            .filter(|t| matches!(t.status, CheckStatus::Pass | CheckStatus::Fail))
            .collect();
        let mut out = CheckResult::new(name, trials.first().map_or(0.0, |t| t.tolerance));
        out.required_fraction = required_fraction;
        out.n_trials = trials.len();
        out.finite_horizon_surrogate = trials.iter().any(|t| t.finite_horizon_surrogate);
        out.violations = trials.iter().map(|t| t.violations).sum();
        out.evaluations = trials.iter().map(|t| t.evaluations).sum();
        out.worst_slack = trials
            .iter()
            .filter_map(|t| t.worst_slack)
            .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))));
        if counted.is_empty() {
            out.status = trials.first().map_or(CheckStatus::Pass, |t| t.status);
            out.detail = trials.first().and_then(|t| t.detail.clone());
            out.pass = out.status.is_ok();
            out.pass_fraction = if out.pass { 1.0 } else { 0.0 };
            return out;
        }
        let passed = counted.iter().filter(|t| t.status == CheckStatus::Pass).count();
        out.pass_fraction = passed as f64 / counted.len() as f64;
        out.pass = out.pass_fraction >= required_fraction;
        out.status = if out.pass { CheckStatus::Pass } else { CheckStatus::Fail };
        let unmet = trials.len() - counted.len();
        if unmet > 0 {
            out.detail = Some(format!("{unmet} trial(s) not evaluated: hypothesis unmet or skipped"));
        }
        out
    }
}

fn require_steps(trace: &RunTrace) -> Result<()> {
    if trace.records.len() as u64 != trace.total_updates {
        return Err(Error::Precondition("trace was recorded without step records".into()));
    }
    if trace.records.iter().any(|r| r.objective_delta.is_none()) {
        return Err(Error::Precondition(
            "trace lacks per-step objective values (record an SMS run with objective tracking)".into(),
        ));
    }
    Ok(())
}

/// Every step satisfies `L(X^(k+1)) - L(X^(k)) >= C |dx|^2`.
pub fn check_monotone_ascent(trace: &RunTrace, cfg: &AlgoConfig) -> Result<CheckResult> {
    require_steps(trace)?;
    let scale = gradient_scale(&trace.initial_state, cfg.h, cfg.profile);
    let c = TheoryConstants::new(trace.n(), cfg.h, cfg.profile).c;
    let mut out = CheckResult::new("monotone_ascent", SLACK_TOLERANCE * scale);
    for r in &trace.records {
        let delta = r.objective_delta.unwrap_or(f64::NAN);
        out.observe(delta - c * r.shift * r.shift);
    }
    Ok(out.settle())
}

/// Every step satisfies `|grad_{I_k} L(X^(k))| <= D sqrt(dL_k)`, and for
/// `eps in {0.1, 0.01} * scale` the number of steps with
/// `|grad_{I_k}| >= eps` is at most `(D / eps)^2 (n(n+1)/2 k(0) - L(X^(0)))`.
pub fn check_partial_gradient_bound(trace: &RunTrace, cfg: &AlgoConfig) -> Result<CheckResult> {
    const NAME: &str = "partial_gradient_bound";
    if !cfg.profile.is_smooth() {
        return Ok(CheckResult::skipped(
            NAME,
            CheckStatus::SkippedProfile,
            "needs a continuously differentiable profile",
        ));
    }
    require_steps(trace)?;
    if trace.positions.is_none() {
        return Err(Error::Precondition("trace lacks post-update positions".into()));
    }
    let initial_l = trace
        .initial_objective
        .ok_or_else(|| Error::Precondition("trace lacks the initial objective".into()))?;
    let (h, p) = (cfg.h, cfg.profile);
    let n = trace.n();
    let scale = gradient_scale(&trace.initial_state, h, p);
    let dconst = TheoryConstants::new(n, h, p).d;
    let mut out = CheckResult::new(NAME, SLACK_TOLERANCE * scale);

    let eps = [0.1 * scale, 0.01 * scale];
    let mut large = [0u64; 2];
    let mut state = trace.initial_state.clone();
    let mut grad = vec![0.0; state.dim()];
    let inv_h2 = h.inv_squared();
    for (r, rec) in trace.records.iter().enumerate() {
        partial_gradient_into(&state, inv_h2, p, rec.index, &mut grad);
        let g = norm(&grad);
        let delta = rec.objective_delta.unwrap_or(f64::NAN);
        out.observe(dconst * delta.max(0.0).sqrt() - g);
        for (count, e) in large.iter_mut().zip(eps) {
            if g >= e {
                *count += 1;
            }
        }
        if let Some(pos) = trace.position(r) {
            state.set_point(rec.index, pos);
        }
    }
    let headroom = objective_upper_bound(n, p) - initial_l;
    for (count, e) in large.iter().zip(eps) {
        let bound = (dconst / e).powi(2) * headroom;
        if *count as f64 > bound {
            out.violations += 1;
        }
    }
    out.detail = Some(format!(
        "steps with |grad| >= 0.1*scale: {}, >= 0.01*scale: {}",
        large[0], large[1]
    ));
    Ok(out.settle())
}

/// `max_i |grad_i L| < epsilon * scale` at the final state.
pub fn check_gradient_vanishes(trace: &RunTrace, cfg: &AlgoConfig, epsilon: f64) -> CheckResult {
    const NAME: &str = "gradient_vanishes";
    if !cfg.profile.is_smooth() {
        return CheckResult::skipped(
            NAME,
            CheckStatus::SkippedProfile,
            "needs a continuously differentiable profile",
        );
    }
    let scale = gradient_scale(&trace.initial_state, cfg.h, cfg.profile);
    let threshold = epsilon * scale;
    let mut out = CheckResult::new(NAME, 0.0);
    out.finite_horizon_surrogate = true;
    let g = full_gradient(&trace.final_state, cfg.h, cfg.profile).norm();
    // strict inequality: zero slack fails
    out.observe(if g < threshold {
        threshold - g
    } else {
        -f64::MIN_POSITIVE.max(g - threshold)
    });
    out.detail = Some(format!("final |grad| = {g:.3e}, threshold = {threshold:.3e}"));
    out.settle()
}

/// At the final snapshot no pair lies in the band `[tau, h - tau]`, and the
/// partition linking pairs closer than `tau` is the same at the last two
/// snapshots.
pub fn check_cluster_stability(trace: &RunTrace, h: Bandwidth, tau: f64) -> Result<CheckResult> {
    if !(tau > 0.0 && tau < h.get() / 2.0) {
        return Err(Error::Precondition(format!("tau must lie in (0, h/2), got {tau}")));
    }
    let [.., prev, last] = trace.snapshots.as_slice() else {
        return Err(Error::Precondition(
            "cluster stability needs at least two snapshots".into(),
        ));
    };
    let mut out = CheckResult::new("cluster_stability", 0.0);
    out.finite_horizon_surrogate = true;
    let s = &last.state;
    let (lo, hi) = (tau, h.get() - tau);
    for i in 0..s.len() {
        for j in (i + 1)..s.len() {
            let dist = squared_distance(s.point(i), s.point(j)).sqrt();
            // distance outside the band by this much
            out.observe((lo - dist).max(dist - hi));
        }
    }
    // strict band edges count as inside
    out.violations = forbidden_band_pairs(s, h, tau) as u64;
    let before = link_components(&prev.state, tau);
    let after = link_components(s, tau);
    let same = before.same_grouping(&after);
    if !same {
        out.violations += 1;
    }
    out.detail = Some(format!(
        "{} cluster(s) at k={}, partition {} since k={}",
        after.cluster_count(),
        last.k,
        if same { "unchanged" } else { "changed" },
        prev.k
    ));
    Ok(out.settle())
}

/// Width of `s` along `dir`.
fn width_along(s: &State, dir: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in s.points() {
        let v: f64 = x.iter().zip(dir).map(|(a, b)| a * b).sum();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Runs SMS from `s0` (whose diameter must be below `h`) and checks that the
/// points collapse to within `10 * move_tolerance` of each other while the
/// hull width along the axes and `d` random unit directions never grows
/// between snapshots.
pub fn check_single_cluster_convergence(s0: &State, cfg: &AlgoConfig) -> Result<CheckResult> {
    const NAME: &str = "single_cluster_convergence";
    let diameter = s0.diameter();
    if diameter >= cfg.h.get() {
        return Ok(CheckResult::skipped(
            NAME,
            CheckStatus::AssumptionUnmet,
            &format!("initial diameter {diameter:.4} is not below h"),
        ));
    }
    let n = s0.len();
    let d = s0.dim();
    let mut out = CheckResult::new(NAME, 1e-12 * diameter.max(f64::MIN_POSITIVE));
    out.finite_horizon_surrogate = true;
    if n == 1 {
        out.observe(0.0);
        return Ok(out.settle());
    }
    let cfg = AlgoConfig {
        algorithm: Algorithm::Sms,
        ..cfg.clone()
    };
    let opts = TraceOptions {
        steps: false,
        objective: false,
        positions: false,
        snapshot_every: Some(n as u64),
    };
    let (last, trace) = sms_run(s0, &cfg, opts)?;

    let mut dirs: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..d).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = SeededRng::new(cfg.seed, CHECK_STREAM);
    for _ in 0..d {
        let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let len = norm(&v);
        dirs.push(v.iter().map(|c| c / len).collect());
    }
    for dir in &dirs {
        for pair in trace.snapshots.windows(2) {
            let (w0, w1) = (width_along(&pair[0].state, dir), width_along(&pair[1].state, dir));
            out.observe(w0 - w1);
        }
    }
    let limit = 10.0 * cfg.move_tolerance;
    let spread = last.diameter();
    if spread >= limit {
        out.violations += 1;
    }
    out.detail = Some(format!(
        "final diameter {spread:.3e} (limit {limit:.1e}) after {} updates",
        trace.total_updates
    ));
    Ok(out.settle())
}

/// Agreement of `|grad L(s)| <= 1e-10 * scale` with "every pair coincides or
/// is at least `h` apart".
pub fn check_critical_characterization(s: &State, h: Bandwidth, p: Profile) -> CheckResult {
    const NAME: &str = "critical_characterization";
    if !p.is_smooth() {
        return CheckResult::skipped(
            NAME,
            CheckStatus::SkippedProfile,
            "needs a continuously differentiable profile",
        );
    }
    let g = full_gradient(s, h, p).norm();
    let stationary = g <= CRITICAL_THRESHOLD * g.max(1.0);
    let h2 = h.get() * h.get();
    let separated = (0..s.len()).all(|i| {
        ((i + 1)..s.len()).all(|j| {
            let d2 = squared_distance(s.point(i), s.point(j));
            d2 == 0.0 || d2 >= h2
        })
    });
    let mut out = CheckResult::new(NAME, 0.0);
    out.observe(if stationary == separated { 0.0 } else { -1.0 });
    out.detail = Some(format!(
        "stationary={stationary}, separated={separated}, |grad|={g:.3e}"
    ));
    out.settle()
}

/// Run parameters of [`run_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub presets: Vec<Preset>,
    pub profile: Profile,
    pub h: Bandwidth,
    pub seed_base: u64,
    pub seeds: usize,
    pub move_tolerance: f64,
    pub stop_fraction: f64,
    pub max_updates_per_point: u64,
    /// Gradient threshold, relative to the scale.
    pub epsilon: f64,
    /// `tau / h` for the stability check.
    pub tau_factor: f64,
    pub stability_fraction: f64,
    /// Report the constructed violating inputs instead of the real checks.
    pub negative_controls: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            presets: vec![Preset::Set1, Preset::Set2],
            profile: Profile::BIWEIGHT,
            h: Bandwidth::new(1.0).expect("positive"),
            seed_base: 0,
            seeds: 20,
            move_tolerance: 1e-8,
            stop_fraction: 1.0,
            max_updates_per_point: 20_000,
            epsilon: 1e-3,
            tau_factor: 1.0 / 3.0,
            stability_fraction: 0.95,
            negative_controls: false,
        }
    }
}

impl SuiteConfig {
    fn algo(&self, n: usize, seed: u64) -> AlgoConfig {
        AlgoConfig::new(Algorithm::Sms, self.profile, self.h)
            .with_seed(seed)
            .with_tolerance(self.move_tolerance)
            .with_stop_fraction(self.stop_fraction)
            .with_max_updates(self.max_updates_per_point.saturating_mul(n as u64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub schema: String,
    pub config: SuiteConfig,
    pub checks: Vec<CheckResult>,
    /// Constructed violating inputs; each must fail its check.
    pub negative_controls: Vec<CheckResult>,
    pub negative_controls_detected: bool,
    pub all_pass: bool,
    pub elapsed_seconds: f64,
}

impl TheoryReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Points drawn uniformly in the ball of radius `r` around the origin.
pub fn uniform_ball(n: usize, d: usize, r: f64, seed: u64) -> Result<State> {
    let mut rng = SeededRng::new(seed, DATA_STREAM);
    let mut flat = Vec::with_capacity(n * d);
    for _ in 0..n {
        let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let len = norm(&v);
        let radius = r * rng.unit().powf(1.0 / d as f64);
        flat.extend(v.iter().map(|c| c / len * radius));
    }
    State::new(flat, d)
}

/// Coincident groups on a grid with spacing `1.5 h`: a critical state.
fn critical_state(h: f64, seed: u64) -> Result<State> {
    let mut rng = SeededRng::new(seed, CHECK_STREAM);
    let mut flat = Vec::new();
    for g in 0..4 {
        let centre = [1.5 * h * (g % 2) as f64, 1.5 * h * (g / 2) as f64];
        for _ in 0..1 + rng.below(4) {
            flat.extend_from_slice(&centre);
        }
    }
    State::new(flat, 2)
}

/// Ten points uniform in `[0, 3h]^2`.
fn random_state(h: f64, seed: u64) -> Result<State> {
    let mut rng = SeededRng::new(seed, CHECK_STREAM);
    State::new((0..20).map(|_| 3.0 * h * rng.unit()).collect(), 2)
}

struct SeedOutcome {
    ascent: CheckResult,
    bound: CheckResult,
    vanish: CheckResult,
    stability: CheckResult,
}

fn check_seed(cfg: &SuiteConfig, preset_name: Preset, seed: u64) -> Result<SeedOutcome> {
    let data = generate(&preset(preset_name, seed)?)?;
    let n = data.len();
    let algo = cfg.algo(n, seed);
    let (_, trace) = sms_run(&data.points, &algo, TraceOptions::full(n as u64))?;
    Ok(SeedOutcome {
        ascent: check_monotone_ascent(&trace, &algo)?,
        bound: check_partial_gradient_bound(&trace, &algo)?,
        vanish: check_gradient_vanishes(&trace, &algo, cfg.epsilon),
        stability: check_cluster_stability(&trace, cfg.h, cfg.tau_factor * cfg.h.get())?,
    })
}

fn fake_trace(initial: State, records: Vec<StepRecord>, positions: Vec<f64>, snapshots: Vec<Snapshot>) -> RunTrace {
    let updates = records.len() as u64;
    RunTrace {
        algorithm: Algorithm::Sms,
        records,
        positions: Some(positions),
        initial_objective: Some(0.0),
        final_state: snapshots.last().map_or_else(|| initial.clone(), |s| s.state.clone()),
        initial_state: initial,
        snapshots,
        total_updates: updates,
        sweeps: 0,
        unconverged_points: 0,
        duration: Default::default(),
        stop_reason: StopReason::MaxUpdates,
    }
}

/// Constructed inputs that violate each checked statement.
pub fn negative_controls(h: Bandwidth, p: Profile, seed: u64) -> Result<Vec<CheckResult>> {
    let hv = h.get();
    let cfg = AlgoConfig::new(Algorithm::Sms, p, h).with_seed(seed);
    let mut out = Vec::new();
    let rename = |mut c: CheckResult| {
        c.name = format!("negative_control:{}", c.name);
        c
    };

    // L decreases while a point moves.
    let s = State::from_scalars(&[0.0, 0.5 * hv]).unwrap();
    let records = vec![StepRecord {
        k: 0,
        index: 0,
        shift: 0.1 * hv,
        objective: Some(-1.0),
        objective_delta: Some(-1.0),
    }];
    let trace = fake_trace(s.clone(), records, vec![0.1 * hv], Vec::new());
    out.push(rename(check_monotone_ascent(&trace, &cfg)?));

    // A large partial gradient paired with no increase of L.
    let records = vec![StepRecord {
        k: 0,
        index: 0,
        shift: 0.0,
        objective: Some(0.0),
        objective_delta: Some(0.0),
    }];
    let trace = fake_trace(s.clone(), records, vec![0.0], Vec::new());
    out.push(rename(check_partial_gradient_bound(&trace, &cfg)?));

    // Ten updates on Set 1 leave the gradient far from zero.
    let data = generate(&preset(Preset::Set1, seed)?)?;
    let mut run = StochasticMeanShift::new(data.points, cfg.clone(), TraceOptions::minimal());
    for _ in 0..10 {
        run.step();
    }
    let (_, trace) = run.finish(StopReason::MaxUpdates);
    out.push(rename(check_gradient_vanishes(&trace, &cfg, 1e-3)));

    // Two points frozen at h/2.
    let frozen = vec![Snapshot { k: 0, state: s.clone() }, Snapshot { k: 1, state: s.clone() }];
    let trace = fake_trace(s, Vec::new(), Vec::new(), frozen);
    out.push(rename(check_cluster_stability(&trace, h, hv / 3.0)?));
    Ok(out)
}

/// All checks over `cfg.seeds` seeds of every preset, seeds in parallel.
pub fn run_suite(cfg: &SuiteConfig) -> Result<TheoryReport> {
    let started = Instant::now();
    let seeds: Vec<u64> = (0..cfg.seeds as u64)
        .map(|r| crate::rng::derive_seed(cfg.seed_base, r))
        .collect();
    let controls = negative_controls(cfg.h, cfg.profile, cfg.seed_base)?;
    let detected = controls
        .iter()
        .all(|c| c.status == CheckStatus::Fail || c.status == CheckStatus::SkippedProfile);

    let mut checks = Vec::new();
    if cfg.negative_controls {
        checks.extend(controls.iter().cloned());
    } else {
        for &pr in &cfg.presets {
            let outcomes: Vec<SeedOutcome> = seeds
                .par_iter()
                .map(|&seed| check_seed(cfg, pr, seed))
                .collect::<Result<_>>()?;
            let collect = |f: fn(&SeedOutcome) -> &CheckResult| outcomes.iter().map(f).cloned().collect::<Vec<_>>();
            let tag = |c: CheckResult| CheckResult {
                name: format!("{}@{pr}", c.name),
                ..c
            };
            checks.push(tag(CheckResult::aggregate(
                "monotone_ascent",
                &collect(|o| &o.ascent),
                1.0,
            )));
            checks.push(tag(CheckResult::aggregate(
                "partial_gradient_bound",
                &collect(|o| &o.bound),
                1.0,
            )));
            checks.push(tag(CheckResult::aggregate(
                "gradient_vanishes",
                &collect(|o| &o.vanish),
                1.0,
            )));
            checks.push(tag(CheckResult::aggregate(
                "cluster_stability",
                &collect(|o| &o.stability),
                cfg.stability_fraction,
            )));
        }

        let single: Vec<CheckResult> = seeds
            .par_iter()
            .map(|&seed| {
                let s0 = uniform_ball(20, 2, 0.4 * cfg.h.get(), seed)?;
                let algo = AlgoConfig::new(Algorithm::Sms, cfg.profile, cfg.h)
                    .with_seed(seed)
                    .with_tolerance(1e-6)
                    .with_stop_fraction(1.0)
                    .with_max_updates(cfg.max_updates_per_point * 20);
                check_single_cluster_convergence(&s0, &algo)
            })
            .collect::<Result<_>>()?;
        checks.push(CheckResult::aggregate("single_cluster_convergence", &single, 1.0));

        let critical: Vec<CheckResult> = seeds
            .iter()
            .flat_map(|&seed| [random_state(cfg.h.get(), seed), critical_state(cfg.h.get(), seed)])
            .map(|s| s.map(|s| check_critical_characterization(&s, cfg.h, cfg.profile)))
            .collect::<Result<_>>()?;
        checks.push(CheckResult::aggregate("critical_characterization", &critical, 1.0));
    }

    let all_pass = checks.iter().all(|c| c.pass) && (cfg.negative_controls || detected);
    Ok(TheoryReport {
        schema: REPORT_SCHEMA.to_string(),
        config: cfg.clone(),
        checks,
        negative_controls: controls,
        negative_controls_detected: detected,
        all_pass,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

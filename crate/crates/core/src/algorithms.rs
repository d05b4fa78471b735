//! Iteration drivers for Mean-Shift (MS), Blurring Mean-Shift (BMS) and
//! Stochastic Mean-Shift (SMS).
//!
//! Budgets count point-updates for every algorithm: one per SMS step, `n` per
//! BMS sweep and one per MS inner iteration.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::kernels::Profile;
use crate::rng::RandomIndexStream;
use crate::state::{objective_delta_unchecked, objective_l, squared_distance, weighted_mean_into, Bandwidth, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ms,
    Bms,
    Sms,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ms, Algorithm::Bms, Algorithm::Sms];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ms => "ms",
            Algorithm::Bms => "bms",
            Algorithm::Sms => "sms",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ms" => Ok(Algorithm::Ms),
            "bms" => Ok(Algorithm::Bms),
            "sms" => Ok(Algorithm::Sms),
            _ => Err(Error::Unknown {
                kind: "algorithm",
                name: s.to_string(),
            }),
        }
    }
}

pub const DEFAULT_MAX_UPDATES: u64 = 10_000_000;
pub const DEFAULT_MOVE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_STOP_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algorithm: Algorithm,
    pub profile: Profile,
    pub h: Bandwidth,
    pub max_updates: u64,
    pub move_tolerance: f64,
    pub sms_stop_fraction: f64,
    pub seed: u64,
    /// Wall-clock cap; runs hitting it stop with [`StopReason::TimeLimit`].
    #[serde(skip)]
    pub time_limit: Option<Duration>,
}

impl AlgoConfig {
    pub fn new(algorithm: Algorithm, profile: Profile, h: Bandwidth) -> Self {
        Self {
            algorithm,
            profile,
            h,
            max_updates: DEFAULT_MAX_UPDATES,
            move_tolerance: DEFAULT_MOVE_TOLERANCE,
            sms_stop_fraction: DEFAULT_STOP_FRACTION,
            seed: 0,
            time_limit: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_updates(mut self, max_updates: u64) -> Self {
        self.max_updates = max_updates;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.move_tolerance = tol;
        self
    }

    pub fn with_stop_fraction(mut self, fraction: f64) -> Self {
        self.sms_stop_fraction = fraction;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    /// Checks the configuration against a sample of `n` points.
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.move_tolerance.is_finite() && self.move_tolerance > 0.0) {
            return Err(config("move tolerance must be positive"));
        }
        if !(self.sms_stop_fraction > 0.0 && self.sms_stop_fraction <= 1.0) {
            return Err(config("stop fraction must lie in (0, 1]"));
        }
        if self.max_updates < n as u64 {
            return Err(config(format!(
                "max_updates ({}) must be at least the number of points ({n})",
                self.max_updates
            )));
        }
        Ok(())
    }
}

/// What a run records besides its final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOptions {
    /// One [`StepRecord`] per point-update.
    pub steps: bool,
    /// Track `L` along the run (SMS: every step, BMS: every sweep).
    pub objective: bool,
    /// Keep every post-update position so the run can be replayed.
    pub positions: bool,
    /// Snapshot the whole state every this many updates (plus start and end).
    pub snapshot_every: Option<u64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            steps: true,
            objective: false,
            positions: false,
            snapshot_every: None,
        }
    }
}

impl TraceOptions {
    /// Counters and final state only.
    pub fn minimal() -> Self {
        Self {
            steps: false,
            ..Self::default()
        }
    }

    /// Everything the theory checks need.
    pub fn full(snapshot_every: u64) -> Self {
        Self {
            steps: true,
            objective: true,
            positions: true,
            snapshot_every: Some(snapshot_every.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Number of point-updates performed before this one.
    pub k: u64,
    /// Moved index `I_k` (0-based).
    pub index: usize,
    /// `|x^(k+1) - x^(k)|` for the moved point.
    pub shift: f64,
    /// `L` after the update, when tracked.
    pub objective: Option<f64>,
    /// `L(X^(k+1)) - L(X^(k))`, when tracked per step.
    pub objective_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub k: u64,
    pub state: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxUpdates,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub records: Vec<StepRecord>,
    /// Flat post-update positions, `d` per record, when requested.
    pub positions: Option<Vec<f64>>,
    pub initial_state: State,
    pub initial_objective: Option<f64>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: State,
    pub total_updates: u64,
    /// BMS sweeps performed.
    pub sweeps: u64,
    /// MS probes that exhausted their budget before converging.
    pub unconverged_points: usize,
    pub duration: Duration,
    pub stop_reason: StopReason,
}

impl RunTrace {
    pub fn n(&self) -> usize {
        self.initial_state.len()
    }

    /// Point-updates divided by `n`, i.e. sweep-equivalents.
    pub fn updates_per_point(&self) -> f64 {
        self.total_updates as f64 / self.n() as f64
    }

    /// The post-update position of record `r`, if positions were kept.
    pub fn position(&self, r: usize) -> Option<&[f64]> {
        let d = self.initial_state.dim();
        self.positions.as_ref().map(|p| &p[r * d..(r + 1) * d])
    }

    /// JSON-lines export, one `{k, i, shift, L?}` object per update.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line {
            k: u64,
            i: usize,
            shift: f64,
            #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
            objective: Option<f64>,
        }
        for r in &self.records {
            let line = Line {
                k: r.k,
                i: r.index,
                shift: r.shift,
                objective: r.objective,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Outcome of a single SMS step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmsStep {
    pub index: usize,
    pub shift: f64,
}

/// Draws `I_k` uniformly and moves only that point to `S_h(x_I; X^(k))`.
pub fn sms_step(state: &mut State, cfg: &AlgoConfig, rng: &mut RandomIndexStream) -> SmsStep {
    let i = rng.next_index();
    sms_step_at(state, cfg, i)
}

/// The SMS update for a given index; [`sms_step`] with the draw fixed.
pub fn sms_step_at(state: &mut State, cfg: &AlgoConfig, i: usize) -> SmsStep {
    let mut buf = vec![0.0; state.dim()];
    let shift = move_point(state, cfg.profile, cfg.h.inv_squared(), i, &mut buf);
    SmsStep { index: i, shift }
}

#[inline]
fn move_point(state: &mut State, p: Profile, inv_h2: f64, i: usize, buf: &mut [f64]) -> f64 {
    weighted_mean_into(state.point(i), state, inv_h2, p, buf);
    let shift = squared_distance(state.point(i), buf).sqrt();
    state.set_point(i, buf);
    shift
}

/// One synchronous BMS sweep: every new position is computed from the same
/// input state, then the state is replaced wholesale. Returns the largest
/// per-point shift.
pub fn bms_sweep(state: &mut State, cfg: &AlgoConfig) -> f64 {
    let mut next = vec![0.0; state.as_flat().len()];
    let shifts = bms_sweep_into(state, cfg, &mut next);
    shifts.into_iter().fold(0.0, f64::max)
}

fn bms_sweep_into(state: &mut State, cfg: &AlgoConfig, next: &mut [f64]) -> Vec<f64> {
    let d = state.dim();
    let inv_h2 = cfg.h.inv_squared();
    let mut shifts = Vec::with_capacity(state.len());
    for (i, out) in next.chunks_exact_mut(d).enumerate() {
        weighted_mean_into(state.point(i), state, inv_h2, cfg.profile, out);
        shifts.push(squared_distance(state.point(i), out).sqrt());
    }
    state.flat_mut().copy_from_slice(next);
    shifts
}

/// SMS stopping rule.
///
/// An epoch starts at every shift `>= tol`. The run may stop once every index
/// has been drawn at least once and at least `ceil(fraction * n)` distinct
/// indices were drawn, all with small shifts, since the current epoch began.
/// Counted points therefore always carry a fresh last-shift value.
#[derive(Debug, Clone)]
pub(crate) struct StopTracker {
    tol: f64,
    needed: usize,
    epoch: u64,
    marks: Vec<u64>,
    settled: usize,
    seen: Vec<bool>,
    seen_count: usize,
}

impl StopTracker {
    pub(crate) fn new(n: usize, tol: f64, fraction: f64) -> Self {
        let needed = ((fraction * n as f64).ceil() as usize).clamp(1, n);
        Self {
            tol,
            needed,
            epoch: 1,
            marks: vec![0; n],
            settled: 0,
            seen: vec![false; n],
            seen_count: 0,
        }
    }

    pub(crate) fn observe(&mut self, i: usize, shift: f64) {
        if !self.seen[i] {
            self.seen[i] = true;
            self.seen_count += 1;
        }
        if shift >= self.tol {
            self.epoch += 1;
            self.settled = 0;
        } else if self.marks[i] != self.epoch {
            self.marks[i] = self.epoch;
            self.settled += 1;
        }
    }

    pub(crate) fn done(&self) -> bool {
        self.seen_count == self.seen.len() && self.settled >= self.needed
    }
}

/// Records shared by the SMS-style drivers.
#[derive(Debug)]
pub(crate) struct TraceBuilder {
    opts: TraceOptions,
    records: Vec<StepRecord>,
    positions: Option<Vec<f64>>,
    snapshots: Vec<Snapshot>,
    objective: Option<f64>,
    initial_objective: Option<f64>,
}

impl TraceBuilder {
    pub(crate) fn new(opts: TraceOptions, s0: &State, objective: Option<f64>) -> Self {
        let snapshots = match opts.snapshot_every {
            Some(_) => vec![Snapshot {
                k: 0,
                state: s0.clone(),
            }],
            None => Vec::new(),
        };
        Self {
            opts,
            records: Vec::new(),
            positions: opts.positions.then(Vec::new),
            snapshots,
            objective,
            initial_objective: objective,
        }
    }

    pub(crate) fn push(&mut self, k: u64, index: usize, shift: f64, delta: Option<f64>, pos: &[f64]) {
        if let (Some(l), Some(dl)) = (self.objective.as_mut(), delta) {
            *l += dl;
        }
        if self.opts.steps {
            self.records.push(StepRecord {
                k,
                index,
                shift,
                objective: delta.and(self.objective),
                objective_delta: delta,
            });
        }
        if let Some(p) = self.positions.as_mut() {
            p.extend_from_slice(pos);
        }
    }

    pub(crate) fn maybe_snapshot(&mut self, updates: u64, state: &State) {
        if let Some(every) = self.opts.snapshot_every {
            if updates.is_multiple_of(every) {
                self.snapshots.push(Snapshot {
                    k: updates,
                    state: state.clone(),
                });
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn finish(
        mut self,
        algorithm: Algorithm,
        initial_state: State,
        final_state: State,
        total_updates: u64,
        sweeps: u64,
        unconverged_points: usize,
        duration: Duration,
        stop_reason: StopReason,
    ) -> RunTrace {
        if self.opts.snapshot_every.is_some() && self.snapshots.last().map(|s| s.k) != Some(total_updates) {
            self.snapshots.push(Snapshot {
                k: total_updates,
                state: final_state.clone(),
            });
        }
        RunTrace {
            algorithm,
            records: self.records,
            positions: self.positions,
            initial_state,
            initial_objective: self.initial_objective,
            snapshots: self.snapshots,
            final_state,
            total_updates,
            sweeps,
            unconverged_points,
            duration,
            stop_reason,
        }
    }
}

/// An SMS run that can be advanced one step at a time.
#[derive(Debug)]
pub struct StochasticMeanShift {
    cfg: AlgoConfig,
    initial: State,
    state: State,
    rng: RandomIndexStream,
    tracker: StopTracker,
    trace: TraceBuilder,
    buf: Vec<f64>,
    inv_h2: f64,
    updates: u64,
    started: Instant,
}

impl StochasticMeanShift {
    pub fn new(s0: State, cfg: AlgoConfig, opts: TraceOptions) -> Self {
        let objective = opts.objective.then(|| objective_l(&s0, cfg.h, cfg.profile));
        Self {
            rng: RandomIndexStream::new(cfg.seed, s0.len()),
            tracker: StopTracker::new(s0.len(), cfg.move_tolerance, cfg.sms_stop_fraction),
            trace: TraceBuilder::new(opts, &s0, objective),
            buf: vec![0.0; s0.dim()],
            inv_h2: cfg.h.inv_squared(),
            initial: s0.clone(),
            state: s0,
            cfg,
            updates: 0,
            started: Instant::now(),
        }
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn converged(&self) -> bool {
        self.tracker.done()
    }

    pub fn step(&mut self) -> SmsStep {
        let i = self.rng.next_index();
        weighted_mean_into(
            self.state.point(i),
            &self.state,
            self.inv_h2,
            self.cfg.profile,
            &mut self.buf,
        );
        let shift = squared_distance(self.state.point(i), &self.buf).sqrt();
        let delta = self
            .trace
            .objective
            .map(|_| objective_delta_unchecked(&self.state, self.inv_h2, self.cfg.profile, i, &self.buf));
        self.state.set_point(i, &self.buf);
        self.trace.push(self.updates, i, shift, delta, &self.buf);
        self.updates += 1;
        self.tracker.observe(i, shift);
        self.trace.maybe_snapshot(self.updates, &self.state);
        SmsStep { index: i, shift }
    }

    /// Steps until the stopping rule fires or a budget is exhausted.
    pub fn run_to_end(mut self) -> (State, RunTrace) {
        let reason = loop {
            if self.tracker.done() {
                break StopReason::Converged;
            }
            if self.updates >= self.cfg.max_updates {
                break StopReason::MaxUpdates;
            }
            if self.updates.is_multiple_of(1024) && timed_out(&self.cfg, self.started) {
                break StopReason::TimeLimit;
            }
            self.step();
        };
        self.finish(reason)
    }

    /// Ends the run where it stands.
    pub fn finish(self, reason: StopReason) -> (State, RunTrace) {
        let trace = self.trace.finish(
            Algorithm::Sms,
            self.initial,
            self.state.clone(),
            self.updates,
            0,
            0,
            self.started.elapsed(),
            reason,
        );
        (self.state, trace)
    }
}

pub(crate) fn timed_out(cfg: &AlgoConfig, started: Instant) -> bool {
    cfg.time_limit.is_some_and(|limit| started.elapsed() >= limit)
}

pub fn sms_run(s0: &State, cfg: &AlgoConfig, opts: TraceOptions) -> Result<(State, RunTrace)> {
    cfg.validate(s0.len())?;
    Ok(StochasticMeanShift::new(s0.clone(), cfg.clone(), opts).run_to_end())
}

pub fn bms_run(s0: &State, cfg: &AlgoConfig, opts: TraceOptions) -> Result<(State, RunTrace)> {
    cfg.validate(s0.len())?;
    let started = Instant::now();
    let n = s0.len() as u64;
    let mut state = s0.clone();
    let objective = opts.objective.then(|| objective_l(s0, cfg.h, cfg.profile));
    let mut trace = TraceBuilder::new(opts, s0, objective);
    let mut next = vec![0.0; state.as_flat().len()];
    let mut updates = 0u64;
    let mut sweeps = 0u64;
    let reason = loop {
        if updates + n > cfg.max_updates {
            break StopReason::MaxUpdates;
        }
        if timed_out(cfg, started) {
            break StopReason::TimeLimit;
        }
        let before = trace.objective;
        let shifts = bms_sweep_into(&mut state, cfg, &mut next);
        sweeps += 1;
        let after = before.map(|_| objective_l(&state, cfg.h, cfg.profile));
        let d = state.dim();
        for (i, &shift) in shifts.iter().enumerate() {
            // L is only known per sweep; attach the sweep's delta to its last update.
            let delta = match (before, after) {
                (Some(b), Some(a)) if i + 1 == shifts.len() => Some(a - b),
                _ => None,
            };
            trace.push(updates, i, shift, delta, &next[i * d..(i + 1) * d]);
            updates += 1;
        }
        trace.maybe_snapshot(updates, &state);
        if shifts.iter().all(|&s| s < cfg.move_tolerance) {
            break StopReason::Converged;
        }
    };
    let trace = trace.finish(
        Algorithm::Bms,
        s0.clone(),
        state.clone(),
        updates,
        sweeps,
        0,
        started.elapsed(),
        reason,
    );
    Ok((state, trace))
}

/// Runs every probe against the fixed original sample and returns the `n`
/// limit positions in input order.
pub fn ms_run(s0: &State, cfg: &AlgoConfig, opts: TraceOptions) -> Result<(State, RunTrace)> {
    cfg.validate(s0.len())?;
    let started = Instant::now();
    let d = s0.dim();
    let inv_h2 = cfg.h.inv_squared();
    let per_point = (cfg.max_updates / s0.len() as u64).max(1);
    let mut trace = TraceBuilder::new(
        TraceOptions {
            objective: false,
            snapshot_every: None,
            ..opts
        },
        s0,
        None,
    );
    let mut modes = s0.clone();
    let mut x = vec![0.0; d];
    let mut next = vec![0.0; d];
    let mut updates = 0u64;
    let mut unconverged = 0usize;
    let mut reason = StopReason::Converged;
    'probes: for i in 0..s0.len() {
        x.copy_from_slice(s0.point(i));
        let mut converged = false;
        for _ in 0..per_point {
            if updates.is_multiple_of(1024) && timed_out(cfg, started) {
                reason = StopReason::TimeLimit;
                modes.set_point(i, &x);
                break 'probes;
            }
            weighted_mean_into(&x, s0, inv_h2, cfg.profile, &mut next);
            let shift = squared_distance(&x, &next).sqrt();
            trace.push(updates, i, shift, None, &next);
            updates += 1;
            std::mem::swap(&mut x, &mut next);
            if shift < cfg.move_tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            unconverged += 1;
        }
        modes.set_point(i, &x);
    }
    if reason == StopReason::Converged && unconverged > 0 {
        reason = StopReason::MaxUpdates;
    }
    let trace = trace.finish(
        Algorithm::Ms,
        s0.clone(),
        modes.clone(),
        updates,
        0,
        unconverged,
        started.elapsed(),
        reason,
    );
    Ok((modes, trace))
}

/// Dispatches on `cfg.algorithm`. For MS the returned state holds the modes.
pub fn run(s0: &State, cfg: &AlgoConfig, opts: TraceOptions) -> Result<(State, RunTrace)> {
    match cfg.algorithm {
        Algorithm::Ms => ms_run(s0, cfg, opts),
        Algorithm::Bms => bms_run(s0, cfg, opts),
        Algorithm::Sms => sms_run(s0, cfg, opts),
    }
}

//! Monitoring schemes, control-limit calibration, and run-length
//! simulation.
//!
//! A scheme couples a steady-state pool (which fixes the local
//! statistic), a global statistic, and a panel width. Calibration finds
//! the control limit whose in-control average run length hits a target;
//! run-length simulation then measures detection delay under change
//! scenarios. Replications are parallel, but every observation is keyed
//! by (seed, lane, replication, attempt, stream), and all reductions run
//! in replication order, so results are identical for any worker count.

use crate::error::{Error, Result};
use crate::global::{self, GlobalKind};
use crate::local::{LocalFamily, LocalState};
use crate::pool::{QuantileTable, SteadyStatePool};
use crate::rng::{substream, Lane};
use crate::stream::{build_scenario, DistributionSpec, ScenarioConfig, StreamRunner, StreamSpec};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

/// A runnable monitoring scheme: local family (via its pool), global
/// statistic, panel width, and optionally a calibrated control limit.
#[derive(Debug, Clone)]
pub struct MonitorScheme {
    id: String,
    m: usize,
    global: GlobalKind,
    pool: Arc<SteadyStatePool>,
    /// Expected quantiles, precomputed when the global statistic is the
    /// quantile-gap one.
    table: Option<QuantileTable>,
    h: Option<f64>,
}

impl MonitorScheme {
    pub fn new(
        id: impl Into<String>,
        pool: Arc<SteadyStatePool>,
        global: GlobalKind,
        m: usize,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("panel needs at least one stream".into()));
        }
        let table = match global {
            GlobalKind::Quantile => Some(pool.expected_quantiles(m)?),
            _ => None,
        };
        Ok(MonitorScheme { id: id.into(), m, global, pool, table, h: None })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn global(&self) -> GlobalKind {
        self.global
    }

    pub fn family(&self) -> &LocalFamily {
        self.pool.family()
    }

    pub fn pool(&self) -> &Arc<SteadyStatePool> {
        &self.pool
    }

    pub fn control_limit(&self) -> Option<f64> {
        self.h
    }

    pub fn set_control_limit(&mut self, h: f64) {
        self.h = Some(h);
    }

    pub fn require_control_limit(&self) -> Result<f64> {
        self.h.ok_or_else(|| Error::NotCalibrated(self.id.clone()))
    }

    /// Global statistic over one tick's panel of local values.
    pub fn global_value(&self, w: &[f64]) -> Result<f64> {
        match self.global {
            GlobalKind::Quantile => global::quantile_exceedance(
                w,
                self.table.as_ref().expect("table built at construction"),
            ),
            GlobalKind::Logistic => {
                let u: Vec<f64> = w.iter().map(|&v| self.pool.empirical_cdf(v)).collect();
                global::logistic_exceedance(&u)
            }
            GlobalKind::SoftThreshold { b } => global::soft_threshold(w, b),
            GlobalKind::Max => global::max_statistic(w),
            GlobalKind::Sum => global::sum_statistic(w),
        }
    }
}

/// Streams, states, and generators of one monitoring run.
struct Panel<'a> {
    family: &'a LocalFamily,
    runners: Vec<StreamRunner>,
    states: Vec<LocalState>,
    rngs: Vec<ChaCha8Rng>,
    w: Vec<f64>,
}

impl<'a> Panel<'a> {
    /// Prepares a run: per-stream observation generators, reference
    /// samples where the family needs them, and initial states drawn
    /// from the pool on a separate lane.
    fn init(
        scheme: &'a MonitorScheme,
        streams: &[StreamSpec],
        seed: u64,
        replication: u64,
        attempt: u64,
    ) -> Result<Panel<'a>> {
        let family = scheme.family();
        let ref_len = family.reference_len();
        let mut runners = Vec::with_capacity(streams.len());
        let mut states = Vec::with_capacity(streams.len());
        let mut rngs = Vec::with_capacity(streams.len());
        for (i, spec) in streams.iter().enumerate() {
            let runner = spec.runner()?;
            let mut run_rng = substream(seed, Lane::Run, [replication, attempt, i as u64]);
            // The reference sample is the stream's own in-control past,
            // so it comes from the run lane, ahead of the observations.
            let reference: Vec<f64> =
                (0..ref_len).map(|_| runner.sample_ic(&mut run_rng)).collect();
            let mut init_rng = substream(seed, Lane::Init, [replication, attempt, i as u64]);
            let state = scheme.pool.draw_initial_state(&mut init_rng, &reference)?;
            runners.push(runner);
            states.push(state);
            rngs.push(run_rng);
        }
        let w = vec![0.0; streams.len()];
        Ok(Panel { family, runners, states, rngs, w })
    }

    fn tick(&mut self, t: u64) {
        for i in 0..self.runners.len() {
            let x = self.runners[i].observe(t, &mut self.rngs[i]);
            self.family.step(&mut self.states[i], x);
            self.w[i] = self.family.value(&self.states[i]);
        }
    }
}

/// Breakpoints of the running maximum of one in-control trace of the
/// global statistic. Storing only the maxima is enough to read off the
/// first passage over any limit, which makes calibration a search over
/// precomputed traces instead of fresh simulations per candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordMaxTrace {
    pub replication: u64,
    /// Simulated length; runs that never pass a limit are censored here.
    pub horizon: u32,
    /// `(tick, value)` whenever the statistic exceeds all prior ticks;
    /// both coordinates are strictly increasing and the first entry is
    /// always tick 1.
    pub breakpoints: Vec<(u32, f64)>,
}

impl RecordMaxTrace {
    /// First tick with a value strictly above `h`, if any.
    pub fn first_passage(&self, h: f64) -> Option<u32> {
        let idx = self.breakpoints.partition_point(|&(_, v)| v <= h);
        self.breakpoints.get(idx).map(|&(t, _)| t)
    }

    /// Largest value the trace reached.
    pub fn max_value(&self) -> f64 {
        self.breakpoints.last().map_or(f64::NEG_INFINITY, |&(_, v)| v)
    }
}

/// Simulates one in-control trace (all streams standard normal) and
/// records the running maximum of the global statistic.
pub fn simulate_ic_trace(
    scheme: &MonitorScheme,
    t_max: u32,
    seed: u64,
    replication: u64,
) -> Result<RecordMaxTrace> {
    let streams = vec![StreamSpec::in_control(DistributionSpec::Normal); scheme.m()];
    let mut panel = Panel::init(scheme, &streams, seed, replication, 0)?;
    let mut breakpoints = Vec::new();
    let mut running_max = f64::NEG_INFINITY;
    for t in 1..=t_max {
        panel.tick(t as u64);
        let g = scheme.global_value(&panel.w)?;
        if g > running_max {
            breakpoints.push((t, g));
            running_max = g;
        }
    }
    Ok(RecordMaxTrace { replication, horizon: t_max, breakpoints })
}

/// Simulates `count` independent traces in parallel, ordered by
/// replication.
pub fn simulate_ic_traces(
    scheme: &MonitorScheme,
    count: usize,
    t_max: u32,
    seed: u64,
) -> Result<Vec<RecordMaxTrace>> {
    (0..count)
        .into_par_iter()
        .map(|rep| simulate_ic_trace(scheme, t_max, seed, rep as u64))
        .collect()
}

/// In-control average run length at a fixed limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArlEstimate {
    pub arl: f64,
    /// Share of traces that never passed the limit; those count at
    /// their horizon, so a high share biases the estimate low.
    pub censored_fraction: f64,
}

/// Reads the average first-passage time over `h` off precomputed
/// traces.
pub fn arl_at(h: f64, traces: &[RecordMaxTrace]) -> Result<ArlEstimate> {
    if traces.is_empty() {
        return Err(Error::EmptyInput("trace set"));
    }
    let mut sum = 0.0;
    let mut censored = 0usize;
    for trace in traces {
        match trace.first_passage(h) {
            Some(t) => sum += t as f64,
            None => {
                censored += 1;
                sum += trace.horizon as f64;
            }
        }
    }
    Ok(ArlEstimate {
        arl: sum / traces.len() as f64,
        censored_fraction: censored as f64 / traces.len() as f64,
    })
}

/// Calibration workload: target, trace budget, and tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSettings {
    pub target_arl0: f64,
    pub traces: usize,
    /// Trace length; censoring beyond it caps the achievable target.
    pub t_max: u32,
    /// Accepted relative deviation of the achieved average run length.
    pub rel_tol: f64,
    pub seed: u64,
}

impl CalibrationSettings {
    /// Defaults: 1000 traces, horizon 20x the target, 2% tolerance.
    pub fn new(target_arl0: f64, seed: u64) -> Result<Self> {
        if !(target_arl0 >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target average run length must be at least 1, got {target_arl0}"
            )));
        }
        Ok(CalibrationSettings {
            target_arl0,
            traces: 1000,
            t_max: (20.0 * target_arl0).ceil() as u32,
            rel_tol: 0.02,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOutcome {
    pub h: f64,
    pub achieved_arl0: f64,
    pub censored_fraction: f64,
}

/// Simulates traces and calibrates the scheme's control limit, storing
/// it on the scheme.
pub fn calibrate(
    scheme: &mut MonitorScheme,
    settings: &CalibrationSettings,
) -> Result<CalibrationOutcome> {
    let traces = simulate_ic_traces(scheme, settings.traces, settings.t_max, settings.seed)?;
    let outcome = calibrate_from_traces(&traces, settings.target_arl0, settings.rel_tol)?;
    scheme.set_control_limit(outcome.h);
    Ok(outcome)
}

/// Cap on the censored share at an accepted limit; beyond it the
/// estimate leans too hard on the horizon to be trusted.
const MAX_CENSORED: f64 = 0.2;

/// Bisects for a limit whose average run length lands within
/// `rel_tol` of `target` on the given traces.
///
/// The average is nondecreasing in the limit, so bisection applies; it
/// is also a step function, so an overly tight tolerance band can fall
/// between steps, which reports as infeasible rather than looping.
pub fn calibrate_from_traces(
    traces: &[RecordMaxTrace],
    target: f64,
    rel_tol: f64,
) -> Result<CalibrationOutcome> {
    if traces.is_empty() {
        return Err(Error::EmptyInput("trace set"));
    }
    if !(target >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target average run length must be at least 1, got {target}"
        )));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "relative tolerance must be positive, got {rel_tol}"
        )));
    }

    let in_band = |arl: f64| (arl - target).abs() <= rel_tol * target;
    let accept = |h: f64, est: ArlEstimate| -> Result<CalibrationOutcome> {
        if est.censored_fraction > MAX_CENSORED {
            return Err(Error::CalibrationInfeasible(format!(
                "limit {h:.6} reaches the target only with {:.1}% of traces censored \
                 (cap {:.0}%); lengthen the traces",
                100.0 * est.censored_fraction,
                100.0 * MAX_CENSORED,
            )));
        }
        Ok(CalibrationOutcome {
            h,
            achieved_arl0: est.arl,
            censored_fraction: est.censored_fraction,
        })
    };

    // Global statistics are nonnegative, so -1 alarms every trace at
    // tick 1; the largest recorded value censors every trace.
    let mut lo = -1.0;
    let mut hi = traces.iter().map(RecordMaxTrace::max_value).fold(f64::NEG_INFINITY, f64::max);
    let top = arl_at(hi, traces)?;
    if top.arl < target * (1.0 - rel_tol) {
        return Err(Error::CalibrationInfeasible(format!(
            "target {target} is unreachable: even a limit above every simulated value \
             yields an average run length of {:.1}; lengthen or add traces",
            top.arl
        )));
    }
    let bottom = arl_at(lo, traces)?;
    if bottom.arl > target * (1.0 + rel_tol) {
        return Err(Error::CalibrationInfeasible(format!(
            "target {target} is below the smallest achievable average run length {:.1}",
            bottom.arl
        )));
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let est = arl_at(mid, traces)?;
        if in_band(est.arl) {
            return accept(mid, est);
        }
        if est.arl < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let final_est = arl_at(0.5 * (lo + hi), traces)?;
    Err(Error::CalibrationInfeasible(format!(
        "no limit lands within {:.1}% of target {target}: the achievable average run \
         length jumps across the tolerance band (nearest {:.1}); add traces or widen \
         the tolerance",
        100.0 * rel_tol,
        final_est.arl
    )))
}

/// One post-change replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcRun {
    pub replication: u64,
    /// Ticks from the change point to the alarm (or to the horizon when
    /// censored).
    pub run_length: u32,
    pub censored: bool,
    /// Redraws burnt on false alarms before the change point.
    pub attempts: u32,
}

/// Cap on redraws per replication when alarms keep landing before the
/// change point.
const MAX_ATTEMPTS: u32 = 10_000;

/// Simulates one replication of a change scenario.
///
/// With a positive change point, replications that alarm on or before
/// it are discarded and redrawn on a fresh attempt key, so the recorded
/// delays condition on surviving to the change. With a change point of
/// zero and all-in-control streams, the run reproduces the in-control
/// run length for the same key bit for bit.
pub fn simulate_oc_run(
    scheme: &MonitorScheme,
    streams: &[StreamSpec],
    change_point: u64,
    t_max: u32,
    seed: u64,
    replication: u64,
) -> Result<OcRun> {
    let h = scheme.require_control_limit()?;
    if streams.len() != scheme.m() {
        return Err(Error::LengthMismatch { expected: scheme.m(), got: streams.len() });
    }
    if change_point >= t_max as u64 {
        return Err(Error::InvalidParameter(format!(
            "change point {change_point} leaves no ticks before the horizon {t_max}"
        )));
    }
    let mut attempt = 0u32;
    loop {
        let mut panel = Panel::init(scheme, streams, seed, replication, attempt as u64)?;
        let mut alarm = None;
        for t in 1..=t_max {
            panel.tick(t as u64);
            if scheme.global_value(&panel.w)? > h {
                alarm = Some(t);
                break;
            }
        }
        match alarm {
            Some(t) if (t as u64) <= change_point => {
                attempt += 1;
                if attempt >= MAX_ATTEMPTS {
                    return Err(Error::Runtime(format!(
                        "replication {replication} alarmed before the change point \
                         {MAX_ATTEMPTS} times; the limit is too low for this scenario"
                    )));
                }
            }
            Some(t) => {
                return Ok(OcRun {
                    replication,
                    run_length: t - change_point as u32,
                    censored: false,
                    attempts: attempt,
                })
            }
            None => {
                return Ok(OcRun {
                    replication,
                    run_length: t_max - change_point as u32,
                    censored: true,
                    attempts: attempt,
                })
            }
        }
    }
}

/// Aggregate run-length statistics of one scenario cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub replications: usize,
    pub mean_rl: f64,
    pub sd_rl: f64,
    pub censored_fraction: f64,
    /// Share of simulated runs discarded for alarming before the
    /// change point.
    pub discard_rate: f64,
    /// Elapsed wall-clock time; the only field that varies across
    /// reruns.
    pub wall_seconds: f64,
}

/// Simulates every replication of one (scheme, scenario) cell.
///
/// Replications run in parallel; the aggregation walks them in
/// replication order, so the statistics are independent of worker
/// count.
pub fn evaluate_cell(
    scheme: &MonitorScheme,
    scenario: &ScenarioConfig,
    replications: usize,
    t_max: u32,
    seed: u64,
) -> Result<CellStats> {
    if replications == 0 {
        return Err(Error::InvalidParameter("cell needs at least one replication".into()));
    }
    if scenario.m != scheme.m() {
        return Err(Error::LengthMismatch { expected: scheme.m(), got: scenario.m });
    }
    let streams = build_scenario(scenario)?;
    let started = Instant::now();
    let runs: Vec<OcRun> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            simulate_oc_run(scheme, &streams, scenario.change_point, t_max, seed, rep as u64)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut censored = 0usize;
    let mut discarded = 0u64;
    for (i, run) in runs.iter().enumerate() {
        let x = run.run_length as f64;
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
        censored += run.censored as usize;
        discarded += run.attempts as u64;
    }
    let n = runs.len();
    let sd = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
    Ok(CellStats {
        replications: n,
        mean_rl: mean,
        sd_rl: sd,
        censored_fraction: censored as f64 / n as f64,
        discard_rate: discarded as f64 / (discarded as f64 + n as f64),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// One evaluated cell of a detection-delay table.
#[derive(Debug)]
pub struct TableCell {
    pub scheme_id: String,
    pub global_kind: GlobalKind,
    pub m: usize,
    pub m1: usize,
    pub scenario_id: String,
    pub target_arl0: f64,
    pub h: f64,
    pub outcome: Result<CellStats>,
}

/// Evaluates the full scheme-by-scenario grid. Every scheme must
/// already carry a control limit. Failures stay inside their cell so
/// one bad scenario does not abort the table.
pub fn arl1_table(
    schemes: &[MonitorScheme],
    scenarios: &[(String, ScenarioConfig)],
    target_arl0: f64,
    replications: usize,
    t_max: u32,
    seed: u64,
) -> Result<Vec<TableCell>> {
    let mut cells = Vec::with_capacity(schemes.len() * scenarios.len());
    for scheme in schemes {
        let h = scheme.require_control_limit()?;
        for (scenario_id, scenario) in scenarios {
            let outcome = evaluate_cell(scheme, scenario, replications, t_max, seed);
            cells.push(TableCell {
                scheme_id: scheme.id().to_string(),
                global_kind: scheme.global(),
                m: scheme.m(),
                m1: scenario.m1,
                scenario_id: scenario_id.clone(),
                target_arl0,
                h,
                outcome,
            });
        }
    }
    Ok(cells)
}

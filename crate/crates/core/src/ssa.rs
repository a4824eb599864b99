//! Exact (Gillespie) simulation of the bond birth–death process.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::model::ModelParams;
use crate::rng::{par_map_paths, path_rng, PathRng};
use crate::stats::SummaryStats;

pub const DEFAULT_EVENT_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    Horizon,
    ReachedTarget,
    EventCap,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Horizon => "horizon",
            StopReason::ReachedTarget => "reached_target",
            StopReason::EventCap => "event_cap",
        }
    }
}

/// Ordered `(time, state)` samples of one path.
///
/// Jump paths hold each state until the next sample time; discretized
/// diffusion paths store their grid values.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub stopped_reason: StopReason,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn final_state(&self) -> f64 {
        *self.states.last().unwrap_or(&0.0)
    }

    /// Piecewise-constant value at time `t` (last sample at or before `t`).
    pub fn state_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s <= t);
        self.states[idx.saturating_sub(1)]
    }

    /// Time of the final sample when the path stopped on its target.
    pub fn hitting_time(&self) -> Option<f64> {
        (self.stopped_reason == StopReason::ReachedTarget).then(|| self.final_time())
    }
}

/// Callbacks from the simulation loop.
pub trait Observer {
    /// The path sat in state `n` over `[t0, t1)`. `complete` is false for the
    /// final, horizon-truncated holding interval.
    fn hold(&mut self, _t0: f64, _t1: f64, _n: u64, _birth: f64, _death: f64, _complete: bool) {}
    fn jump(&mut self, _t: f64, _n: u64) {}
    /// Lets an observer end the run early.
    fn done(&self) -> bool {
        false
    }
}

impl Observer for () {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EngineStop {
    Horizon,
    Target,
    Cap,
    Observer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EngineEnd {
    pub stop: EngineStop,
    pub time: f64,
    pub state: u64,
}

/// Birth–death loop on ℕ with state-dependent total rates `(λ(n), μ(n))`.
pub(crate) fn run_birth_death<F, O>(
    rates: F,
    n0: u64,
    horizon: f64,
    target: Option<u64>,
    event_cap: u64,
    rng: &mut PathRng,
    obs: &mut O,
) -> EngineEnd
where
    F: Fn(u64) -> (f64, f64),
    O: Observer + ?Sized,
{
    let mut t = 0.0;
    let mut n = n0;
    let mut events = 0u64;
    if target.is_some_and(|x| n >= x) {
        return EngineEnd {
            stop: EngineStop::Target,
            time: t,
            state: n,
        };
    }
    loop {
        if obs.done() {
            return EngineEnd {
                stop: EngineStop::Observer,
                time: t,
                state: n,
            };
        }
        let (birth, death) = rates(n);
        let total = birth + death;
        let tau = if total > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / total
        } else {
            f64::INFINITY
        };
        if t + tau >= horizon {
            obs.hold(t, horizon, n, birth, death, false);
            return EngineEnd {
                stop: EngineStop::Horizon,
                time: horizon,
                state: n,
            };
        }
        obs.hold(t, t + tau, n, birth, death, true);
        t += tau;
        if rng.random::<f64>() * total < birth {
            n += 1;
        } else {
            n -= 1;
        }
        events += 1;
        obs.jump(t, n);
        if target.is_some_and(|x| n >= x) {
            return EngineEnd {
                stop: EngineStop::Target,
                time: t,
                state: n,
            };
        }
        if events >= event_cap {
            return EngineEnd {
                stop: EngineStop::Cap,
                time: t,
                state: n,
            };
        }
    }
}

/// Records every jump.
pub(crate) struct Recorder {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub scale: f64,
}

impl Recorder {
    pub(crate) fn new(n0: u64, scale: f64) -> Self {
        Self {
            times: vec![0.0],
            states: vec![n0 as f64 / scale],
            scale,
        }
    }

    pub(crate) fn finish(mut self, end: EngineEnd) -> Trajectory {
        let stopped_reason = match end.stop {
            EngineStop::Horizon => StopReason::Horizon,
            EngineStop::Target => StopReason::ReachedTarget,
            EngineStop::Cap | EngineStop::Observer => StopReason::EventCap,
        };
        if end.stop == EngineStop::Horizon && end.time.is_finite() && end.time > *self.times.last().unwrap_or(&0.0) {
            self.times.push(end.time);
            self.states.push(end.state as f64 / self.scale);
        }
        Trajectory {
            times: self.times,
            states: self.states,
            stopped_reason,
        }
    }
}

impl Observer for Recorder {
    fn jump(&mut self, t: f64, n: u64) {
        self.times.push(t);
        self.states.push(n as f64 / self.scale);
    }
}

/// Samples the state at fixed grid times.
pub(crate) struct GridSampler<'a> {
    grid: &'a [f64],
    next: usize,
    pub values: Vec<f64>,
    scale: f64,
}

impl<'a> GridSampler<'a> {
    pub(crate) fn new(grid: &'a [f64], scale: f64) -> Self {
        Self {
            grid,
            next: 0,
            values: Vec::with_capacity(grid.len()),
            scale,
        }
    }

    /// Fills any remaining grid points with the frozen final state.
    pub(crate) fn finish(mut self, end_state: u64) -> Vec<f64> {
        while self.values.len() < self.grid.len() {
            self.values.push(end_state as f64 / self.scale);
        }
        self.values
    }
}

impl Observer for GridSampler<'_> {
    fn hold(&mut self, t0: f64, t1: f64, n: u64, _: f64, _: f64, complete: bool) {
        while self.next < self.grid.len() {
            let g = self.grid[self.next];
            let inside = g >= t0 && (g < t1 || (!complete && g <= t1));
            if !inside {
                break;
            }
            self.values.push(n as f64 / self.scale);
            self.next += 1;
        }
    }
}

/// Validates a time grid: finite, nonnegative, nondecreasing.
pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    for w in grid.windows(2) {
        if w[1] < w[0] {
            return Err(Error::Domain("time grid must be nondecreasing".into()));
        }
    }
    for &t in grid {
        check_nonnegative("t_grid", t)?;
    }
    Ok(())
}

/// Integer stopping level `⌈n*⌉`.
pub fn target_level(p: &ModelParams) -> u64 {
    p.n_star().ceil() as u64
}

fn model_rates(p: &ModelParams) -> impl Fn(u64) -> (f64, f64) + '_ {
    move |n| {
        let x = n as f64;
        (p.birth_rate(x), p.death_rate(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsaOptions {
    pub horizon: f64,
    pub stop_at_n_star: bool,
    pub event_cap: u64,
}

impl SsaOptions {
    pub fn new(horizon: f64, stop_at_n_star: bool) -> Self {
        Self {
            horizon,
            stop_at_n_star,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
            reason: "must be > 0",
        });
    }
    Ok(())
}

/// Exact path of the bond process from `n0`, recording every jump.
pub fn simulate_ssa(p: &ModelParams, n0: u64, horizon: f64, stop_at_n_star: bool, seed: u64) -> Result<Trajectory> {
    let mut rng = path_rng(seed, 0);
    simulate_ssa_with(p, n0, &SsaOptions::new(horizon, stop_at_n_star), &mut rng)
}

pub fn simulate_ssa_with(p: &ModelParams, n0: u64, opts: &SsaOptions, rng: &mut PathRng) -> Result<Trajectory> {
    p.validate()?;
    check_horizon(opts.horizon)?;
    let target = opts.stop_at_n_star.then(|| target_level(p));
    let mut rec = Recorder::new(n0, 1.0);
    let end = run_birth_death(model_rates(p), n0, opts.horizon, target, opts.event_cap, rng, &mut rec);
    Ok(rec.finish(end))
}

/// `E[N_t]` for constant rates: `n0 e^{(r−d)t} + c t·(e^{(r−d)t} − 1)/((r−d)t)`.
///
/// Written with `expm1` so the `r = d` limit `n0 + ct` needs no branch.
pub fn mean_exact_constant_rates(n0: f64, c: f64, r: f64, d: f64, t: f64) -> f64 {
    let k = r - d;
    n0 * (k * t).exp() + c * t * expm1_ratio(k * t)
}

/// `(e^x − 1)/x`, equal to 1 at 0.
pub fn expm1_ratio(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// Long-run mean `c/(d − r)`, infinite when `r ≥ d`.
pub fn steady_mean(c: f64, r: f64, d: f64) -> f64 {
    if r < d {
        c / (d - r)
    } else {
        f64::INFINITY
    }
}

/// Per-time summaries of the state over `n_paths` independent paths.
pub fn ensemble_stats(
    p: &ModelParams,
    n0: u64,
    t_grid: &[f64],
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<SummaryStats>> {
    p.validate()?;
    check_grid(t_grid)?;
    if n_paths < 2 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            value: n_paths as f64,
            reason: "must be >= 2",
        });
    }
    let horizon = t_grid[t_grid.len() - 1] * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let paths = par_map_paths(n_paths, master_seed, |_, rng| {
        let mut sampler = GridSampler::new(t_grid, 1.0);
        let end = run_birth_death(model_rates(p), n0, horizon, None, DEFAULT_EVENT_CAP, rng, &mut sampler);
        (sampler.finish(end.state), end.stop)
    });
    if paths.iter().any(|(_, s)| *s == EngineStop::Cap) {
        return Err(Error::Domain(format!(
            "event cap of {DEFAULT_EVENT_CAP} reached before the last grid time"
        )));
    }
    columns_to_stats(&paths.into_iter().map(|(v, _)| v).collect::<Vec<_>>(), t_grid.len())
}

pub(crate) fn columns_to_stats(rows: &[Vec<f64>], width: usize) -> Result<Vec<SummaryStats>> {
    (0..width)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            SummaryStats::from_samples(&col)
        })
        .collect()
}

/// Martingale `M_t = N_t − N_0 − ∫(λ − μ)` and the compensator `∫(λ + μ)` of
/// its quadratic variation, for one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatorSample {
    pub martingale: f64,
    pub quadratic_compensator: f64,
}

#[derive(Default)]
struct Compensator {
    drift_integral: f64,
    rate_integral: f64,
}

impl Observer for Compensator {
    fn hold(&mut self, t0: f64, t1: f64, _: u64, birth: f64, death: f64, _: bool) {
        let dt = t1 - t0;
        self.drift_integral += (birth - death) * dt;
        self.rate_integral += (birth + death) * dt;
    }
}

pub fn compensator_samples(
    p: &ModelParams,
    n0: u64,
    t: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<CompensatorSample>> {
    p.validate()?;
    check_positive("t", t)?;
    let out = par_map_paths(n_paths, master_seed, |_, rng| {
        let mut comp = Compensator::default();
        let end = run_birth_death(model_rates(p), n0, t, None, DEFAULT_EVENT_CAP, rng, &mut comp);
        (
            end.stop,
            CompensatorSample {
                martingale: end.state as f64 - n0 as f64 - comp.drift_integral,
                quadratic_compensator: comp.rate_integral,
            },
        )
    });
    if out.iter().any(|(s, _)| *s == EngineStop::Cap) {
        return Err(Error::Domain("event cap reached in compensator run".into()));
    }
    Ok(out.into_iter().map(|(_, s)| s).collect())
}

struct HoldingTimes {
    state: u64,
    wanted: usize,
    samples: Vec<f64>,
}

impl Observer for HoldingTimes {
    fn hold(&mut self, t0: f64, t1: f64, n: u64, _: f64, _: f64, complete: bool) {
        if complete && n == self.state && self.samples.len() < self.wanted {
            self.samples.push(t1 - t0);
        }
    }

    fn done(&self) -> bool {
        self.samples.len() >= self.wanted
    }
}

/// Complete holding times observed at `state` along a single long path from
/// `n0`.
pub fn holding_times_at(p: &ModelParams, n0: u64, state: u64, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let mut obs = HoldingTimes {
        state,
        wanted: n_samples,
        samples: Vec::with_capacity(n_samples),
    };
    let mut rng = path_rng(seed, 0);
    run_birth_death(
        model_rates(p),
        n0,
        f64::INFINITY,
        None,
        DEFAULT_EVENT_CAP,
        &mut rng,
        &mut obs,
    );
    if obs.samples.len() < n_samples {
        return Err(Error::Domain(format!(
            "state {state} visited only {} times before the event cap",
            obs.samples.len()
        )));
    }
    Ok(obs.samples)
}

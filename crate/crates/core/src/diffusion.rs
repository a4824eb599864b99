//! The diffusion limit `dN = b(N)dt + √(2aN) dB`: symmetrized Euler paths,
//! Monte Carlo hitting times, and the squared Ornstein–Uhlenbeck
//! representation of the constant-rate case.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::model::ModelParams;
use crate::rng::{par_map_paths, path_rng, PathRng};
use crate::ssa::{StopReason, Trajectory};
use crate::stats::SummaryStats;

/// Default censoring horizon for hitting-time sampling.
pub const DEFAULT_HITTING_HORIZON: f64 = 1e4;

fn normal(rng: &mut PathRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Where an Euler run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerEnd {
    pub time: f64,
    pub state: f64,
    pub reached_target: bool,
}

/// One symmetrized Euler step `|n + b(n)h + √(2a h n) Z|`.
#[inline]
pub fn euler_step(p: &ModelParams, n: f64, h: f64, z: f64) -> f64 {
    (n + p.drift(n) * h + (2.0 * p.a * h * n).sqrt() * z).abs()
}

/// Runs the scheme to `horizon`, or to the first crossing of `target`, whose
/// time is placed by linear interpolation inside the crossing step.
/// `on_step(t, n)` sees every accepted grid value.
pub fn euler_run<S: FnMut(f64, f64)>(
    p: &ModelParams,
    n0: f64,
    dt: f64,
    horizon: f64,
    target: Option<f64>,
    rng: &mut PathRng,
    mut on_step: S,
) -> EulerEnd {
    if target.is_some_and(|x| n0 >= x) {
        return EulerEnd {
            time: 0.0,
            state: n0,
            reached_target: true,
        };
    }
    let steps = (horizon / dt).ceil() as u64;
    let mut n = n0;
    for i in 0..steps {
        let t0 = i as f64 * dt;
        let t1 = ((i + 1) as f64 * dt).min(horizon);
        let next = euler_step(p, n, t1 - t0, normal(rng));
        if let Some(x) = target {
            if next >= x {
                let w = (x - n) / (next - n);
                let t_cross = t0 + w * (t1 - t0);
                on_step(t_cross, x);
                return EulerEnd {
                    time: t_cross,
                    state: x,
                    reached_target: true,
                };
            }
        }
        n = next;
        on_step(t1, n);
    }
    EulerEnd {
        time: horizon,
        state: n,
        reached_target: false,
    }
}

fn check_scheme(p: &ModelParams, n0: f64, dt: f64, horizon: f64) -> Result<()> {
    p.validate()?;
    check_nonnegative("n0", n0)?;
    check_positive("dt", dt)?;
    check_positive("horizon", horizon)?;
    if !horizon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
            reason: "must be finite",
        });
    }
    Ok(())
}

/// Symmetrized Euler path of the limiting SDE.
pub fn euler_symmetrized(
    p: &ModelParams,
    n0: f64,
    dt: f64,
    horizon: f64,
    target: Option<f64>,
    seed: u64,
) -> Result<Trajectory> {
    check_scheme(p, n0, dt, horizon)?;
    let mut rng = path_rng(seed, 0);
    let mut times = vec![0.0];
    let mut states = vec![n0];
    let end = euler_run(p, n0, dt, horizon, target, &mut rng, |t, n| {
        times.push(t);
        states.push(n);
    });
    if end.reached_target && end.time == 0.0 {
        // started on the target
        times.truncate(1);
        states.truncate(1);
    }
    Ok(Trajectory {
        times,
        states,
        stopped_reason: if end.reached_target {
            StopReason::ReachedTarget
        } else {
            StopReason::Horizon
        },
    })
}

/// Values at time `t` of `n_paths` independent Euler paths, in path order.
pub fn euler_marginal_samples(
    p: &ModelParams,
    n0: f64,
    dt: f64,
    t: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    check_scheme(p, n0, dt, t)?;
    Ok(par_map_paths(n_paths, master_seed, |_, rng| {
        euler_run(p, n0, dt, t, None, rng, |_, _| {}).state
    }))
}

/// Outcome of the strong-convergence condition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerkaouiCheck {
    pub valid: bool,
    /// `(a/4)(c/a − 1)²`.
    pub lhs: f64,
    /// `max(3P, 8a)`.
    pub threshold: f64,
    /// `lhs − threshold`.
    pub drift_margin: f64,
    /// `1/(2P) − dt`.
    pub step_margin: f64,
    /// Set when `lhs` is within 10% of the threshold.
    pub near_threshold: bool,
}

/// Checks `(a/4)(c/a − 1)² > max(3P, 8a)` and `dt ≤ 1/(2P)`.
pub fn berkaoui_valid(c: f64, a: f64, drift_bound: f64, dt: f64) -> Result<BerkaouiCheck> {
    check_positive("a", a)?;
    check_positive("P", drift_bound)?;
    check_nonnegative("c", c)?;
    check_positive("dt", dt)?;
    let lhs = a / 4.0 * (c / a - 1.0).powi(2);
    let threshold = (3.0 * drift_bound).max(8.0 * a);
    let drift_margin = lhs - threshold;
    let step_margin = 1.0 / (2.0 * drift_bound) - dt;
    Ok(BerkaouiCheck {
        valid: drift_margin > 0.0 && step_margin >= 0.0,
        lhs,
        threshold,
        drift_margin,
        step_margin,
        near_threshold: drift_margin.abs() <= 0.1 * threshold,
    })
}

/// Monte Carlo first-passage times.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingSamples {
    /// Crossing times of the paths that reached the target, in path order.
    pub samples: Vec<f64>,
    /// Paths still below the target at the horizon.
    pub censored: usize,
    pub n_paths: usize,
    pub horizon: f64,
    /// Summary of `samples`; `None` when every path was censored.
    pub stats: Option<SummaryStats>,
}

impl HittingSamples {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n_paths as f64
    }
}

pub fn hitting_time_samples(
    p: &ModelParams,
    n0: f64,
    target: f64,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
    horizon: Option<f64>,
) -> Result<HittingSamples> {
    let horizon = horizon.unwrap_or(DEFAULT_HITTING_HORIZON);
    check_scheme(p, n0, dt, horizon)?;
    if !(target >= n0) {
        return Err(Error::Domain(format!("hitting target {target} must be >= start {n0}")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    let ends = par_map_paths(n_paths, master_seed, |_, rng| {
        euler_run(p, n0, dt, horizon, Some(target), rng, |_, _| {})
    });
    let samples: Vec<f64> = ends.iter().filter(|e| e.reached_target).map(|e| e.time).collect();
    let censored = n_paths - samples.len();
    let stats = if samples.is_empty() {
        None
    } else {
        Some(SummaryStats::from_samples(&samples)?)
    };
    Ok(HittingSamples {
        samples,
        censored,
        n_paths,
        horizon,
        stats,
    })
}

/// Paths of several models driven by the same Gaussian increments.
pub fn coupled_euler_paths(
    models: &[ModelParams],
    n0: f64,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    for p in models {
        check_scheme(p, n0, dt, horizon)?;
    }
    let steps = (horizon / dt).ceil() as usize;
    let mut rng = path_rng(seed, 0);
    let noise: Vec<f64> = (0..steps).map(|_| normal(&mut rng)).collect();
    Ok(models
        .iter()
        .map(|p| {
            let mut times = Vec::with_capacity(steps + 1);
            let mut states = Vec::with_capacity(steps + 1);
            times.push(0.0);
            states.push(n0);
            let mut n = n0;
            for (i, z) in noise.iter().enumerate() {
                let t0 = i as f64 * dt;
                let t1 = ((i + 1) as f64 * dt).min(horizon);
                n = euler_step(p, n, t1 - t0, *z);
                times.push(t1);
                states.push(n);
            }
            Trajectory {
                times,
                states,
                stopped_reason: StopReason::Horizon,
            }
        })
        .collect())
}

/// Parameters of the squared-norm OU representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub dimension: u32,
    pub beta: f64,
    pub sigma: f64,
}

impl OuParams {
    /// `D = 2c/a`, `β = d − r`, `σ = √(2a)`; `None` unless `2c/a` is a
    /// positive integer.
    pub fn from_cir(c: f64, a: f64, r: f64, d: f64) -> Option<Self> {
        let dim = 2.0 * c / a;
        let rounded = dim.round();
        if rounded < 1.0 || (dim - rounded).abs() > 1e-9 * dim.max(1.0) {
            return None;
        }
        Some(Self {
            dimension: rounded as u32,
            beta: d - r,
            sigma: (2.0 * a).sqrt(),
        })
    }

    fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidParameter {
                name: "D",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        check_positive("beta", self.beta)?;
        check_nonnegative("sigma_ou", self.sigma)?;
        Ok(())
    }
}

/// Exact OU transition over `h`: mean factor and standard deviation.
fn ou_transition(ou: &OuParams, h: f64) -> (f64, f64) {
    let decay = (-0.5 * ou.beta * h).exp();
    let var = 0.25 * ou.sigma * ou.sigma * (-(-ou.beta * h).exp_m1()) / ou.beta;
    (decay, var.sqrt())
}

fn ou_run<S: FnMut(f64, f64)>(ou: &OuParams, r0: f64, dt: f64, horizon: f64, rng: &mut PathRng, mut on_step: S) -> f64 {
    let mut x = vec![0.0; ou.dimension as usize];
    x[0] = r0.sqrt();
    let steps = (horizon / dt).ceil() as usize;
    let mut radius2 = r0;
    for i in 0..steps {
        let t0 = i as f64 * dt;
        let t1 = ((i + 1) as f64 * dt).min(horizon);
        let (decay, sd) = ou_transition(ou, t1 - t0);
        radius2 = 0.0;
        for xi in x.iter_mut() {
            *xi = decay * *xi + sd * normal(rng);
            radius2 += *xi * *xi;
        }
        on_step(t1, radius2);
    }
    radius2
}

/// Squared Euclidean norm of `D` independent OU components
/// `dX = −(β/2)X dt + (σ/2) dB`, started with `|X₀|² = r0`.
pub fn simulate_squared_ou(ou: &OuParams, r0: f64, dt: f64, horizon: f64, seed: u64) -> Result<Trajectory> {
    ou.validate()?;
    check_nonnegative("r0", r0)?;
    check_positive("dt", dt)?;
    check_positive("horizon", horizon)?;
    let mut rng = path_rng(seed, 0);
    let mut times = vec![0.0];
    let mut states = vec![r0];
    ou_run(ou, r0, dt, horizon, &mut rng, |t, r| {
        times.push(t);
        states.push(r);
    });
    Ok(Trajectory {
        times,
        states,
        stopped_reason: StopReason::Horizon,
    })
}

/// Values at time `t` of `n_paths` squared-OU paths, in path order.
pub fn squared_ou_marginal_samples(
    ou: &OuParams,
    r0: f64,
    dt: f64,
    t: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    ou.validate()?;
    check_nonnegative("r0", r0)?;
    check_positive("dt", dt)?;
    check_positive("t", t)?;
    Ok(par_map_paths(n_paths, master_seed, |_, rng| {
        ou_run(ou, r0, dt, t, rng, |_, _| {})
    }))
}

/// Samples of one long Euler path taken every `spacing` time units after a
/// burn-in, for stationary-law checks.
pub fn euler_long_run_samples(
    p: &ModelParams,
    n0: f64,
    dt: f64,
    burn_in: f64,
    spacing: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_scheme(p, n0, dt, spacing)?;
    check_nonnegative("burn_in", burn_in)?;
    let mut rng = path_rng(seed, 0);
    let mut n = if burn_in > 0.0 {
        euler_run(p, n0, dt, burn_in, None, &mut rng, |_, _| {}).state
    } else {
        n0
    };
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        n = euler_run(p, n, dt, spacing, None, &mut rng, |_, _| {}).state;
        out.push(n);
    }
    Ok(out)
}

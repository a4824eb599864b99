//! Renormalized bond processes, the deterministic limit `n′ = F(n)` and the
//! classification of its equilibria.

use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::model::{ModelParams, RegimeKind, ScalingRegime};
use crate::rng::{par_map_paths, path_rng, PathRng};
use crate::ssa::{
    check_grid, columns_to_stats, run_birth_death, EngineEnd, EngineStop, GridSampler, Observer, Recorder, SsaOptions,
    StopReason, Trajectory, DEFAULT_EVENT_CAP,
};
use crate::stats::SummaryStats;

/// Lattice total rates `(birth, death)` of `N = K·X` under a scaling regime.
pub fn renormalized_rates(p: &ModelParams, regime: &ScalingRegime, n: u64) -> (f64, f64) {
    let k = regime.scale();
    let nf = n as f64;
    let x = nf / k;
    let d = p.dissociation(x);
    let c = p.creation();
    match regime.kind {
        RegimeKind::AcceleratedCreation => (k * c + p.r * nf, if n == 0 { 0.0 } else { d * nf }),
        RegimeKind::NonAccelerated => (c + p.r * nf, if n == 0 { 0.0 } else { d * nf }),
        RegimeKind::AcceleratedDemography { eta } => {
            let extra = k.powf(eta) * p.a;
            (k * c + (p.r + extra) * nf, (d + extra) * nf)
        }
    }
}

/// Nearest lattice point `round(K·x0)`.
pub fn lattice_start(regime: &ScalingRegime, x0: f64) -> Result<u64> {
    check_nonnegative("x0", x0)?;
    Ok((regime.scale() * x0).round() as u64)
}

/// Exact path of `X^K = N^K/K` on the lattice `ℕ/K`.
pub fn simulate_renormalized(
    p: &ModelParams,
    regime: &ScalingRegime,
    x0: f64,
    horizon: f64,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = path_rng(seed, 0);
    simulate_renormalized_with(p, regime, x0, &SsaOptions::new(horizon, false), &mut rng)
}

pub fn simulate_renormalized_with(
    p: &ModelParams,
    regime: &ScalingRegime,
    x0: f64,
    opts: &SsaOptions,
    rng: &mut PathRng,
) -> Result<Trajectory> {
    p.validate()?;
    regime.validate()?;
    check_positive("horizon", opts.horizon)?;
    let n0 = lattice_start(regime, x0)?;
    let target = opts.stop_at_n_star.then(|| (p.n_star() * regime.scale()).ceil() as u64);
    let mut rec = Recorder::new(n0, regime.scale());
    let end = run_birth_death(
        |n| renormalized_rates(p, regime, n),
        n0,
        opts.horizon,
        target,
        opts.event_cap,
        rng,
        &mut rec,
    );
    Ok(rec.finish(end))
}

/// `X^K` sampled at `t_grid`, one row per path, in path order.
pub fn renormalized_grid_samples(
    p: &ModelParams,
    regime: &ScalingRegime,
    x0: f64,
    t_grid: &[f64],
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    p.validate()?;
    regime.validate()?;
    check_grid(t_grid)?;
    let n0 = lattice_start(regime, x0)?;
    let horizon = t_grid[t_grid.len() - 1] * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let rows = par_map_paths(n_paths, master_seed, |_, rng| {
        let mut sampler = GridSampler::new(t_grid, regime.scale());
        let end = run_birth_death(
            |n| renormalized_rates(p, regime, n),
            n0,
            horizon,
            None,
            DEFAULT_EVENT_CAP,
            rng,
            &mut sampler,
        );
        (sampler.finish(end.state), end.stop)
    });
    if rows.iter().any(|(_, s)| *s == EngineStop::Cap) {
        return Err(Error::Domain("event cap reached in renormalized ensemble".into()));
    }
    Ok(rows.into_iter().map(|(r, _)| r).collect())
}

pub fn renormalized_ensemble_stats(
    p: &ModelParams,
    regime: &ScalingRegime,
    x0: f64,
    t_grid: &[f64],
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<SummaryStats>> {
    let rows = renormalized_grid_samples(p, regime, x0, t_grid, n_paths, master_seed)?;
    columns_to_stats(&rows, t_grid.len())
}

/// A fixed-step RK4 solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub trajectory: Trajectory,
    /// Steps whose result went negative and was clipped to 0.
    pub clipped_steps: usize,
}

impl OdeSolution {
    /// Linear interpolation between RK4 nodes (clamped to the time span).
    pub fn value_at(&self, t: f64) -> f64 {
        let times = &self.trajectory.times;
        let states = &self.trajectory.states;
        let i = times.partition_point(|&s| s <= t);
        if i == 0 {
            return states[0];
        }
        if i >= times.len() {
            return states[states.len() - 1];
        }
        let (t0, t1) = (times[i - 1], times[i]);
        let w = (t - t0) / (t1 - t0);
        states[i - 1] + w * (states[i] - states[i - 1])
    }
}

/// Integrates `n′ = c·[u ≤ u*] + (r − d(n))·n` with the clamped dissociation
/// used by the simulators. `include_creation = false` drops the constant term.
pub fn ode_integrate(p: &ModelParams, n0: f64, horizon: f64, dt: f64, include_creation: bool) -> Result<OdeSolution> {
    p.validate()?;
    check_nonnegative("n0", n0)?;
    check_positive("horizon", horizon)?;
    check_positive("dt", dt)?;
    let c = if include_creation { p.creation() } else { 0.0 };
    let f = |n: f64| c + (p.r - p.dissociation(n)) * n;
    let steps = (horizon / dt).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(n0);
    let mut n = n0;
    let mut clipped = 0;
    for i in 0..steps {
        let t0 = i as f64 * dt;
        let t1 = ((i + 1) as f64 * dt).min(horizon);
        let h = t1 - t0;
        let k1 = f(n);
        let k2 = f(n + 0.5 * h * k1);
        let k3 = f(n + 0.5 * h * k2);
        let k4 = f(n + h * k3);
        n += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if n < 0.0 {
            n = 0.0;
            clipped += 1;
        }
        times.push(t1);
        states.push(n);
    }
    Ok(OdeSolution {
        trajectory: Trajectory {
            times,
            states,
            stopped_reason: StopReason::Horizon,
        },
        clipped_steps: clipped,
    })
}

/// `(F, F′, F″)` of the unclamped limit field
/// `F(n) = c·[u ≤ u*] + (r − d e^{α(u−γn)}) n`.
#[allow(non_snake_case)]
pub fn F_eval(n: f64, p: &ModelParams) -> (f64, f64, f64) {
    let ag = p.alpha * p.gamma;
    let e = (p.alpha * (p.u - p.gamma * n)).exp();
    let f = p.creation() + (p.r - p.d * e) * n;
    let f1 = p.r + p.d * (ag * n - 1.0) * e;
    let f2 = ag * p.d * (2.0 - ag * n) * e;
    (f, f1, f2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Semistable,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Semistable => "semistable",
        }
    }
}

/// One equilibrium; `value = +∞` marks divergence of the bond density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub value: f64,
    pub stability: Stability,
}

/// Which branch of the classification applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseLabel {
    /// No creation and `u > ln(r/d)/α`: `0` stable, one unstable root above.
    NoCreationStableZero,
    /// No creation and `u < ln(r/d)/α`: `0` unstable, divergence.
    NoCreationUnstableZero,
    /// No creation and `u = ln(r/d)/α`: the two roots merge at `0`.
    NoCreationCritical,
    /// No creation and `r = 0`: `0` is the only equilibrium.
    NoCreationNoReproduction,
    /// Creation on and `F′(0) ≥ 0`: `F` increases from `c > 0`, divergence.
    CreationMonotone,
    /// Creation on and `F(n̄) > 0`: no equilibrium, divergence.
    CreationPositiveMinimum,
    /// Creation on and `F(n̄) = 0`: a single tangent equilibrium at `n̄`.
    CreationTangent,
    /// Creation on and `F(n̄) < 0`: a stable and an unstable equilibrium.
    CreationBistable,
    /// `α = 0`: affine field `c + (r − d)n`.
    Linear,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::NoCreationStableZero => "no_creation_stable_zero",
            CaseLabel::NoCreationUnstableZero => "no_creation_unstable_zero",
            CaseLabel::NoCreationCritical => "no_creation_critical",
            CaseLabel::NoCreationNoReproduction => "no_creation_no_reproduction",
            CaseLabel::CreationMonotone => "creation_monotone",
            CaseLabel::CreationPositiveMinimum => "creation_positive_minimum",
            CaseLabel::CreationTangent => "creation_tangent",
            CaseLabel::CreationBistable => "creation_bistable",
            CaseLabel::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(non_snake_case)]
pub struct EquilibriumReport {
    /// Ascending; a trailing `+∞` entry marks divergence when no finite
    /// equilibrium attracts generic starts.
    pub equilibria: Vec<Equilibrium>,
    pub case_label: CaseLabel,
    /// Root of `F′` in `(0, 2/(αγ))` when it exists.
    pub nbar: Option<f64>,
    pub F_at_nbar: Option<f64>,
}

impl EquilibriumReport {
    pub fn finite(&self) -> impl Iterator<Item = &Equilibrium> {
        self.equilibria.iter().filter(|e| e.value.is_finite())
    }
}

fn bisect<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    let g_lo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == (g_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn stability_at(p: &ModelParams, e: f64) -> Stability {
    let (_, f1, _) = F_eval(e, p);
    let scale = p.r + p.d * (p.alpha * (p.u - p.gamma * e)).exp() * (1.0 + p.alpha * p.gamma * e);
    if f1.abs() <= 1e-9 * scale {
        Stability::Semistable
    } else if f1 < 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

fn infinity() -> Equilibrium {
    Equilibrium {
        value: f64::INFINITY,
        stability: Stability::Stable,
    }
}

/// Full classification of the equilibria of `n′ = F(n)`.
pub fn classify_equilibria(p: &ModelParams) -> Result<EquilibriumReport> {
    p.validate()?;
    let c = p.creation();
    if p.alpha == 0.0 {
        return Ok(classify_linear(p, c));
    }
    let ag = p.alpha * p.gamma;
    let f = |n: f64| F_eval(n, p).0;
    let f1 = |n: f64| F_eval(n, p).1;

    // F′ increases on [0, 2/(αγ)] and stays above r beyond 1/(αγ), so it has
    // at most one root, inside (0, 2/(αγ)).
    let nbar = (f1(0.0) < 0.0).then(|| bisect(f1, 0.0, 2.0 / ag));
    let f_nbar = nbar.map(f);

    let mut equilibria = Vec::new();
    let case_label;
    if c == 0.0 {
        if p.r == 0.0 {
            equilibria.push(Equilibrium {
                value: 0.0,
                stability: Stability::Stable,
            });
            case_label = CaseLabel::NoCreationNoReproduction;
        } else {
            let threshold = (p.r / p.d).ln() / p.alpha;
            let scale = p.u.abs().max(threshold.abs()).max(1.0);
            if (p.u - threshold).abs() <= 1e-12 * scale {
                equilibria.push(Equilibrium {
                    value: 0.0,
                    stability: Stability::Semistable,
                });
                equilibria.push(infinity());
                case_label = CaseLabel::NoCreationCritical;
            } else if p.u > threshold {
                let n2 = p.u / p.gamma - (p.r / p.d).ln() / ag;
                equilibria.push(Equilibrium {
                    value: 0.0,
                    stability: Stability::Stable,
                });
                equilibria.push(Equilibrium {
                    value: n2,
                    stability: stability_at(p, n2),
                });
                case_label = CaseLabel::NoCreationStableZero;
            } else {
                equilibria.push(Equilibrium {
                    value: 0.0,
                    stability: Stability::Unstable,
                });
                equilibria.push(infinity());
                case_label = CaseLabel::NoCreationUnstableZero;
            }
        }
    } else {
        match (nbar, f_nbar) {
            (None, _) | (_, None) => {
                equilibria.push(infinity());
                case_label = CaseLabel::CreationMonotone;
            }
            (Some(nb), Some(fnb)) => {
                let e = (p.alpha * (p.u - p.gamma * nb)).exp();
                let scale = c + (p.r + p.d * e) * nb;
                if fnb.abs() <= 1e-12 * scale {
                    equilibria.push(Equilibrium {
                        value: nb,
                        stability: Stability::Semistable,
                    });
                    equilibria.push(infinity());
                    case_label = CaseLabel::CreationTangent;
                } else if fnb > 0.0 {
                    equilibria.push(infinity());
                    case_label = CaseLabel::CreationPositiveMinimum;
                } else {
                    let n1 = bisect(f, 0.0, nb);
                    let mut hi = (p.n_star()).max(4.0 / ag).max(2.0 * nb);
                    while f(hi) <= 0.0 {
                        hi *= 2.0;
                        if !hi.is_finite() {
                            return Err(Error::Domain("no sign change above n̄".into()));
                        }
                    }
                    let n2 = bisect(f, nb, hi);
                    equilibria.push(Equilibrium {
                        value: n1,
                        stability: stability_at(p, n1),
                    });
                    equilibria.push(Equilibrium {
                        value: n2,
                        stability: stability_at(p, n2),
                    });
                    case_label = CaseLabel::CreationBistable;
                }
            }
        }
    }
    let report = EquilibriumReport {
        equilibria,
        case_label,
        nbar,
        F_at_nbar: f_nbar,
    };
    for e in report.finite() {
        let residual = f(e.value).abs();
        if residual > 1e-9 * (1.0 + e.value) {
            return Err(Error::Domain(format!(
                "equilibrium {} has residual {residual}",
                e.value
            )));
        }
    }
    Ok(report)
}

fn classify_linear(p: &ModelParams, c: f64) -> EquilibriumReport {
    let k = p.r - p.d;
    let mut equilibria = Vec::new();
    if k < 0.0 {
        equilibria.push(Equilibrium {
            value: c / -k,
            stability: Stability::Stable,
        });
    } else if c == 0.0 {
        equilibria.push(Equilibrium {
            value: 0.0,
            stability: if k == 0.0 {
                Stability::Semistable
            } else {
                Stability::Unstable
            },
        });
        if k > 0.0 {
            equilibria.push(infinity());
        }
    } else {
        equilibria.push(infinity());
    }
    EquilibriumReport {
        equilibria,
        case_label: CaseLabel::Linear,
        nbar: None,
        F_at_nbar: None,
    }
}

/// Tracks `sup_t |X^K(t) − n(t)|` over holding intervals.
struct SupError<'a> {
    ode: &'a OdeSolution,
    scale: f64,
    horizon: f64,
    sup: f64,
}

impl Observer for SupError<'_> {
    fn hold(&mut self, t0: f64, t1: f64, n: u64, _: f64, _: f64, _: bool) {
        let x = n as f64 / self.scale;
        let t1 = t1.min(self.horizon);
        let times = &self.ode.trajectory.times;
        let mut check = |t: f64| {
            self.sup = self.sup.max((x - self.ode.value_at(t)).abs());
        };
        check(t0);
        let start = times.partition_point(|&s| s <= t0);
        for &t in times[start..].iter().take_while(|&&s| s < t1) {
            check(t);
        }
        check(t1);
    }
}

/// Per-path `sup_{[0,T]} |X^K − n|` against a reference ODE path.
pub fn sup_error_samples(
    p: &ModelParams,
    regime: &ScalingRegime,
    x0: f64,
    ode: &OdeSolution,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    p.validate()?;
    regime.validate()?;
    let n0 = lattice_start(regime, x0)?;
    let horizon = ode.trajectory.final_time();
    let out = par_map_paths(n_paths, master_seed, |_, rng| {
        let mut obs = SupError {
            ode,
            scale: regime.scale(),
            horizon,
            sup: 0.0,
        };
        let end: EngineEnd = run_birth_death(
            |n| renormalized_rates(p, regime, n),
            n0,
            horizon,
            None,
            DEFAULT_EVENT_CAP,
            rng,
            &mut obs,
        );
        (obs.sup, end.stop)
    });
    if out.iter().any(|(_, s)| *s == EngineStop::Cap) {
        return Err(Error::Domain("event cap reached in sup-error ensemble".into()));
    }
    Ok(out.into_iter().map(|(s, _)| s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fig2(u_star: f64) -> ModelParams {
        ModelParams {
            u_star,
            ..ModelParams::default()
        }
    }

    fn remark(c: f64) -> ModelParams {
        ModelParams {
            u: 5.0,
            u_star: f64::INFINITY,
            gamma: 0.5,
            c,
            r: 1.0,
            d: 2.0,
            alpha: 0.1,
            a: 0.0,
        }
    }

    #[test]
    fn creation_off_case() {
        let rep = classify_equilibria(&fig2(5.0)).unwrap();
        assert_eq!(rep.case_label, CaseLabel::NoCreationStableZero);
        assert_eq!(rep.equilibria.len(), 2);
        assert_eq!(rep.equilibria[0].value, 0.0);
        assert_eq!(rep.equilibria[0].stability, Stability::Stable);
        let n2 = 10.0 / 0.3 - (5.0_f64 / 3.0).ln() / 0.03;
        assert_relative_eq!(rep.equilibria[1].value, n2, max_relative = 1e-15);
        assert_relative_eq!(rep.equilibria[1].value, 16.3058, epsilon = 1e-4);
        assert_eq!(rep.equilibria[1].stability, Stability::Unstable);
    }

    #[test]
    fn low_flow_diverges() {
        // u below ln(r/d)/α ≈ 5.108
        let p = ModelParams {
            u: 4.0,
            ..fig2(f64::INFINITY)
        };
        let rep = classify_equilibria(&p).unwrap();
        assert_eq!(rep.case_label, CaseLabel::CreationMonotone);
        assert_eq!(rep.equilibria, vec![infinity()]);
        let off = classify_equilibria(&ModelParams { u_star: 1.0, ..p }).unwrap();
        assert_eq!(off.case_label, CaseLabel::NoCreationUnstableZero);
    }

    #[test]
    fn derivative_table() {
        let p = fig2(f64::INFINITY);
        let (f0, f1, _) = F_eval(0.0, &p);
        assert_eq!(f0, 4.0);
        assert_relative_eq!(f1, 5.0 - 3.0 * 1.0_f64.exp(), max_relative = 1e-15);
        let (_, _, f2) = F_eval(2.0 / 0.03, &p);
        assert!(f2.abs() < 1e-15);
    }

    #[test]
    fn remark_configuration() {
        for (c, label) in [
            (5.0, CaseLabel::CreationBistable),
            (10.0, CaseLabel::CreationTangent),
            (15.0, CaseLabel::CreationPositiveMinimum),
        ] {
            let rep = classify_equilibria(&remark(c)).unwrap();
            assert_relative_eq!(rep.nbar.unwrap(), 10.0, max_relative = 1e-12);
            let expected = c - 1.0 / (0.1 * 2.0 * 0.5);
            assert!((rep.F_at_nbar.unwrap() - expected).abs() < 1e-12);
            assert_eq!(rep.case_label, label);
        }
        let rep = classify_equilibria(&remark(5.0)).unwrap();
        let stab: Vec<_> = rep.equilibria.iter().map(|e| e.stability).collect();
        assert_eq!(stab, vec![Stability::Stable, Stability::Unstable]);
    }

    #[test]
    fn linear_case() {
        let p = ModelParams {
            alpha: 0.0,
            r: 3.0,
            d: 5.0,
            ..fig2(f64::INFINITY)
        };
        let rep = classify_equilibria(&p).unwrap();
        assert_eq!(rep.case_label, CaseLabel::Linear);
        assert_eq!(rep.equilibria[0].value, 2.0);
        assert_eq!(rep.equilibria[0].stability, Stability::Stable);
    }

    #[test]
    fn ode_fixed_points_and_convergence() {
        let p = fig2(5.0);
        let rep = classify_equilibria(&p).unwrap();
        let n2 = rep.equilibria[1].value;
        let sol = ode_integrate(&p, n2, 5.0, 1e-3, true).unwrap();
        assert!(sol.trajectory.states.iter().all(|&x| (x - n2).abs() < 1e-9));
        let zero = ode_integrate(&p, 0.0, 5.0, 1e-2, true).unwrap();
        assert!(zero.trajectory.states.iter().all(|&x| x == 0.0));

        // fourth order: halving dt shrinks the error about 16x
        let q = fig2(f64::INFINITY);
        let reference = ode_integrate(&q, 1.0, 1.0, 1e-4, true)
            .unwrap()
            .trajectory
            .final_state();
        let e1 = (ode_integrate(&q, 1.0, 1.0, 0.02, true)
            .unwrap()
            .trajectory
            .final_state()
            - reference)
            .abs();
        let e2 = (ode_integrate(&q, 1.0, 1.0, 0.01, true)
            .unwrap()
            .trajectory
            .final_state()
            - reference)
            .abs();
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn bistable_basins() {
        // both roots below n*, where the clamped and unclamped fields agree
        let p = fig2(f64::INFINITY);
        let rep = classify_equilibria(&p).unwrap();
        let (n1, n2) = (rep.equilibria[0].value, rep.equilibria[1].value);
        let below = ode_integrate(&p, 0.5 * (n1 + n2), 50.0, 1e-3, true).unwrap();
        assert!((below.trajectory.final_state() - n1).abs() < 1e-6);
        let above = ode_integrate(&p, n2 + 0.5, 50.0, 1e-3, true).unwrap();
        let s = &above.trajectory.states;
        assert!(s.windows(2).all(|w| w[1] >= w[0]));
        assert!(above.trajectory.final_state() > 10.0 * n2);
        assert_relative_eq!(n1, 1.421_234_146_597, epsilon = 1e-9);
        assert_relative_eq!(n2, 14.517_811_670_538, epsilon = 1e-9);
    }

    #[test]
    fn non_accelerated_from_zero_stays_zero() {
        let p = fig2(5.0);
        let regime = ScalingRegime::new(RegimeKind::NonAccelerated, 100).unwrap();
        let tr = simulate_renormalized(&p, &regime, 0.0, 5.0, 1).unwrap();
        assert!(tr.states.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_scale_matches_plain_ssa() {
        let p = fig2(f64::INFINITY);
        let regime = ScalingRegime::new(RegimeKind::AcceleratedCreation, 1).unwrap();
        let a = simulate_renormalized(&p, &regime, 0.0, 2.0, 4).unwrap();
        let b = crate::ssa::simulate_ssa(&p, 0, 2.0, false, 4).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reported_equilibria_are_roots(
            u in 0.5f64..15.0, gamma in 0.05f64..1.0, c in 0.0f64..20.0,
            r in 0.1f64..6.0, d in 0.1f64..6.0, alpha in 0.02f64..0.5, creation_on in proptest::bool::ANY,
        ) {
            let p = ModelParams { u, u_star: if creation_on { f64::INFINITY } else { 0.0 }, gamma, c, r, d, alpha, a: 0.0 };
            let rep = classify_equilibria(&p).unwrap();
            let values: Vec<f64> = rep.equilibria.iter().map(|e| e.value).collect();
            prop_assert!(values.windows(2).all(|w| w[0] < w[1]));
            for e in rep.finite() {
                let (f, f1, _) = F_eval(e.value, &p);
                prop_assert!(f.abs() <= 1e-9 * (1.0 + e.value));
                match e.stability {
                    Stability::Stable => prop_assert!(f1 < 0.0),
                    Stability::Unstable => prop_assert!(f1 > 0.0),
                    Stability::Semistable => {}
                }
            }
        }
    }
}

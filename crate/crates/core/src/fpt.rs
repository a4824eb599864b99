//! Moments of the time the diffusion limit takes to climb from `n0` to the
//! stopping level `n*`, with `0` reflecting.
//!
//! With `Ψ` the scale density `exp ∫ 2b/σ²`,
//! `τ(n0) = 2 ∫_{n0}^{n*} Ψ(y)^{-1} ∫_0^y Ψ(z)/σ²(z) dz dy`.
//! Only the ratio `Ψ(z)/Ψ(y)` enters, so no lower cut-off is needed. Writing
//! `z = y·w^{a/c}` removes the `z^{c/a − 1}` endpoint behaviour and leaves
//! `∫_0^y Ψ(z)/(Ψ(y)·a·z) dz = (1/c) ∫_0^1 e^{L(z, y)} dw` with a bounded
//! integrand.

use std::cell::RefCell;

use rayon::prelude::*;

use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::model::ModelParams;
use crate::quad::{integrate, Chebyshev, QuadControl};
use crate::ssa::expm1_ratio;

/// Chebyshev nodes used for the `τ_{k−1}` interpolant in the moment recursion.
pub const MOMENT_NODES: usize = 64;

fn check_model(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if !(p.creation() > 0.0) {
        return Err(Error::Domain(
            "passage-time integrals diverge without creation (need c > 0 and u <= u*)".into(),
        ));
    }
    if !(p.a > 0.0) {
        return Err(Error::Domain("passage-time integrals need noise a > 0".into()));
    }
    Ok(())
}

// (d/a)·e^{αu}·(1 − e^{−αγn})/(αγ), finite as α → 0.
fn death_integral(n: f64, p: &ModelParams) -> f64 {
    let x = p.alpha * p.gamma * n;
    p.d / p.a * (p.alpha * p.u).exp() * n * expm1_ratio(-x)
}

/// `ln Ψ(n0)` with lower cut-off `eps`:
/// `(c/a) ln(n0/ε) + (r/a) n0 − (d/(αγa)) e^{αu} (1 − e^{−αγ n0})`.
pub fn log_psi(n0: f64, eps: f64, p: &ModelParams) -> Result<f64> {
    check_model(p)?;
    check_positive("eps", eps)?;
    if !(n0 >= eps) {
        return Err(Error::Domain(format!("psi needs n0 >= eps, got n0={n0}, eps={eps}")));
    }
    Ok(p.creation() / p.a * (n0 / eps).ln() + p.r / p.a * n0 - death_integral(n0, p))
}

pub fn psi(n0: f64, eps: f64, p: &ModelParams) -> Result<f64> {
    let v = log_psi(n0, eps, p)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("psi({n0}) overflows; use log_psi")))
    }
}

// ln(Ψ(z)/Ψ(y)) without the power factor.
fn log_ratio(z: f64, y: f64, p: &ModelParams) -> f64 {
    p.r / p.a * (z - y) + death_integral(y, p) - death_integral(z, p)
}

fn inner_control(ctl: &QuadControl) -> QuadControl {
    QuadControl {
        abs_tol: 0.0,
        rel_tol: (ctl.rel_tol * 1e-2).max(1e-14),
        max_intervals: ctl.max_intervals,
    }
}

/// `∫_0^y Ψ(z) g(z)/(Ψ(y)·a·z) dz`.
fn inner<G: Fn(f64) -> f64>(y: f64, p: &ModelParams, g: &G, ctl: &QuadControl) -> Result<f64> {
    let c = p.creation();
    if y == 0.0 {
        return Ok(g(0.0) / c);
    }
    let power = p.a / c;
    let r = integrate(
        |w: f64| {
            let z = y * w.powf(power);
            log_ratio(z, y, p).exp() * g(z)
        },
        0.0,
        1.0,
        &inner_control(ctl),
    )?;
    if !r.converged {
        return Err(Error::Quadrature(format!(
            "inner integral at y={y}: {} ± {}",
            r.value, r.abs_error
        )));
    }
    if !r.value.is_finite() {
        return Err(Error::Overflow(format!("inner integral at y={y} overflows")));
    }
    Ok(r.value / c)
}

// k ∫_{n0}^{n*} inner(y) dy
fn outer<G: Fn(f64) -> f64 + Sync>(n0: f64, p: &ModelParams, k: f64, g: &G, ctl: &QuadControl) -> Result<f64> {
    let n_star = p.n_star();
    if n0 >= n_star {
        return Ok(0.0);
    }
    let failure = RefCell::new(None);
    let r = integrate(
        |y| match inner(y, p, g, ctl) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        n0,
        n_star,
        ctl,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !r.converged {
        return Err(Error::Quadrature(format!(
            "outer integral on [{n0}, {n_star}]: {} ± {}",
            r.value, r.abs_error
        )));
    }
    let v = k * r.value;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("mean passage time from {n0} overflows")))
    }
}

fn check_start(n0: f64, p: &ModelParams) -> Result<()> {
    check_model(p)?;
    check_nonnegative("n0", n0)?;
    if n0 > p.n_star() {
        return Err(Error::Domain(format!(
            "start {n0} lies above the stopping level {}",
            p.n_star()
        )));
    }
    Ok(())
}

/// Mean time to reach `n*` from `n0`.
pub fn mean_fpt(n0: f64, p: &ModelParams, ctl: &QuadControl) -> Result<f64> {
    check_start(n0, p)?;
    outer(n0, p, 1.0, &|_| 1.0, ctl)
}

/// `τ′(n0) = −∫_0^{n0} Ψ(z)/(Ψ(n0)·a·z) dz`.
pub fn mean_fpt_derivative(n0: f64, p: &ModelParams, ctl: &QuadControl) -> Result<f64> {
    check_start(n0, p)?;
    Ok(-inner(n0, p, &|_| 1.0, ctl)?)
}

/// `τ` on Chebyshev nodes of `[0, n*]`.
pub fn mean_fpt_interpolant(p: &ModelParams, n_nodes: usize, ctl: &QuadControl) -> Result<Chebyshev> {
    check_model(p)?;
    moment_interpolant(&Chebyshev::constant(0.0, p.n_star(), 1.0)?, 1, p, n_nodes, ctl)
}

fn moment_interpolant(
    prev: &Chebyshev,
    k: u32,
    p: &ModelParams,
    n_nodes: usize,
    ctl: &QuadControl,
) -> Result<Chebyshev> {
    let n_star = p.n_star();
    let g = |z: f64| prev.eval(z);
    let values = Chebyshev::nodes(0.0, n_star, n_nodes)
        .into_par_iter()
        .map(|n| outer(n, p, f64::from(k), &g, ctl))
        .collect::<Result<Vec<f64>>>()?;
    Chebyshev::from_values(0.0, n_star, &values)
}

/// `E[T^k]` through `τ_k = 2k ∫_{n0}^{n*} Ψ(y)^{-1} ∫_0^y Ψ(z) τ_{k−1}(z)/σ²(z) dz dy`,
/// with `τ_{k−1}` interpolated on [`MOMENT_NODES`] Chebyshev nodes.
pub fn moment_fpt(k: u32, n0: f64, p: &ModelParams, ctl: &QuadControl) -> Result<f64> {
    check_start(n0, p)?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    if k == 1 {
        return mean_fpt(n0, p, ctl);
    }
    let mut prev = Chebyshev::constant(0.0, p.n_star(), 1.0)?;
    for j in 1..k {
        prev = moment_interpolant(&prev, j, p, MOMENT_NODES, ctl)?;
    }
    let g = |z: f64| prev.eval(z);
    outer(n0, p, f64::from(k), &g, ctl)
}

/// `b τ′ + (σ²/2) τ″ + 1` on the interior nodes of `τ`'s interpolant, with the
/// derivatives taken from the interpolant.
pub fn backward_residual(p: &ModelParams, n_nodes: usize, ctl: &QuadControl) -> Result<Vec<(f64, f64)>> {
    let tau = mean_fpt_interpolant(p, n_nodes, ctl)?;
    let d1 = tau.derivative();
    let d2 = d1.derivative();
    let (lo, hi) = tau.domain();
    Ok(Chebyshev::nodes(lo, hi, n_nodes)
        .into_iter()
        .filter(|&n| n > lo && n < hi)
        .map(|n| (n, p.drift(n) * d1.eval(n) + p.a * n * d2.eval(n) + 1.0))
        .collect())
}

/// One point of a flow-velocity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub u: f64,
    pub n_star: f64,
    pub tau: Option<f64>,
    pub error: Option<String>,
}

/// `τ(n0)` for each `u`, with `n*` recomputed; failures are recorded per point.
pub fn sweep_u(u_values: &[f64], template: &ModelParams, n0: f64, ctl: &QuadControl) -> Result<Vec<SweepPoint>> {
    for (i, &u) in u_values.iter().enumerate() {
        check_positive("u", u)?;
        if i > 0 && u <= u_values[i - 1] {
            return Err(Error::Domain("sweep velocities must be strictly ascending".into()));
        }
    }
    Ok(u_values
        .par_iter()
        .map(|&u| {
            let p = template.with_u(u);
            let result = mean_fpt(n0, &p, ctl);
            SweepPoint {
                u,
                n_star: p.n_star(),
                error: result.as_ref().err().map(|e| e.to_string()),
                tau: result.ok(),
            }
        })
        .collect())
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p adhesion-core --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use adhesion_core::cir::{self, CirParams, SpectralMode};
use adhesion_core::diffusion::{self, OuParams};
use adhesion_core::fpt;
use adhesion_core::limits::{self, CaseLabel, Stability};
use adhesion_core::quad::QuadControl;
use adhesion_core::rng::path_rng;
use adhesion_core::specfun::{bessel_i, gamma_fn, kummer_phi, kummer_phi_ds};
use adhesion_core::ssa;
use adhesion_core::stats::{ks_one_sample, ks_two_sample};
use adhesion_core::{ModelParams, RegimeKind, ScalingRegime, SummaryStats};
use rand::Rng;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Outcome);

/// Discrete-process illustration: u = 10, γ = 0.3, c = 4, r = 5, d = 3, α = 0.1.
fn illustration() -> ModelParams {
    ModelParams::default()
}

/// Passage-time parameters shared by criteria 9 and 10.
fn passage() -> ModelParams {
    ModelParams {
        u: 1.0,
        u_star: f64::INFINITY,
        gamma: 0.5,
        c: 1.0,
        r: 0.6,
        d: 0.7,
        alpha: 0.8,
        a: 0.1,
    }
}

/// Constant-rate model (α = 0) with the given `c, a, r, d`.
fn constant_rates(c: f64, a: f64, r: f64, d: f64) -> ModelParams {
    ModelParams {
        u: 1.0,
        u_star: f64::INFINITY,
        gamma: 1.0,
        c,
        r,
        d,
        alpha: 0.0,
        a,
    }
}

fn c1_moments() -> Outcome {
    let p = ModelParams {
        a: 0.0,
        ..constant_rates(4.0, 0.0, 3.0, 5.0)
    };
    let grid = [0.5, 1.0, 2.0, 5.0];
    let stats = ssa::ensemble_stats(&p, 0, &grid, 10_000, 101)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (&t, s) in grid.iter().zip(&stats) {
        let z = s.z_score(ssa::mean_exact_constant_rates(0.0, 4.0, 3.0, 5.0, t));
        ok &= z < 3.0;
        detail.push(format!("t={t}: z={z:.2}"));
    }
    let z_steady = stats[3].z_score(ssa::steady_mean(4.0, 3.0, 5.0));
    ok &= z_steady < 3.0;
    detail.push(format!("steady z={z_steady:.2}"));
    Ok((ok, detail.join(", ")))
}

fn c2_martingale() -> Outcome {
    let p = illustration();
    let samples = ssa::compensator_samples(&p, 5, 1.0, 10_000, 102)?;
    let m: Vec<f64> = samples.iter().map(|s| s.martingale).collect();
    let qv: Vec<f64> = samples.iter().map(|s| s.quadratic_compensator).collect();
    let sm = SummaryStats::from_samples(&m)?;
    let sq = SummaryStats::from_samples(&qv)?;
    let z = sm.z_score(0.0);
    let rel = (sm.variance - sq.mean).abs() / sq.mean;
    Ok((
        z < 3.0 && rel < 0.05,
        format!(
            "mean z={z:.2}, var {:.4} vs E[QV] {:.4} (rel {rel:.4})",
            sm.variance, sq.mean
        ),
    ))
}

fn c3_equilibria() -> Outcome {
    let p = ModelParams {
        u_star: 5.0,
        ..illustration()
    };
    let rep = limits::classify_equilibria(&p)?;
    let expected = p.u / p.gamma - (p.r / p.d).ln() / (p.alpha * p.gamma);
    let eq = &rep.equilibria;
    let mut ok = eq.len() == 2
        && eq[0].value == 0.0
        && eq[0].stability == Stability::Stable
        && (eq[1].value - expected).abs() < 1e-9
        && eq[1].stability == Stability::Unstable
        && eq.iter().all(|e| limits::F_eval(e.value, &p).0.abs() < 1e-9);
    let mut detail = vec![format!(
        "no creation: {:?} vs {expected:.4}",
        eq.iter().map(|e| e.value).collect::<Vec<_>>()
    )];

    let (u, gamma, r, d, alpha) = (5.0, 0.5, 1.0, 2.0, 0.1);
    let threshold = (d - r) * (d - r) / (alpha * d * gamma);
    for (c, label) in [
        (5.0, CaseLabel::CreationBistable),
        (threshold, CaseLabel::CreationTangent),
        (15.0, CaseLabel::CreationPositiveMinimum),
    ] {
        let q = ModelParams {
            u,
            u_star: f64::INFINITY,
            gamma,
            c,
            r,
            d,
            alpha,
            a: 0.0,
        };
        let rep = limits::classify_equilibria(&q)?;
        let f = rep.F_at_nbar.unwrap_or(f64::NAN);
        let err = (f - (c - threshold)).abs();
        ok &= rep.case_label == label && err < 1e-12;
        detail.push(format!("c={c}: {} F(nbar) err {err:.1e}", rep.case_label.as_str()));
    }
    Ok((ok, detail.join("; ")))
}

fn c4_scaling() -> Outcome {
    let p = illustration();
    let sup_errors =
        |kind: RegimeKind, x0: f64, with_creation: bool, seed: u64| -> Result<Vec<f64>, Box<dyn std::error::Error>> {
            let ode = limits::ode_integrate(&p, x0, 2.0, 1e-3, with_creation)?;
            let mut means = Vec::new();
            for (i, k) in [10u32, 100, 1000].into_iter().enumerate() {
                let regime = ScalingRegime::new(kind, k)?;
                let s = limits::sup_error_samples(&p, &regime, x0, &ode, 200, seed + i as u64)?;
                means.push(SummaryStats::from_samples(&s)?.mean);
            }
            Ok(means)
        };
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let accelerated = sup_errors(RegimeKind::AcceleratedCreation, 0.0, true, 110)?;
    // Without acceleration the creation term vanishes in the limit.
    let plain = sup_errors(RegimeKind::NonAccelerated, 5.0, false, 113)?;
    Ok((
        decreasing(&accelerated) && decreasing(&plain),
        format!("accelerated sup-errors {accelerated:.4?}; non-accelerated vs creation-free ODE {plain:.4?}"),
    ))
}

fn c5_diffusion_limit() -> Outcome {
    let p = ModelParams {
        u: 6.0,
        u_star: f64::INFINITY,
        gamma: 0.3,
        c: 0.5,
        r: 1.0,
        d: 1.5,
        alpha: 0.1,
        a: 0.05,
    };
    let regime = ScalingRegime::new(RegimeKind::AcceleratedDemography { eta: 1.0 }, 1000)?;
    let jump: Vec<f64> = limits::renormalized_grid_samples(&p, &regime, 0.5, &[1.0], 10_000, 120)?
        .into_iter()
        .map(|row| row[0])
        .collect();
    let sde = diffusion::euler_marginal_samples(&p, 0.5, 1e-3, 1.0, 10_000, 121)?;
    let ks = ks_two_sample(&jump, &sde)?;
    Ok((ks < 0.05, format!("KS {ks:.4}")))
}

fn c6_stationary() -> Outcome {
    let p = constant_rates(0.5, 1.5, 4.45, 4.5);
    let q = CirParams::from_model(&p)?;
    let samples = diffusion::euler_long_run_samples(&p, 10.0, 2e-3, 20.0, 100.0, 10_000, 130)?;
    let ks = ks_one_sample(&samples, |n| cir::stationary_cdf(n, &q).unwrap_or(f64::NAN))?;

    let diverging = CirParams::new(1.0, 2.0, 4.45, 4.5)?;
    let vanishing = CirParams::new(5.0, 2.0, 4.45, 4.5)?;
    let f = |n: f64, q: &CirParams| cir::stationary_density(n, q).unwrap_or(f64::NAN);
    let grows = f(1e-8, &diverging) > f(1e-4, &diverging) && f(1e-4, &diverging) > f(1e-2, &diverging);
    let shrinks = f(1e-8, &vanishing) < f(1e-4, &vanishing)
        && f(1e-4, &vanishing) < f(1e-2, &vanishing)
        && f(1e-8, &vanishing) < 1e-10;
    Ok((
        ks < 0.05 && grows && shrinks,
        format!("KS {ks:.4}, diverges at 0: {grows}, vanishes at 0: {shrinks}"),
    ))
}

fn c7_squared_ou() -> Outcome {
    let p = constant_rates(0.5, 0.5, 0.2, 1.0);
    let ou = OuParams::from_cir(0.5, 0.5, 0.2, 1.0).ok_or("2c/a is not an integer")?;
    let cir_samples = diffusion::euler_marginal_samples(&p, 1.0, 1e-3, 1.0, 10_000, 140)?;
    let ou_samples = diffusion::squared_ou_marginal_samples(&ou, 1.0, 1e-3, 1.0, 10_000, 141)?;
    let ks = ks_two_sample(&cir_samples, &ou_samples)?;
    Ok((ks < 0.05, format!("dimension {}, KS {ks:.4}", ou.dimension)))
}

fn c8_spectral() -> Outcome {
    let p = constant_rates(0.45, 0.5, 0.2, 1.0);
    let q = CirParams::from_model(&p)?;
    let (y, x) = (0.01, 1.0);
    let exp = cir::spectral_fpt(y, x, &q, 50, SpectralMode::ExactRoots)?;
    let mass = exp.survival(1e-4);
    let mut ok = (mass - 1.0).abs() <= 0.01;
    let mut detail = vec![format!("mass {mass:.5}")];

    let mut worst = 0.0f64;
    for alpha in [0.5, 1.0, 2.0] {
        let exact = cir::laplace_fpt(alpha, y, x, &q)?;
        worst = worst.max((exp.laplace(alpha) - exact).abs() / exact);
    }
    ok &= worst < 1e-3;
    detail.push(format!("Laplace rel err {worst:.2e}"));

    let hits = diffusion::hitting_time_samples(&p, y, x, 1e-3, 10_000, 150, None)?;
    let ks = ks_one_sample(&hits.samples, |t| exp.cdf(t))?;
    ok &= ks < 0.05 && hits.censored == 0;
    detail.push(format!("KS {ks:.4}, censored {}", hits.censored));
    Ok((ok, detail.join(", ")))
}

fn c9_mfpt() -> Outcome {
    let p = passage();
    let ctl = QuadControl::default();
    let tau = fpt::mean_fpt(0.0, &p, &ctl)?;
    let hits = diffusion::hitting_time_samples(&p, 0.0, p.n_star(), 1e-3, 10_000, 160, None)?;
    let mc = hits.stats.ok_or("every path censored")?;
    let rel = (tau - mc.mean).abs() / tau;
    let residual = fpt::backward_residual(&p, fpt::MOMENT_NODES, &ctl)?
        .into_iter()
        .map(|(_, r)| r.abs())
        .fold(0.0, f64::max);
    Ok((
        rel < 0.05 && residual < 1e-4 && hits.censored == 0,
        format!(
            "tau {tau:.4} vs MC {:.4} ± {:.4} (rel {rel:.4}), residual {residual:.1e}",
            mc.mean, mc.stderr
        ),
    ))
}

fn c10_sweep() -> Outcome {
    let ctl = QuadControl::default();
    let u: Vec<f64> = (1..=16).map(|i| 0.25 * i as f64).collect();
    let taus = |gamma: f64| -> Result<Vec<f64>, Box<dyn std::error::Error>> {
        let template = ModelParams { gamma, ..passage() };
        fpt::sweep_u(&u, &template, 0.0, &ctl)?
            .into_iter()
            .map(|pt| {
                pt.tau
                    .ok_or_else(|| format!("u={}: {}", pt.u, pt.error.unwrap_or_default()).into())
            })
            .collect()
    };
    let slow = taus(0.5)?;
    let fast = taus(1.0)?;
    let nondecreasing = slow.windows(2).all(|w| w[1] >= w[0]);
    let lowered = slow.iter().zip(&fast).all(|(s, f)| f < s);
    Ok((
        nondecreasing && lowered,
        format!(
            "tau(0.25) {:.4} .. tau(4) {:.4e}; nondecreasing {nondecreasing}, gamma=1 lower {lowered}",
            slow[0], slow[15]
        ),
    ))
}

fn c11_special_functions() -> Outcome {
    let mut worst_exp = 0.0f64;
    for i in 0..=100 {
        let z = 0.1 * i as f64;
        worst_exp = worst_exp.max((kummer_phi(1.0, 1.0, z)? - z.exp()).abs() / z.exp());
    }
    let i_half = bessel_i(0.5, 1.0)?;
    let i_err = (i_half - 0.937674).abs();
    let g_err = (gamma_fn(5.0)? - 24.0).abs();

    let mut rng = path_rng(170, 0);
    let mut worst_ds = 0.0f64;
    for _ in 0..20 {
        let s = rng.random_range(-5.0..5.0);
        let b = rng.random_range(0.5..3.0);
        let z = rng.random_range(0.0..5.0);
        let h = 1e-5;
        let fd = (kummer_phi(s + h, b, z)? - kummer_phi(s - h, b, z)?) / (2.0 * h);
        let exact = kummer_phi_ds(s, b, z)?;
        worst_ds = worst_ds.max((exact - fd).abs() / exact.abs().max(1e-300));
    }
    Ok((
        worst_exp < 1e-12 && i_err < 1e-6 && g_err < 1e-12 && worst_ds < 1e-6,
        format!("Phi(1,1,z)/e^z err {worst_exp:.1e}, I_1/2(1) err {i_err:.1e}, Gamma(5) err {g_err:.1e}, d_s Phi rel err {worst_ds:.1e}"),
    ))
}

fn c12_berkaoui() -> Outcome {
    let good = diffusion::berkaoui_valid(4.0, 0.55, 1.0, 0.01)?;
    let bad = diffusion::berkaoui_valid(0.55, 0.55, 1.0, 0.01)?;
    let ok = good.valid && (good.lhs - 5.410).abs() < 1e-3 && good.threshold == 4.4 && !bad.valid;
    Ok((
        ok,
        format!(
            "lhs {:.4} vs {:.1} valid {}; c=a valid {}",
            good.lhs, good.threshold, good.valid, bad.valid
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("closed-form moments", c1_moments),
        ("martingale identities", c2_martingale),
        ("equilibrium classification", c3_equilibria),
        ("scaling-limit convergence", c4_scaling),
        ("diffusion-limit convergence", c5_diffusion_limit),
        ("stationary law", c6_stationary),
        ("squared-OU representation", c7_squared_ou),
        ("spectral vs Laplace vs Monte Carlo", c8_spectral),
        ("mean passage time vs Monte Carlo", c9_mfpt),
        ("velocity sweep", c10_sweep),
        ("special functions", c11_special_functions),
        ("strong-convergence gate", c12_berkaoui),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} {:>2} {name}: {detail} [{secs:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
        failed += usize::from(!ok);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Experiment dispatch and result files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use adhesion_core::cir::{self, CirParams};
use adhesion_core::diffusion::{self, BerkaouiCheck, OuParams};
use adhesion_core::fpt;
use adhesion_core::limits::{self, F_eval};
use adhesion_core::quad::QuadControl;
use adhesion_core::rng::path_rng;
use adhesion_core::ssa::{self, SsaOptions};
use adhesion_core::stats::{ks_two_sample, SummaryStats};
use adhesion_core::{ModelParams, RegimeKind};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{linspace, ExperimentConfig, ExperimentKind};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    Empty,
}

impl Cell {
    fn write(&self, out: &mut String) {
        match self {
            // shortest representation that parses back to the same value
            Cell::F(v) => write!(out, "{v:?}").unwrap(),
            Cell::U(v) => write!(out, "{v}").unwrap(),
            Cell::S(s) => out.push_str(s),
            Cell::Empty => {}
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.write(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

/// A numerical failure at one point of an experiment that otherwise ran.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub point: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub results: Value,
    pub failures: Vec<Failure>,
}

/// Paths and checksums of the written files.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub csv_sha256: String,
    pub summary: Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn quad_control(cfg: &ExperimentConfig) -> QuadControl {
    QuadControl {
        abs_tol: cfg.numerics.quad_abs_tol,
        rel_tol: cfg.numerics.quad_rel_tol,
        max_intervals: cfg.numerics.quad_max_intervals,
    }
}

fn velocity(p: &ModelParams, n: f64) -> Cell {
    Cell::F(p.velocity(n))
}

/// Drift bound used by the Euler convergence check when none is configured.
pub fn default_drift_bound(p: &ModelParams) -> f64 {
    (p.r - p.d).abs().max((p.r - p.max_dissociation()).abs())
}

fn berkaoui(cfg: &ExperimentConfig) -> Option<(f64, BerkaouiCheck)> {
    let p = cfg.params();
    let bound = cfg.setup.drift_bound.unwrap_or_else(|| default_drift_bound(&p));
    if !(p.a > 0.0 && bound > 0.0) {
        return None;
    }
    diffusion::berkaoui_valid(p.creation(), p.a, bound, cfg.numerics.dt)
        .ok()
        .map(|chk| (bound, chk))
}

fn derived(cfg: &ExperimentConfig) -> Value {
    let p = cfg.params();
    let noisy = p.a > 0.0;
    let berk = berkaoui(cfg).map(|(bound, b)| {
        json!({
            "drift_bound": bound,
            "valid": b.valid,
            "lhs": b.lhs,
            "threshold": b.threshold,
            "drift_margin": b.drift_margin,
            "step_margin": b.step_margin,
            "near_threshold": b.near_threshold,
        })
    });
    json!({
        "n_star": p.n_star(),
        "creation_active": p.creation() > 0.0,
        "delta": noisy.then(|| 2.0 * p.creation() / p.a),
        "kappa": (p.d - p.r) / 2.0,
        "nu": noisy.then(|| p.creation() / p.a - 1.0),
        "berkaoui": berk,
    })
}

fn stats_json(s: &SummaryStats) -> Value {
    json!({"mean": s.mean, "variance": s.variance, "stderr": s.stderr, "n_samples": s.n_samples})
}

fn numerical(e: adhesion_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Runs the experiment in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Ssa => run_ssa(cfg),
        ExperimentKind::Renorm => run_renorm(cfg),
        ExperimentKind::Ode => run_ode(cfg),
        ExperimentKind::Equilibria => run_equilibria(cfg),
        ExperimentKind::Sde => run_sde(cfg),
        ExperimentKind::CirDensity => run_cir_density(cfg),
        ExperimentKind::CirStationary => run_cir_stationary(cfg),
        ExperimentKind::FptSpectral => run_fpt_spectral(cfg),
        ExperimentKind::LaplaceCheck => run_laplace_check(cfg),
        ExperimentKind::Mfpt => run_mfpt(cfg),
        ExperimentKind::SweepU => run_sweep_u(cfg),
        ExperimentKind::Convergence => run_convergence(cfg),
        ExperimentKind::OuRepr => run_ou_repr(cfg),
    }
}

fn path_table(p: &ModelParams, traj: &adhesion_core::Trajectory, state_name: &'static str) -> Table {
    let mut t = Table::new(&["t", state_name, "V"]);
    for (&time, &n) in traj.times.iter().zip(&traj.states) {
        t.push(vec![time.into(), n.into(), velocity(p, n)]);
    }
    t
}

fn path_results(traj: &adhesion_core::Trajectory) -> Value {
    json!({
        "points": traj.len(),
        "final_time": traj.final_time(),
        "final_state": traj.final_state(),
        "stopped_reason": traj.stopped_reason.as_str(),
    })
}

fn stats_table(grid: &[f64], stats: &[SummaryStats], exact: Option<&dyn Fn(f64) -> f64>) -> Table {
    let mut t = Table::new(&["t", "mean", "variance", "stderr", "exact_mean"]);
    for (&time, s) in grid.iter().zip(stats) {
        t.push(vec![
            time.into(),
            s.mean.into(),
            s.variance.into(),
            s.stderr.into(),
            exact.map(|f| f(time)).into(),
        ]);
    }
    t
}

fn run_ssa(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let n0 = cfg.setup.n0 as u64;
    if cfg.numerics.n_paths == 1 {
        let opts = SsaOptions {
            horizon: cfg.numerics.horizon,
            stop_at_n_star: cfg.setup.stop_at_n_star,
            event_cap: cfg.numerics.event_cap,
        };
        let traj = ssa::simulate_ssa_with(&p, n0, &opts, &mut path_rng(cfg.seed, 0)).map_err(numerical)?;
        return Ok(Outcome {
            table: path_table(&p, &traj, "N"),
            results: path_results(&traj),
            failures: Vec::new(),
        });
    }
    let grid = cfg.t_grid();
    let stats = ssa::ensemble_stats(&p, n0, &grid, cfg.numerics.n_paths, cfg.seed).map_err(numerical)?;
    let constant = p.alpha == 0.0;
    let exact = |t: f64| ssa::mean_exact_constant_rates(n0 as f64, p.creation(), p.r, p.d, t);
    let table = stats_table(&grid, &stats, constant.then_some(&exact as &dyn Fn(f64) -> f64));
    let last = stats.last().expect("nonempty grid");
    Ok(Outcome {
        table,
        results: json!({
            "n_paths": cfg.numerics.n_paths,
            "final": stats_json(last),
            "steady_mean": (constant && p.r < p.d).then(|| ssa::steady_mean(p.creation(), p.r, p.d)),
        }),
        failures: Vec::new(),
    })
}

fn run_renorm(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let reg_cfg = cfg.setup.regime.as_ref().expect("validated");
    let regime = reg_cfg.regime(reg_cfg.k)?;
    let x0 = cfg.setup.x0.unwrap_or(cfg.setup.n0);
    if cfg.numerics.n_paths == 1 {
        let opts = SsaOptions {
            horizon: cfg.numerics.horizon,
            stop_at_n_star: cfg.setup.stop_at_n_star,
            event_cap: cfg.numerics.event_cap,
        };
        let traj = limits::simulate_renormalized_with(&p, &regime, x0, &opts, &mut path_rng(cfg.seed, 0))
            .map_err(numerical)?;
        let mut results = path_results(&traj);
        results["lattice_start"] = json!(limits::lattice_start(&regime, x0).map_err(numerical)?);
        return Ok(Outcome {
            table: path_table(&p, &traj, "X"),
            results,
            failures: Vec::new(),
        });
    }
    let grid = cfg.t_grid();
    let stats = limits::renormalized_ensemble_stats(&p, &regime, x0, &grid, cfg.numerics.n_paths, cfg.seed)
        .map_err(numerical)?;
    Ok(Outcome {
        table: stats_table(&grid, &stats, None),
        results: json!({
            "n_paths": cfg.numerics.n_paths,
            "K": regime.k,
            "final": stats_json(stats.last().expect("nonempty grid")),
        }),
        failures: Vec::new(),
    })
}

fn run_ode(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let sol = limits::ode_integrate(
        &p,
        cfg.setup.n0,
        cfg.numerics.horizon,
        cfg.numerics.dt,
        cfg.setup.include_creation,
    )
    .map_err(numerical)?;
    let mut results = path_results(&sol.trajectory);
    results["clipped_steps"] = json!(sol.clipped_steps);
    Ok(Outcome {
        table: path_table(&p, &sol.trajectory, "n"),
        results,
        failures: Vec::new(),
    })
}

fn run_equilibria(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let report = limits::classify_equilibria(&p).map_err(numerical)?;
    let mut table = Table::new(&["value", "stability", "F"]);
    let mut list = Vec::new();
    for e in &report.equilibria {
        let finite = e.value.is_finite();
        let f = finite.then(|| F_eval(e.value, &p).0);
        table.push(vec![
            if finite { e.value.into() } else { Cell::S("inf".into()) },
            Cell::S(e.stability.as_str().into()),
            f.into(),
        ]);
        list.push(json!({
            "value": if finite { json!(e.value) } else { json!("inf") },
            "stability": e.stability.as_str(),
            "F": f,
        }));
    }
    Ok(Outcome {
        table,
        results: json!({
            "case_label": report.case_label.as_str(),
            "equilibria": list,
            "nbar": report.nbar,
            "F_at_nbar": report.F_at_nbar,
        }),
        failures: Vec::new(),
    })
}

fn run_sde(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let n = &cfg.numerics;
    if n.n_paths == 1 {
        let target = cfg.setup.stop_at_n_star.then(|| p.n_star());
        let traj =
            diffusion::euler_symmetrized(&p, cfg.setup.n0, n.dt, n.horizon, target, cfg.seed).map_err(numerical)?;
        return Ok(Outcome {
            table: path_table(&p, &traj, "N"),
            results: path_results(&traj),
            failures: Vec::new(),
        });
    }
    if cfg.setup.stop_at_n_star {
        let hits =
            diffusion::hitting_time_samples(&p, cfg.setup.n0, p.n_star(), n.dt, n.n_paths, cfg.seed, Some(n.horizon))
                .map_err(numerical)?;
        let mut table = Table::new(&["sample", "hitting_time"]);
        for (i, &t) in hits.samples.iter().enumerate() {
            table.push(vec![Cell::U(i as u64), t.into()]);
        }
        return Ok(Outcome {
            table,
            results: json!({
                "n_paths": hits.n_paths,
                "censored": hits.censored,
                "censored_fraction": hits.censored_fraction(),
                "horizon": hits.horizon,
                "stats": hits.stats.as_ref().map(stats_json),
            }),
            failures: Vec::new(),
        });
    }
    let samples =
        diffusion::euler_marginal_samples(&p, cfg.setup.n0, n.dt, n.horizon, n.n_paths, cfg.seed).map_err(numerical)?;
    let mut table = Table::new(&["path", "N", "V"]);
    for (i, &x) in samples.iter().enumerate() {
        table.push(vec![Cell::U(i as u64), x.into(), velocity(&p, x)]);
    }
    let stats = SummaryStats::from_samples(&samples).map_err(numerical)?;
    Ok(Outcome {
        table,
        results: json!({"t": n.horizon, "stats": stats_json(&stats)}),
        failures: Vec::new(),
    })
}

fn cir_params(cfg: &ExperimentConfig) -> Result<CirParams, CliError> {
    CirParams::from_model(&cfg.params()).map_err(|e| CliError::Validation(e.to_string()))
}

fn run_cir_density(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let q = cir_params(cfg)?;
    let t = cfg.numerics.horizon;
    let n0 = cfg.setup.n0;
    let (mean, var) = cir::mean_var(t, n0, &q).map_err(numerical)?;
    let hi = cfg.setup.x.unwrap_or(mean + 8.0 * var.sqrt());
    let grid = linspace(hi / cfg.numerics.grid_points as f64, hi, cfg.numerics.grid_points);
    let mut table = Table::new(&["n", "transition", "stationary"]);
    let mut failures = Vec::new();
    for &n in &grid {
        let tr = match cir::transition_density(n, t, n0, &q) {
            Ok(v) => Some(v),
            Err(e) => {
                failures.push(Failure {
                    point: format!("n={n:?}"),
                    error: e.to_string(),
                });
                None
            }
        };
        let st = (q.r < q.d).then(|| cir::stationary_density(n, &q).ok()).flatten();
        table.push(vec![Cell::F(n), tr.into(), st.into()]);
    }
    Ok(Outcome {
        table,
        results: json!({
            "t": t,
            "mean": mean,
            "variance": var,
            "zero_hit_class": cir::zero_hit_class(&q).as_str(),
        }),
        failures,
    })
}

fn run_cir_stationary(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let q = cir_params(cfg)?;
    let rate = (q.d - q.r) / q.a;
    let shape = q.c / q.a;
    let mean = shape / rate;
    let sd = shape.sqrt() / rate;
    let hi = cfg.setup.x.unwrap_or(mean + 8.0 * sd);
    let grid = linspace(hi / cfg.numerics.grid_points as f64, hi, cfg.numerics.grid_points);
    let mut table = Table::new(&["n", "density", "cdf"]);
    let mut failures = Vec::new();
    for &n in &grid {
        match (cir::stationary_density(n, &q), cir::stationary_cdf(n, &q)) {
            (Ok(f), Ok(c)) => table.push(vec![n.into(), f.into(), c.into()]),
            (a, b) => {
                let e = a.err().or(b.err()).expect("one side failed");
                failures.push(Failure {
                    point: format!("n={n:?}"),
                    error: e.to_string(),
                });
                table.push(vec![n.into(), Cell::Empty, Cell::Empty]);
            }
        }
    }
    Ok(Outcome {
        table,
        results: json!({
            "mean": mean,
            "variance": shape / (rate * rate),
            "shape": shape,
            "rate": rate,
            "zero_hit_class": cir::zero_hit_class(&q).as_str(),
            "density_at_zero": if shape < 1.0 { "infinite" } else if shape > 1.0 { "zero" } else { "finite" },
        }),
        failures,
    })
}

fn spectral(cfg: &ExperimentConfig) -> Result<(CirParams, f64, cir::SpectralExpansion), CliError> {
    let q = cir_params(cfg)?;
    let x = cfg.setup.x.unwrap_or(cfg.params().n_star());
    let exp = cir::spectral_fpt(
        cfg.setup.y,
        x,
        &q,
        cfg.numerics.n_terms,
        cfg.numerics.spectral_mode.into(),
    )
    .map_err(numerical)?;
    Ok((q, x, exp))
}

fn run_fpt_spectral(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (q, x, exp) = spectral(cfg)?;
    let hi = cfg.numerics.horizon;
    let t0 = hi / cfg.numerics.grid_points as f64;
    let grid = linspace(t0, hi, cfg.numerics.grid_points);
    let mut table = Table::new(&["t", "density", "survival", "cdf"]);
    for &t in &grid {
        table.push(vec![
            t.into(),
            exp.density(t).into(),
            exp.survival(t).into(),
            exp.cdf(t).into(),
        ]);
    }
    let min_density = exp.min_density(t0, hi, 10 * cfg.numerics.grid_points);
    let bound = (cfg.setup.y > 0.0)
        .then(|| cir::truncation_bound(exp.len(), t0, cfg.setup.y, x, &q).ok())
        .flatten();
    Ok(Outcome {
        table,
        results: json!({
            "mode": exp.mode.as_str(),
            "y": cfg.setup.y,
            "x": x,
            "n_terms": exp.len(),
            "eigenvalues": exp.eigenvalues,
            "coefficients": exp.coefficients,
            "mean": exp.mean(),
            "min_density": min_density,
            "negative_density": min_density < 0.0,
            "truncation_bound_at_first_time": bound,
        }),
        failures: Vec::new(),
    })
}

fn run_laplace_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (q, x, exp) = spectral(cfg)?;
    let mut table = Table::new(&["alpha", "kummer", "spectral", "abs_diff"]);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for &alpha in &cfg.setup.alphas {
        let s = exp.laplace(alpha);
        match cir::laplace_fpt(alpha, cfg.setup.y, x, &q) {
            Ok(k) => {
                worst = worst.max((k - s).abs());
                table.push(vec![alpha.into(), k.into(), s.into(), (k - s).abs().into()]);
            }
            Err(e) => {
                failures.push(Failure {
                    point: format!("alpha={alpha:?}"),
                    error: e.to_string(),
                });
                table.push(vec![alpha.into(), Cell::Empty, s.into(), Cell::Empty]);
            }
        }
    }
    Ok(Outcome {
        table,
        results: json!({"n_terms": exp.len(), "mode": exp.mode.as_str(), "max_abs_diff": worst}),
        failures,
    })
}

fn run_mfpt(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let ctl = quad_control(cfg);
    let grid = linspace(0.0, p.n_star(), cfg.numerics.grid_points);
    let mut table = Table::new(&["n0", "tau", "tau_prime"]);
    let mut failures = Vec::new();
    for &n0 in &grid {
        let tau = fpt::mean_fpt(n0, &p, &ctl);
        let dtau = fpt::mean_fpt_derivative(n0, &p, &ctl);
        for e in [tau.as_ref().err(), dtau.as_ref().err()].into_iter().flatten() {
            failures.push(Failure {
                point: format!("n0={n0:?}"),
                error: e.to_string(),
            });
        }
        table.push(vec![n0.into(), tau.ok().into(), dtau.ok().into()]);
    }
    let tau = fpt::mean_fpt(cfg.setup.n0, &p, &ctl).map_err(numerical)?;
    let residual = fpt::backward_residual(&p, cfg.numerics.n_nodes, &ctl)
        .map(|r| r.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max));
    if let Err(e) = &residual {
        failures.push(Failure {
            point: "backward_residual".into(),
            error: e.to_string(),
        });
    }
    Ok(Outcome {
        table,
        results: json!({
            "n0": cfg.setup.n0,
            "tau": tau,
            "max_backward_residual": residual.ok(),
        }),
        failures,
    })
}

fn run_sweep_u(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let points = fpt::sweep_u(&cfg.setup.u_values, &p, cfg.setup.n0, &quad_control(cfg)).map_err(numerical)?;
    let mut table = Table::new(&["u", "n_star", "tau"]);
    let mut failures = Vec::new();
    for pt in &points {
        if let Some(e) = &pt.error {
            failures.push(Failure {
                point: format!("u={:?}", pt.u),
                error: e.clone(),
            });
        }
        table.push(vec![pt.u.into(), pt.n_star.into(), pt.tau.into()]);
    }
    let taus: Vec<f64> = points.iter().filter_map(|p| p.tau).collect();
    Ok(Outcome {
        table,
        results: json!({
            "nondecreasing": taus.windows(2).all(|w| w[1] >= w[0]),
            "ratio_last_first": (taus.len() >= 2).then(|| taus[taus.len() - 1] / taus[0]),
        }),
        failures,
    })
}

fn run_convergence(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let reg_cfg = cfg.setup.regime.as_ref().expect("validated");
    let x0 = cfg.setup.x0.unwrap_or(cfg.setup.n0);
    let with_creation = !matches!(reg_cfg.kind()?, RegimeKind::NonAccelerated);
    let ode = limits::ode_integrate(&p, x0, cfg.numerics.horizon, cfg.numerics.dt, with_creation).map_err(numerical)?;
    let mut table = Table::new(&["K", "mean_sup_error", "stderr"]);
    let mut failures = Vec::new();
    let mut means = Vec::new();
    for (i, &k) in cfg.setup.k_values.iter().enumerate() {
        let regime = reg_cfg.regime(k)?;
        let seed = cfg.seed.wrapping_add(i as u64);
        match limits::sup_error_samples(&p, &regime, x0, &ode, cfg.numerics.n_paths, seed)
            .and_then(|s| SummaryStats::from_samples(&s))
        {
            Ok(s) => {
                means.push(s.mean);
                table.push(vec![Cell::U(u64::from(k)), s.mean.into(), s.stderr.into()]);
            }
            Err(e) => {
                failures.push(Failure {
                    point: format!("K={k}"),
                    error: e.to_string(),
                });
                table.push(vec![Cell::U(u64::from(k)), Cell::Empty, Cell::Empty]);
            }
        }
    }
    Ok(Outcome {
        table,
        results: json!({
            "reference_includes_creation": with_creation,
            "decreasing": means.windows(2).all(|w| w[1] < w[0]),
        }),
        failures,
    })
}

fn run_ou_repr(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let q = cir_params(cfg)?;
    let ou = OuParams::from_cir(q.c, q.a, q.r, q.d)
        .ok_or_else(|| CliError::Validation("2c/a must be a positive integer".into()))?;
    let n = &cfg.numerics;
    let cir_samples =
        diffusion::euler_marginal_samples(&p, cfg.setup.n0, n.dt, n.horizon, n.n_paths, cfg.seed).map_err(numerical)?;
    let ou_samples =
        diffusion::squared_ou_marginal_samples(&ou, cfg.setup.n0, n.dt, n.horizon, n.n_paths, cfg.seed.wrapping_add(1))
            .map_err(numerical)?;
    let ks = ks_two_sample(&cir_samples, &ou_samples).map_err(numerical)?;
    let mut table = Table::new(&["path", "cir", "squared_ou"]);
    for (i, (a, b)) in cir_samples.iter().zip(&ou_samples).enumerate() {
        table.push(vec![Cell::U(i as u64), (*a).into(), (*b).into()]);
    }
    let (mean, var) = cir::mean_var(n.horizon, cfg.setup.n0, &q).map_err(numerical)?;
    Ok(Outcome {
        table,
        results: json!({
            "dimension": ou.dimension,
            "ks_two_sample": ks,
            "cir_stats": stats_json(&SummaryStats::from_samples(&cir_samples).map_err(numerical)?),
            "ou_stats": stats_json(&SummaryStats::from_samples(&ou_samples).map_err(numerical)?),
            "exact_mean": mean,
            "exact_variance": var,
        }),
        failures: Vec::new(),
    })
}

fn summary(
    cfg: &ExperimentConfig,
    outcome: Option<&Outcome>,
    error: Option<&str>,
    csv_path: &Path,
    csv_sha: &str,
    rows: usize,
    runtime: f64,
) -> Value {
    let config = serde_json::to_value(cfg).expect("config serializes");
    // the output location does not affect results
    let mut hashed = config.clone();
    hashed["output"] = Value::Null;
    let config_sha = sha256_hex(serde_json::to_string(&hashed).expect("value serializes").as_bytes());
    let failures: Vec<Value> = outcome
        .map(|o| {
            o.failures
                .iter()
                .map(|f| json!({"point": f.point, "error": f.error}))
                .collect()
        })
        .unwrap_or_default();
    let status = match (error, failures.is_empty()) {
        (Some(_), _) => "failed",
        (None, true) => "ok",
        (None, false) => "partial",
    };
    json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment.as_str(),
        "status": status,
        "error": error,
        "seed": cfg.seed,
        "config": config,
        "config_sha256": config_sha,
        "derived": derived(cfg),
        "results": outcome.map_or(Value::Null, |o| o.results.clone()),
        "failures": failures,
        "csv": {"path": csv_path.display().to_string(), "sha256": csv_sha, "rows": rows},
        "runtime_seconds": runtime,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs the experiment and writes `<prefix>.csv` and `<prefix>.json`.
///
/// A numerical failure of the whole experiment still writes a summary (and a
/// header-only CSV) before the error is returned.
pub fn execute(cfg: &ExperimentConfig) -> Result<Written, CliError> {
    cfg.validate()?;
    let prefix = cfg.output_prefix();
    let csv_path = PathBuf::from(format!("{prefix}.csv"));
    let json_path = PathBuf::from(format!("{prefix}.json"));
    let start = Instant::now();
    let result = run(cfg);
    let runtime = start.elapsed().as_secs_f64();
    let (csv, outcome, error) = match result {
        Ok(o) => (o.table.to_csv(), Some(o), None),
        Err(CliError::Numerical(msg)) => (String::from("error\n"), None, Some(msg)),
        Err(e) => return Err(e),
    };
    let csv_sha = sha256_hex(csv.as_bytes());
    write_file(&csv_path, csv.as_bytes())?;
    let rows = outcome.as_ref().map_or(0, |o| o.table.rows.len());
    let summary = summary(
        cfg,
        outcome.as_ref(),
        error.as_deref(),
        &csv_path,
        &csv_sha,
        rows,
        runtime,
    );
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&json_path, text.as_bytes())?;
    if let Some(msg) = error {
        return Err(CliError::Numerical(msg));
    }
    Ok(Written {
        csv_path,
        json_path,
        csv_sha256: csv_sha,
        summary,
    })
}

//! Experiment configuration: one strict JSON document per run.
//!
//! Model constants have no defaults. Numerics and setup fields default as
//! documented on [`Numerics`] and [`Setup`]. Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use adhesion_core::cir::SpectralMode;
use adhesion_core::{ModelParams, RegimeKind, ScalingRegime};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Ssa,
    Renorm,
    Ode,
    Equilibria,
    Sde,
    CirDensity,
    CirStationary,
    FptSpectral,
    LaplaceCheck,
    Mfpt,
    SweepU,
    Convergence,
    OuRepr,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 13] = [
        Self::Ssa,
        Self::Renorm,
        Self::Ode,
        Self::Equilibria,
        Self::Sde,
        Self::CirDensity,
        Self::CirStationary,
        Self::FptSpectral,
        Self::LaplaceCheck,
        Self::Mfpt,
        Self::SweepU,
        Self::Convergence,
        Self::OuRepr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ssa => "ssa",
            Self::Renorm => "renorm",
            Self::Ode => "ode",
            Self::Equilibria => "equilibria",
            Self::Sde => "sde",
            Self::CirDensity => "cir_density",
            Self::CirStationary => "cir_stationary",
            Self::FptSpectral => "fpt_spectral",
            Self::LaplaceCheck => "laplace_check",
            Self::Mfpt => "mfpt",
            Self::SweepU => "sweep_u",
            Self::Convergence => "convergence",
            Self::OuRepr => "ou_repr",
        }
    }

    fn needs_constant_rates(&self) -> bool {
        matches!(
            self,
            Self::CirDensity | Self::CirStationary | Self::FptSpectral | Self::LaplaceCheck | Self::OuRepr
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub u: f64,
    /// Creation threshold; absent or `null` means no threshold.
    #[serde(default)]
    pub u_star: Option<f64>,
    pub gamma: f64,
    pub c: f64,
    pub r: f64,
    pub d: f64,
    pub alpha: f64,
    pub a: f64,
}

impl ModelConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            u: self.u,
            u_star: self.u_star.unwrap_or(f64::INFINITY),
            gamma: self.gamma,
            c: self.c,
            r: self.r,
            d: self.d,
            alpha: self.alpha,
            a: self.a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    ExactRoots,
    Asymptotic,
    Hybrid,
}

impl From<ModeConfig> for SpectralMode {
    fn from(m: ModeConfig) -> Self {
        match m {
            ModeConfig::ExactRoots => SpectralMode::ExactRoots,
            ModeConfig::Asymptotic => SpectralMode::Asymptotic,
            ModeConfig::Hybrid => SpectralMode::Hybrid,
        }
    }
}

/// Numerical controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Euler / ODE step (default `1e-3`).
    pub dt: f64,
    /// Simulation horizon, also the evaluation time of marginal laws (default `10`).
    pub horizon: f64,
    /// Monte Carlo paths (default `1000`).
    pub n_paths: usize,
    /// Spectral terms (default `50`).
    pub n_terms: usize,
    pub spectral_mode: ModeConfig,
    /// Output grid size (default `101`).
    pub grid_points: usize,
    /// Chebyshev nodes for passage-time interpolants (default `64`).
    pub n_nodes: usize,
    pub quad_abs_tol: f64,
    pub quad_rel_tol: f64,
    pub quad_max_intervals: usize,
    /// Events per jump-process path before giving up (default `1e7`).
    pub event_cap: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 10.0,
            n_paths: 1000,
            n_terms: 50,
            spectral_mode: ModeConfig::ExactRoots,
            grid_points: 101,
            n_nodes: 64,
            quad_abs_tol: 1e-10,
            quad_rel_tol: 1e-10,
            quad_max_intervals: 2000,
            event_cap: adhesion_core::ssa::DEFAULT_EVENT_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    AcceleratedCreation,
    NonAccelerated,
    AcceleratedDemography,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub kind: RegimeName,
    /// Population scale `K` (ignored by `convergence`, which uses `k_values`).
    #[serde(default = "default_k")]
    pub k: u32,
    /// Demographic exponent for `accelerated_demography`.
    #[serde(default)]
    pub eta: Option<f64>,
}

fn default_k() -> u32 {
    100
}

impl RegimeConfig {
    pub fn kind(&self) -> Result<RegimeKind, CliError> {
        Ok(match self.kind {
            RegimeName::AcceleratedCreation => RegimeKind::AcceleratedCreation,
            RegimeName::NonAccelerated => RegimeKind::NonAccelerated,
            RegimeName::AcceleratedDemography => RegimeKind::AcceleratedDemography {
                eta: self.eta.ok_or_else(|| {
                    CliError::Validation("setup.regime.eta is required for accelerated_demography".into())
                })?,
            },
        })
    }

    pub fn regime(&self, k: u32) -> Result<ScalingRegime, CliError> {
        ScalingRegime::new(self.kind()?, k).map_err(|e| CliError::Validation(format!("setup.regime: {e}")))
    }
}

/// Experiment-specific inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Setup {
    /// Starting bond count (default `0`; an integer for `ssa`).
    pub n0: f64,
    /// Starting density of renormalized runs (default: `n0`).
    pub x0: Option<f64>,
    /// Start level of spectral passage times (default `0.01`).
    pub y: f64,
    /// Target level of spectral passage times (default: `n*`).
    pub x: Option<f64>,
    pub regime: Option<RegimeConfig>,
    /// Stop jump and Euler paths at `n*` (default `false`).
    pub stop_at_n_star: bool,
    /// Keep creation in the limit ODE (default `true`).
    pub include_creation: bool,
    /// Output times; default is `grid_points` equally spaced on `[0, horizon]`.
    pub t_grid: Option<Vec<f64>>,
    /// Population scales for `convergence` (default `[10, 100, 1000]`).
    pub k_values: Vec<u32>,
    /// Flow velocities for `sweep_u` (default `0.25, 0.5, …, 4`).
    pub u_values: Vec<f64>,
    /// Transform variables for `laplace_check` (default `[0.5, 1, 2]`).
    pub alphas: Vec<f64>,
    /// Drift bound `P` of the Euler convergence check (default:
    /// `max(|r − d|, |r − d·e^{αu}|)`).
    pub drift_bound: Option<f64>,
}

impl Default for Setup {
    fn default() -> Self {
        Self {
            n0: 0.0,
            x0: None,
            y: 0.01,
            x: None,
            regime: None,
            stop_at_n_star: false,
            include_creation: true,
            t_grid: None,
            k_values: vec![10, 100, 1000],
            u_values: (1..=16).map(|i| 0.25 * f64::from(i)).collect(),
            alphas: vec![0.5, 1.0, 2.0],
            drift_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub setup: Setup,
    pub seed: u64,
    /// Output path prefix; `.csv` and `.json` are appended (default: the
    /// experiment name).
    #[serde(default)]
    pub output: Option<String>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn finite(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be > 0, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<(), CliError> {
    finite(name, v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be >= 0, got {v}")))
    }
}

fn in_range(name: &str, v: usize, lo: usize, hi: usize) -> Result<(), CliError> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [{lo}, {hi}], got {v}")))
    }
}

fn ascending(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(invalid(format!("{name} must not be empty")));
    }
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(format!("{name} must be strictly ascending")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn params(&self) -> ModelParams {
        self.model.params()
    }

    pub fn output_prefix(&self) -> String {
        self.output
            .clone()
            .unwrap_or_else(|| self.experiment.as_str().to_string())
    }

    /// Output times: `setup.t_grid`, or an even grid on `[0, horizon]`.
    pub fn t_grid(&self) -> Vec<f64> {
        match &self.setup.t_grid {
            Some(g) => g.clone(),
            None => linspace(0.0, self.numerics.horizon, self.numerics.grid_points),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        for (name, v) in [
            ("model.u", m.u),
            ("model.c", m.c),
            ("model.r", m.r),
            ("model.alpha", m.alpha),
            ("model.a", m.a),
        ] {
            nonnegative(name, v)?;
        }
        positive("model.gamma", m.gamma)?;
        positive("model.d", m.d)?;
        if let Some(us) = m.u_star {
            nonnegative("model.u_star", us)?;
        }
        self.params().validate().map_err(|e| invalid(format!("model: {e}")))?;

        let n = &self.numerics;
        positive("numerics.dt", n.dt)?;
        positive("numerics.horizon", n.horizon)?;
        if n.horizon > 1e6 {
            return Err(invalid("numerics.horizon must be <= 1e6"));
        }
        if n.dt > n.horizon {
            return Err(invalid("numerics.dt must not exceed numerics.horizon"));
        }
        in_range("numerics.n_paths", n.n_paths, 1, 10_000_000)?;
        in_range("numerics.n_terms", n.n_terms, 1, 10_000)?;
        in_range("numerics.grid_points", n.grid_points, 2, 1_000_000)?;
        in_range("numerics.n_nodes", n.n_nodes, 4, 1024)?;
        in_range("numerics.quad_max_intervals", n.quad_max_intervals, 1, 1_000_000)?;
        for (name, v) in [
            ("numerics.quad_abs_tol", n.quad_abs_tol),
            ("numerics.quad_rel_tol", n.quad_rel_tol),
        ] {
            nonnegative(name, v)?;
            if v >= 1.0 {
                return Err(invalid(format!("{name} must be < 1")));
            }
        }
        if n.quad_abs_tol == 0.0 && n.quad_rel_tol == 0.0 {
            return Err(invalid("quadrature tolerances cannot both be zero"));
        }
        if n.event_cap == 0 {
            return Err(invalid("numerics.event_cap must be >= 1"));
        }

        let s = &self.setup;
        nonnegative("setup.n0", s.n0)?;
        if let Some(x0) = s.x0 {
            nonnegative("setup.x0", x0)?;
        }
        nonnegative("setup.y", s.y)?;
        if let Some(x) = s.x {
            positive("setup.x", x)?;
        }
        if let Some(g) = &s.t_grid {
            if g.is_empty() || g.windows(2).any(|w| w[1] < w[0]) {
                return Err(invalid("setup.t_grid must be nonempty and nondecreasing"));
            }
            for &t in g {
                nonnegative("setup.t_grid", t)?;
            }
        }
        if let Some(b) = s.drift_bound {
            positive("setup.drift_bound", b)?;
        }
        if let Some(reg) = &s.regime {
            reg.regime(reg.k)?;
        }
        self.validate_for_kind()
    }

    fn validate_for_kind(&self) -> Result<(), CliError> {
        let (m, s, kind) = (&self.model, &self.setup, self.experiment);
        let p = self.params();
        if kind.needs_constant_rates() {
            if m.alpha != 0.0 {
                return Err(invalid(format!("{kind} needs constant rates (model.alpha = 0)")));
            }
            if !(m.a > 0.0 && p.creation() > 0.0) {
                return Err(invalid(format!("{kind} needs model.a > 0 and active creation c > 0")));
            }
        }
        match kind {
            ExperimentKind::Ssa => {
                if s.n0.fract() != 0.0 {
                    return Err(invalid("ssa needs an integer setup.n0"));
                }
            }
            ExperimentKind::Renorm | ExperimentKind::Convergence => {
                if s.regime.is_none() {
                    return Err(invalid(format!("{kind} needs setup.regime")));
                }
                if kind == ExperimentKind::Convergence && (s.k_values.is_empty() || s.k_values.contains(&0)) {
                    return Err(invalid("setup.k_values must be nonempty and >= 1"));
                }
            }
            ExperimentKind::Sde => {
                if !(m.a > 0.0) {
                    return Err(invalid("sde needs model.a > 0"));
                }
            }
            ExperimentKind::CirStationary | ExperimentKind::FptSpectral | ExperimentKind::LaplaceCheck => {
                if !(m.r < m.d) {
                    return Err(invalid(format!("{kind} needs r < d")));
                }
            }
            ExperimentKind::Mfpt | ExperimentKind::SweepU => {
                if !(m.a > 0.0 && p.creation() > 0.0) {
                    return Err(invalid(format!("{kind} needs model.a > 0 and active creation c > 0")));
                }
                if kind == ExperimentKind::SweepU {
                    ascending("setup.u_values", &s.u_values)?;
                    for &u in &s.u_values {
                        positive("setup.u_values", u)?;
                    }
                } else if s.n0 > p.n_star() {
                    return Err(invalid("mfpt needs setup.n0 <= n*"));
                }
            }
            ExperimentKind::OuRepr => {
                if !(m.r < m.d) {
                    return Err(invalid("ou_repr needs r < d"));
                }
                let dim = 2.0 * m.c / m.a;
                if (dim - dim.round()).abs() > 1e-9 * dim.max(1.0) || dim.round() < 1.0 {
                    return Err(invalid(format!(
                        "ou_repr needs 2c/a to be a positive integer, got {dim}"
                    )));
                }
            }
            _ => {}
        }
        if matches!(kind, ExperimentKind::FptSpectral | ExperimentKind::LaplaceCheck) {
            let x = s.x.unwrap_or(p.n_star());
            positive("target level x", x)?;
            if s.y > x {
                return Err(invalid("setup.y must not exceed the target level"));
            }
        }
        if kind == ExperimentKind::LaplaceCheck {
            for &a in &s.alphas {
                positive("setup.alphas", a)?;
            }
            if s.alphas.is_empty() {
                return Err(invalid("setup.alphas must not be empty"));
            }
        }
        Ok(())
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment": "equilibria",
        "model": {"u": 10, "u_star": 5, "gamma": 0.3, "c": 4, "r": 5, "d": 3, "alpha": 0.1, "a": 0},
        "seed": 7
    }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.numerics, Numerics::default());
        assert_eq!(cfg.output_prefix(), "equilibria");
        assert_eq!(cfg.params().u_star, 5.0);
    }

    #[test]
    fn missing_u_star_means_no_threshold() {
        let text = MINIMAL.replace(r#""u_star": 5, "#, "");
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg.params().u_star, f64::INFINITY);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace(r#""seed": 7"#, r#""seed": 7, "colour": 1"#);
        assert!(ExperimentConfig::from_json(&text).is_err());
        let text = MINIMAL.replace(r#""a": 0"#, r#""a": 0, "b": 1"#);
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn model_fields_have_no_defaults() {
        let text = MINIMAL.replace(r#""gamma": 0.3, "#, "");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn bad_values_fail_validation() {
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.numerics.dt = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.experiment = ExperimentKind::CirDensity;
        assert!(cfg.validate().is_err(), "alpha > 0 is not a constant-rate model");
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.experiment = ExperimentKind::Renorm;
        assert!(cfg.validate().is_err(), "regime required");
    }

    #[test]
    fn every_kind_round_trips_by_name() {
        for kind in ExperimentKind::ALL {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.as_str()));
            assert_eq!(serde_json::from_str::<ExperimentKind>(&json).unwrap(), kind);
        }
    }

    #[test]
    fn linspace_hits_endpoints() {
        let g = linspace(0.0, 2.0, 5);
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}

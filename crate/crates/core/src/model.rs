//! Model constants and the rate laws shared by every simulator and solver.
//!
//! The bond population `N` jumps `+1` at rate `λ(n) = c·[u ≤ u*] + r·n` and
//! `-1` at rate `μ(n) = n·d·exp(α·(u − γn)₊)`. The cell velocity is
//! `V = (u − γN)₊`, so the cell stops once `N` reaches `n* = u/γ`.
//!
//! The dissociation exponent is clamped at zero past `n*`: the rate law is
//! only physically meaningful for `n ≤ n*`, and the clamp keeps every
//! evaluation total without touching the dynamics before the stopping level.

use crate::error::{check_finite, check_nonnegative, check_positive, Error, Result};

/// Scalar constants of the adhesion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Flow velocity.
    pub u: f64,
    /// Creation threshold velocity; creation is switched off when `u > u_star`.
    pub u_star: f64,
    /// Velocity lost per bond.
    pub gamma: f64,
    /// Spontaneous creation rate.
    pub c: f64,
    /// Per-bond reproduction rate.
    pub r: f64,
    /// Unstressed dissociation rate.
    pub d: f64,
    /// Force sensitivity of dissociation.
    pub alpha: f64,
    /// Demographic-noise intensity (diffusion regime only).
    pub a: f64,
}

impl Default for ModelParams {
    /// Parameters of the discrete-process illustration (creation always on).
    fn default() -> Self {
        Self {
            u: 10.0,
            u_star: f64::INFINITY,
            gamma: 0.3,
            c: 4.0,
            r: 5.0,
            d: 3.0,
            alpha: 0.1,
            a: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        check_nonnegative("u", self.u)?;
        if self.u_star.is_nan() || self.u_star < 0.0 {
            return Err(Error::InvalidParameter {
                name: "u_star",
                value: self.u_star,
                reason: "must be >= 0 (may be +inf)",
            });
        }
        check_positive("gamma", self.gamma)?;
        check_nonnegative("c", self.c)?;
        check_nonnegative("r", self.r)?;
        check_positive("d", self.d)?;
        check_nonnegative("alpha", self.alpha)?;
        check_nonnegative("a", self.a)?;
        check_finite("n_star", self.n_star())?;
        Ok(())
    }

    /// Bond count at which the velocity vanishes.
    pub fn n_star(&self) -> f64 {
        self.u / self.gamma
    }

    /// Creation rate after the velocity threshold indicator.
    pub fn creation(&self) -> f64 {
        if self.u <= self.u_star {
            self.c
        } else {
            0.0
        }
    }

    /// Per-bond dissociation rate `d·exp(α·(u − γn)₊)`.
    pub fn dissociation(&self, n: f64) -> f64 {
        self.d * (self.alpha * (self.u - self.gamma * n).max(0.0)).exp()
    }

    /// Total birth rate `λ(n)`.
    pub fn birth_rate(&self, n: f64) -> f64 {
        self.creation() + self.r * n
    }

    /// Total death rate `μ(n)`.
    pub fn death_rate(&self, n: f64) -> f64 {
        if n <= 0.0 {
            0.0
        } else {
            n * self.dissociation(n)
        }
    }

    pub fn velocity(&self, n: f64) -> f64 {
        (self.u - self.gamma * n).max(0.0)
    }

    /// Drift `b(n) = c·[u ≤ u*] + (r − d(n))·n` of the diffusion limit.
    pub fn drift(&self, n: f64) -> f64 {
        self.creation() + (self.r - self.dissociation(n)) * n
    }

    /// Diffusion coefficient `σ(n) = √(2an)`.
    pub fn diffusion_coeff(&self, n: f64) -> Result<f64> {
        if n < 0.0 || n.is_nan() {
            return Err(Error::Domain(format!("diffusion coefficient needs n >= 0, got {n}")));
        }
        Ok((2.0 * self.a * n).sqrt())
    }

    /// Upper bound `d·e^{αu}` on the per-bond dissociation rate.
    pub fn max_dissociation(&self) -> f64 {
        self.d * (self.alpha * self.u).exp()
    }

    pub fn with_u(self, u: f64) -> Self {
        Self { u, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_a(self, a: f64) -> Self {
        Self { a, ..self }
    }

    /// Same model with a velocity-independent dissociation rate `d`.
    pub fn with_constant_death(self, d: f64) -> Self {
        Self { d, alpha: 0.0, ..self }
    }
}

/// How the rates scale with the population size `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeKind {
    /// Creation multiplied by `K`; reproduction and death unchanged.
    AcceleratedCreation,
    /// No rate is rescaled.
    NonAccelerated,
    /// Creation multiplied by `K`, and `K^η·a` added to both per-bond rates.
    AcceleratedDemography { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRegime {
    pub kind: RegimeKind,
    pub k: u32,
}

impl ScalingRegime {
    pub fn new(kind: RegimeKind, k: u32) -> Result<Self> {
        let regime = Self { kind, k };
        regime.validate()?;
        Ok(regime)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        if let RegimeKind::AcceleratedDemography { eta } = self.kind {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "eta",
                    value: eta,
                    reason: "must lie in (0, 1]",
                });
            }
        }
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        f64::from(self.k)
    }
}

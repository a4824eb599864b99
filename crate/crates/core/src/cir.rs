//! Analytics of the constant-rate diffusion `dN = (c + (r − d)N)dt + √(2aN) dB`,
//! a Cox–Ingersoll–Ross process: moments, transition and stationary laws, and
//! the law of the first passage from `y` up to `x`.

use std::f64::consts::PI;

use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::model::ModelParams;
use crate::specfun::{gamma_p, kummer_pair, kummer_phi, ln_gamma, log_bessel_i, whittaker_m};
use crate::ssa::expm1_ratio;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub c: f64,
    pub a: f64,
    pub r: f64,
    pub d: f64,
}

impl CirParams {
    pub fn new(c: f64, a: f64, r: f64, d: f64) -> Result<Self> {
        let q = Self { c, a, r, d };
        q.validate()?;
        Ok(q)
    }

    /// The constant-rate model behind `p`; requires `α = 0` and `a > 0`.
    pub fn from_model(p: &ModelParams) -> Result<Self> {
        if p.alpha != 0.0 {
            return Err(Error::Domain(format!(
                "constant-rate analytics need alpha = 0, got {}",
                p.alpha
            )));
        }
        Self::new(p.creation(), p.a, p.r, p.d)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("c", self.c)?;
        check_positive("a", self.a)?;
        check_nonnegative("r", self.r)?;
        check_nonnegative("d", self.d)?;
        Ok(())
    }

    /// Dimension `2c/a` of the squared-OU representation.
    pub fn delta(&self) -> f64 {
        2.0 * self.c / self.a
    }

    pub fn kappa(&self) -> f64 {
        (self.d - self.r) / 2.0
    }

    /// Bessel index `c/a − 1`.
    pub fn nu(&self) -> f64 {
        self.c / self.a - 1.0
    }

    /// Net growth rate `r − d`.
    pub fn growth(&self) -> f64 {
        self.r - self.d
    }

    /// Level `x` mapped to `(d − r)x/a`.
    pub fn x_bar(&self, x: f64) -> f64 {
        (self.d - self.r) * x / self.a
    }

    fn require_subcritical(&self) -> Result<()> {
        if self.r < self.d {
            Ok(())
        } else {
            Err(Error::Domain(format!("needs r < d (got r={}, d={})", self.r, self.d)))
        }
    }
}

/// Mean and variance of `N_t` given `N_0 = n0`.
pub fn mean_var(t: f64, n0: f64, q: &CirParams) -> Result<(f64, f64)> {
    check_nonnegative("t", t)?;
    check_nonnegative("n0", n0)?;
    let k = q.growth();
    let growth = (k * t).exp();
    let te = t * expm1_ratio(k * t);
    let mean = n0 * growth + q.c * te;
    let var = 2.0 * q.a * n0 * growth * te + q.a * q.c * te * te;
    Ok((mean, var))
}

/// Density of `N_t` at `n` given `N_0 = n0`, a scaled noncentral chi-square.
pub fn transition_density(n: f64, t: f64, n0: f64, q: &CirParams) -> Result<f64> {
    Ok(log_transition_density(n, t, n0, q)?.exp())
}

pub fn log_transition_density(n: f64, t: f64, n0: f64, q: &CirParams) -> Result<f64> {
    check_positive("n", n)?;
    check_positive("t", t)?;
    check_positive("n0", n0)?;
    let k = q.growth();
    let kappa_t = 1.0 / (q.a * t * expm1_ratio(k * t));
    let u = kappa_t * n0 * (k * t).exp();
    let v = kappa_t * n;
    let nu = q.nu();
    Ok(kappa_t.ln() - u - v + 0.5 * nu * (v / u).ln() + log_bessel_i(nu, 2.0 * (u * v).sqrt())?)
}

/// Gamma density with shape `c/a` and rate `(d − r)/a`.
pub fn stationary_density(n: f64, q: &CirParams) -> Result<f64> {
    q.require_subcritical()?;
    check_positive("n", n)?;
    let shape = q.c / q.a;
    let rate = (q.d - q.r) / q.a;
    let log_p = shape * rate.ln() + (shape - 1.0) * n.ln() - rate * n - ln_gamma(shape)?;
    Ok(log_p.exp())
}

pub fn stationary_cdf(n: f64, q: &CirParams) -> Result<f64> {
    q.require_subcritical()?;
    check_nonnegative("n", n)?;
    gamma_p(q.c / q.a, (q.d - q.r) * n / q.a)
}

/// Probability that the process started away from zero ever reaches it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroHitClass {
    Certain,
    PositiveProbability,
    Never,
}

impl ZeroHitClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Certain => "certain",
            Self::PositiveProbability => "positive_probability",
            Self::Never => "never",
        }
    }
}

pub fn zero_hit_class(q: &CirParams) -> ZeroHitClass {
    if q.c >= q.a {
        ZeroHitClass::Never
    } else if q.growth() <= 0.0 {
        ZeroHitClass::Certain
    } else {
        ZeroHitClass::PositiveProbability
    }
}

fn check_levels(y: f64, x: f64) -> Result<()> {
    check_nonnegative("y", y)?;
    check_positive("x", x)?;
    if y > x {
        return Err(Error::Domain(format!("upward passage needs y <= x, got y={y}, x={x}")));
    }
    Ok(())
}

/// `E_y[exp(−α T_x)]` for the passage from `y` up to `x`, as a ratio of
/// Kummer functions.
pub fn laplace_fpt(alpha: f64, y: f64, x: f64, q: &CirParams) -> Result<f64> {
    check_nonnegative("alpha", alpha)?;
    check_levels(y, x)?;
    q.require_subcritical()?;
    if y == x {
        return Ok(1.0);
    }
    let s = alpha / (2.0 * q.kappa());
    let b = q.c / q.a;
    let num = if y == 0.0 { 1.0 } else { kummer_phi(s, b, q.x_bar(y))? };
    Ok(num / kummer_phi(s, b, q.x_bar(x))?)
}

/// Same transform written with Whittaker functions `M_{k,μ}`.
pub fn laplace_fpt_whittaker(alpha: f64, y: f64, x: f64, q: &CirParams) -> Result<f64> {
    check_nonnegative("alpha", alpha)?;
    check_levels(y, x)?;
    check_positive("y", y)?;
    q.require_subcritical()?;
    let s = alpha / (2.0 * q.kappa());
    let b = q.c / q.a;
    let (k, mu) = (0.5 * b - s, 0.5 * (b - 1.0));
    let (zy, zx) = (q.x_bar(y), q.x_bar(x));
    // Φ(s, b; z) = z^{−b/2} e^{z/2} M_{b/2−s, (b−1)/2}(z)
    let ratio = whittaker_m(k, mu, zy)? / whittaker_m(k, mu, zx)?;
    Ok(ratio * (zx / zy).powf(0.5 * b) * (0.5 * (zy - zx)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMode {
    /// Eigenvalues from the roots of the Kummer function.
    ExactRoots,
    /// Large-`n` formulas for every term.
    Asymptotic,
    /// Exact roots for the first [`HYBRID_EXACT_TERMS`] terms.
    Hybrid,
}

impl SpectralMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ExactRoots => "exact_roots",
            Self::Asymptotic => "asymptotic",
            Self::Hybrid => "hybrid",
        }
    }
}

pub const HYBRID_EXACT_TERMS: usize = 5;

/// Eigenfunction expansion of the passage time: survival
/// `Σ o_n e^{−λ_n t}` and density `Σ o_n λ_n e^{−λ_n t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralExpansion {
    pub eigenvalues: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub mode: SpectralMode,
    pub y: f64,
    pub x: f64,
}

impl SpectralExpansion {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.eigenvalues.iter().copied().zip(self.coefficients.iter().copied())
    }

    pub fn density(&self, t: f64) -> f64 {
        self.terms().map(|(l, o)| o * l * (-l * t).exp()).sum()
    }

    pub fn survival(&self, t: f64) -> f64 {
        self.terms().map(|(l, o)| o * (-l * t).exp()).sum()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    /// `E[e^{−αT}] = 1 − α ∫ e^{−αt} S(t) dt`, whose terms decay like `n^{−3}`.
    pub fn laplace(&self, alpha: f64) -> f64 {
        1.0 - alpha * self.terms().map(|(l, o)| o / (l + alpha)).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.terms().map(|(l, o)| o / l).sum()
    }

    /// Smallest density value on an `n_points` log grid of `[t0, t1]`.
    pub fn min_density(&self, t0: f64, t1: f64, n_points: usize) -> f64 {
        let n = n_points.max(2);
        let ratio = (t1 / t0).ln();
        (0..n)
            .map(|i| self.density(t0 * (ratio * i as f64 / (n - 1) as f64).exp()))
            .fold(f64::INFINITY, f64::min)
    }
}

// Shift `c/(2a) − 3/4` of the large-n index.
fn index_shift(q: &CirParams) -> f64 {
    q.c / (2.0 * q.a) - 0.75
}

/// Large-`n` approximation of `λ_n` for the passage up to `x`.
pub fn asymptotic_eigenvalue(n: usize, x: f64, q: &CirParams) -> f64 {
    let nu = n as f64 + index_shift(q);
    (q.d - q.r) * PI * PI / (4.0 * q.x_bar(x)) * nu * nu - q.growth() * q.c / (2.0 * q.a)
}

/// Large-`n` approximation of `o_n`.
pub fn asymptotic_coefficient(n: usize, y: f64, x: f64, q: &CirParams) -> f64 {
    let nu = n as f64 + index_shift(q);
    let (yb, xb) = (q.x_bar(y), q.x_bar(x));
    let b = q.c / q.a;
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let ratio = yb / xb;
    sign * 2.0 * PI * nu / (PI * PI * nu * nu - 2.0 * b * xb)
        * (0.5 * (yb - xb)).exp()
        * ratio.powf(0.25 - 0.5 * b)
        * (PI * nu * ratio.sqrt() - PI * b / 2.0 + PI / 4.0).cos()
}

pub fn spectral_fpt(y: f64, x: f64, q: &CirParams, n_terms: usize, mode: SpectralMode) -> Result<SpectralExpansion> {
    check_levels(y, x)?;
    q.require_subcritical()?;
    if n_terms == 0 {
        return Err(Error::InvalidParameter {
            name: "n_terms",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    let n_exact = match mode {
        SpectralMode::ExactRoots => n_terms,
        SpectralMode::Asymptotic => 0,
        SpectralMode::Hybrid => n_terms.min(HYBRID_EXACT_TERMS),
    };
    if n_exact < n_terms && y == 0.0 && 0.25 - q.c / (2.0 * q.a) < 0.0 {
        return Err(Error::Domain(
            "large-n coefficients are singular at y = 0 when c/a > 1/2".into(),
        ));
    }
    let b = q.c / q.a;
    let (yb, xb) = (q.x_bar(y), q.x_bar(x));
    let roots = kummer_negative_roots(b, xb, n_exact)?;
    let mut eigenvalues = Vec::with_capacity(n_terms);
    let mut coefficients = Vec::with_capacity(n_terms);
    for &s in &roots {
        let num = if yb == 0.0 { 1.0 } else { kummer_phi(s, b, yb)? };
        let (_, ds) = kummer_pair(s, b, xb)?;
        eigenvalues.push(q.growth() * s);
        coefficients.push(-num / (s * ds));
    }
    for n in (n_exact + 1)..=n_terms {
        eigenvalues.push(asymptotic_eigenvalue(n, x, q));
        coefficients.push(asymptotic_coefficient(n, y, x, q));
    }
    if let Some(i) = (0..n_terms).find(|&i| !(eigenvalues[i] > 0.0) || (i > 0 && eigenvalues[i] <= eigenvalues[i - 1]))
    {
        return Err(Error::RootBracketing {
            index: i + 1,
            detail: format!(
                "eigenvalues not positive and increasing: lambda_{} = {}",
                i + 1,
                eigenvalues[i]
            ),
        });
    }
    Ok(SpectralExpansion {
        eigenvalues,
        coefficients,
        mode,
        y,
        x,
    })
}

/// The `count` largest negative roots of `s ↦ Φ(s, b; z)`, in decreasing order.
///
/// Scans downward from `s = 0` with a step a fixed fraction of the predicted
/// local root spacing, then bisects each sign change. Once the large-`n`
/// prediction is reliable, every root must land on its predicted index; a
/// miss halves the step and rescans.
pub fn kummer_negative_roots(b: f64, z: f64, count: usize) -> Result<Vec<f64>> {
    check_positive("b", b)?;
    check_positive("z", z)?;
    let shift = b / 2.0 - 0.75;
    let scale = PI * PI / (4.0 * z);
    // index at which the large-n prediction is trusted to within half a root
    let check_from = 3 + (b + z).ceil() as usize;
    let predicted_index = |s: f64| ((-s - b / 2.0).max(0.0) / scale).sqrt() - shift;
    let last = -scale * (count as f64 + 10.0 + shift.abs()).powi(2) - b / 2.0 - 10.0;
    let mut last_err = None;
    for attempt in 0..5 {
        let per_gap = 8.0 * f64::from(1u32 << attempt);
        match scan_roots(b, z, count, per_gap, last, check_from, &predicted_index) {
            Ok(roots) => return Ok(roots),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn scan_roots(
    b: f64,
    z: f64,
    count: usize,
    per_gap: f64,
    last: f64,
    check_from: usize,
    predicted_index: &dyn Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let scale = PI * PI / (4.0 * z);
    let mut roots = Vec::with_capacity(count);
    let (mut s_hi, mut f_hi) = (0.0_f64, 1.0_f64);
    while roots.len() < count {
        let nu = ((-s_hi - b / 2.0).max(0.0) / scale).sqrt().max(0.5);
        let step = 2.0 * scale * nu / per_gap;
        let s_lo = s_hi - step;
        if s_lo < last {
            return Err(Error::RootBracketing {
                index: roots.len() + 1,
                detail: format!("no sign change above s = {last}"),
            });
        }
        let f_lo = kummer_phi(s_lo, b, z)?;
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            let root = if f_lo == 0.0 {
                s_lo
            } else {
                bisect(b, z, s_lo, s_hi, f_hi)?
            };
            let index = roots.len() + 1;
            if index >= check_from && (predicted_index(root) - index as f64).abs() >= 0.5 {
                return Err(Error::RootBracketing {
                    index,
                    detail: format!("root {root} sits at predicted index {:.2}", predicted_index(root)),
                });
            }
            roots.push(root);
        }
        s_hi = s_lo;
        f_hi = if f_lo == 0.0 { -f_hi } else { f_lo };
    }
    Ok(roots)
}

fn bisect(b: f64, z: f64, mut lo: f64, mut hi: f64, f_hi: f64) -> Result<f64> {
    let hi_sign = f_hi.signum();
    while hi - lo > 1e-12 * hi.abs().max(lo.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = kummer_phi(mid, b, z)?;
        if f == 0.0 {
            return Ok(mid);
        }
        if f.signum() == hi_sign {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Large-`N` size `A·N·e^{−B N² t0}` of the `N`-th density term at `t0`.
pub fn truncation_bound(n: usize, t0: f64, y: f64, x: f64, q: &CirParams) -> Result<f64> {
    check_positive("t0", t0)?;
    check_positive("y", y)?;
    check_levels(y, x)?;
    let (a_coef, b_coef) = truncation_constants(y, x, q);
    let nf = n as f64;
    Ok(a_coef * nf * (-b_coef * nf * nf * t0).exp())
}

/// `(A, B)` of [`truncation_bound`].
pub fn truncation_constants(y: f64, x: f64, q: &CirParams) -> (f64, f64) {
    let a_coef =
        2.0 * q.a * PI / (4.0 * x) * (0.5 * (q.x_bar(y) - q.x_bar(x))).exp() * (y / x).powf(0.25 - q.c / (2.0 * q.a));
    (a_coef, q.a * PI * PI / (4.0 * x))
}

/// First `N` past the peak of the bound at which it falls below `tol`.
pub fn default_n_terms(t0: f64, y: f64, x: f64, q: &CirParams, tol: f64) -> Result<usize> {
    check_positive("tol", tol)?;
    let (_, b_coef) = truncation_constants(y, x, q);
    let peak = (1.0 / (2.0 * b_coef * t0)).sqrt().ceil() as usize;
    let mut n = peak.max(1);
    while truncation_bound(n, t0, y, x, q)? >= tol {
        n += 1;
        if n > 1_000_000 {
            return Err(Error::Convergence {
                what: "truncation bound",
                partial: truncation_bound(n, t0, y, x, q)?,
                terms: n,
            });
        }
    }
    Ok(n)
}

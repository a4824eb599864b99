//! Adaptive Gauss–Kronrod quadrature and Chebyshev interpolation.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances for adaptive quadrature. Converged when the estimated error is
/// below `max(abs_tol, rel_tol·|I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub converged: bool,
}

// 15-point Kronrod nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights on the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok(Segment { a, b, value, error })
}

/// Integral of `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, ctl: &QuadControl) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
            converged: true,
        });
    }
    let first = gk15(&mut f, a, b)?;
    let mut total = first.value;
    let mut err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut converged = err <= ctl.abs_tol.max(ctl.rel_tol * total.abs());
    while !converged && heap.len() < ctl.max_intervals {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // cannot split further in double precision
            heap.push(worst);
            break;
        }
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        converged = err <= ctl.abs_tol.max(ctl.rel_tol * total.abs());
    }
    // re-sum to shed the drift of the running updates
    let (value, abs_error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(QuadResult {
        value,
        abs_error,
        intervals: heap.len(),
        converged: converged || abs_error <= ctl.abs_tol.max(ctl.rel_tol * value.abs()),
    })
}

/// Integral of `f` over `[a, ∞)` via `x = a + t/(1 − t)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, ctl: &QuadControl) -> Result<QuadResult> {
    integrate(
        |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            // f decays faster than the Jacobian grows for any integrable f
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        ctl,
    )
}

/// Like [`integrate`] but fails unless the tolerance was met.
pub fn integrate_strict<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, ctl: &QuadControl) -> Result<f64> {
    let r = integrate(f, a, b, ctl)?;
    if r.converged {
        Ok(r.value)
    } else {
        Err(Error::Quadrature(format!(
            "tolerance not met on [{a}, {b}]: estimate {} ± {}",
            r.value, r.abs_error
        )))
    }
}

/// Chebyshev interpolant on `[lo, hi]` built from first-kind nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Nodes `x_k = mid + half·cos(π(k + 1/2)/n)` for `k = 0..n`.
    pub fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        (0..n)
            .map(|k| mid + half * (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos())
            .collect()
    }

    /// Interpolant through `values` sampled at [`Chebyshev::nodes`].
    pub fn from_values(lo: f64, hi: f64, values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 || !(hi > lo) {
            return Err(Error::Domain("chebyshev interpolant needs nodes and hi > lo".into()));
        }
        let nf = n as f64;
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / nf).cos())
                    .sum();
                let w = if j == 0 { 1.0 } else { 2.0 };
                w * s / nf
            })
            .collect();
        Ok(Self { lo, hi, coeffs })
    }

    pub fn build<F: FnMut(f64) -> Result<f64>>(lo: f64, hi: f64, n: usize, mut f: F) -> Result<Self> {
        let values = Self::nodes(lo, hi, n)
            .into_iter()
            .map(&mut f)
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(lo, hi, &values)
    }

    pub fn constant(lo: f64, hi: f64, value: f64) -> Result<Self> {
        Self::from_values(lo, hi, &[value])
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Clenshaw evaluation; arguments are clamped to the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let t = ((2.0 * x - self.lo - self.hi) / (self.hi - self.lo)).clamp(-1.0, 1.0);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// Interpolant of the derivative.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self {
                lo: self.lo,
                hi: self.hi,
                coeffs: vec![0.0],
            };
        }
        let mut d = vec![0.0; n];
        // c'_{k−1} = c'_{k+1} + 2k c_k, then halve the constant term
        for k in (1..n).rev() {
            let next = if k + 1 < n { d[k + 1] } else { 0.0 };
            d[k - 1] = next + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let scale = 2.0 / (self.hi - self.lo);
        for c in &mut d {
            *c *= scale;
        }
        Self {
            lo: self.lo,
            hi: self.hi,
            coeffs: d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x - x + 1.0, -1.0, 2.0, &QuadControl::default()).unwrap();
        assert_relative_eq!(r.value, 10.5, max_relative = 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn endpoint_singularity() {
        let ctl = QuadControl {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            ..QuadControl::default()
        };
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &ctl).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn semi_infinite() {
        let ctl = QuadControl::default();
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, &ctl).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-10);
        let r = integrate_to_infinity(|x: f64| 1.0 / (1.0 + x * x), 0.0, &ctl).unwrap();
        assert_relative_eq!(r.value, std::f64::consts::FRAC_PI_2, max_relative = 1e-9);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(integrate(|_| f64::NAN, 0.0, 1.0, &QuadControl::default()).is_err());
    }

    #[test]
    fn chebyshev_derivative() {
        let cheb = Chebyshev::build(0.5, 3.0, 40, |x| Ok(x.sin() * x.exp())).unwrap();
        let d = cheb.derivative();
        let dd = d.derivative();
        for x in [0.5, 0.7, 1.9, 3.0] {
            assert_relative_eq!(cheb.eval(x), x.sin() * x.exp(), max_relative = 1e-13);
            assert_relative_eq!(d.eval(x), (x.sin() + x.cos()) * x.exp(), max_relative = 1e-11);
            assert_relative_eq!(dd.eval(x), 2.0 * x.cos() * x.exp(), max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn gaussian_mass(mu in -3.0f64..3.0, sd in 0.1f64..3.0) {
            let lo = mu - 12.0 * sd;
            let hi = mu + 12.0 * sd;
            let pdf = |x: f64| (-(x - mu).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
            let r = integrate(pdf, lo, hi, &QuadControl::default()).unwrap();
            prop_assert!((r.value - 1.0).abs() < 1e-9);
        }
    }
}

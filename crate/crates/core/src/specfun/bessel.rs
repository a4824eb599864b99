use std::f64::consts::PI;

use super::{gamma::ln_gamma, SeriesControl};
use crate::error::{Error, Result};

/// Modified Bessel function of the first kind `I_ν(x)` for `ν ≥ −1`, `x ≥ 0`.
pub fn bessel_i(nu: f64, x: f64) -> Result<f64> {
    Ok(log_bessel_i(nu, x)?.exp())
}

/// `ln I_ν(x)`, usable far past the point where `I_ν` overflows.
pub fn log_bessel_i(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= -1.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("bessel_i needs nu >= -1, got {nu}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("bessel_i needs x >= 0, got {x}")));
    }
    // I_{−1} = I_1; the m = 0 term of the series has 1/Γ(0) = 0.
    let nu = if nu == -1.0 { 1.0 } else { nu };
    if x == 0.0 {
        return Ok(if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if x > 1000.0 && x > 4.0 * nu * nu {
        return Ok(log_asymptotic(nu, x));
    }
    log_series(nu, x, &SeriesControl::default())
}

// Sum of (x/2)^{2m+ν}/(m! Γ(m+ν+1)), factored as t0 · Σ ρ_m with ρ_0 = 1.
// All terms are positive for ν > −1, so only overflow needs care.
fn log_series(nu: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    let half = 0.5 * x;
    let log_t0 = nu * half.ln() - ln_gamma(nu + 1.0)?;
    let q = half * half;
    let mut log_scale = 0.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    let max_terms = ctl.max_terms.max(4 * x as usize + 100);
    for m in 1..max_terms {
        let mf = m as f64;
        term *= q / (mf * (mf + nu));
        sum += term;
        if term < ctl.rel_tol * 0.01 * sum && mf * (mf + nu) > q {
            return Ok(log_t0 + log_scale + sum.ln());
        }
        if sum > 1e250 {
            log_scale += sum.ln();
            term /= sum;
            sum = 1.0;
        }
    }
    Err(Error::Convergence {
        what: "bessel_i series",
        partial: log_t0 + log_scale + sum.ln(),
        terms: max_terms,
    })
}

// Hankel expansion e^x/√(2πx) Σ (−1)^k a_k(ν)/x^k.
fn log_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (kf * 8.0 * x);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(0.5, 0.0).unwrap(), 0.0);
        let half = (2.0 / PI).sqrt() * 1.0_f64.sinh();
        assert_relative_eq!(bessel_i(0.5, 1.0).unwrap(), half, max_relative = 1e-14);
        assert_relative_eq!(bessel_i(0.5, 1.0).unwrap(), 0.937_674, epsilon = 1e-6);
    }

    #[test]
    fn reference_values() {
        // mpmath
        assert_relative_eq!(
            bessel_i(0.9, 2.5).unwrap(),
            2.638_603_806_554_175_5,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            bessel_i(-1.0, 3.0).unwrap(),
            3.953_370_217_402_609_4,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            bessel_i(2.3, 40.0).unwrap(),
            13_930_145_501_066_977.0,
            max_relative = 1e-12
        );
        let log_big = log_bessel_i(0.2, 800.0).unwrap();
        assert_relative_eq!(log_big, 795.738_886_935_098_9, max_relative = 1e-13);
        let log_asym = log_bessel_i(0.2, 5000.0).unwrap();
        let log_ser = log_series(0.2, 5000.0, &SeriesControl::default()).unwrap();
        assert_relative_eq!(log_asym, log_ser, max_relative = 1e-13);
    }

    #[test]
    fn matches_brute_force_partial_sum() {
        // 200 terms evaluated term by term from the definition
        let (nu, x) = (0.9_f64, 2.5_f64);
        let mut sum = 0.0;
        for m in 0..200 {
            let mf = m as f64;
            let lt = (2.0 * mf + nu) * (x / 2.0).ln() - ln_gamma(mf + 1.0).unwrap() - ln_gamma(mf + nu + 1.0).unwrap();
            sum += lt.exp();
        }
        assert_relative_eq!(bessel_i(nu, x).unwrap(), sum, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bessel_i(-1.5, 1.0).is_err());
        assert!(bessel_i(0.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn order_zero_is_at_least_one_and_increasing(x in 0.0f64..200.0, dx in 0.0f64..5.0) {
            let a = bessel_i(0.0, x).unwrap();
            let b = bessel_i(0.0, x + dx).unwrap();
            prop_assert!(a >= 1.0);
            prop_assert!(b >= a * (1.0 - 1e-14));
        }

        #[test]
        fn three_term_recurrence(nu in 0.0f64..8.0, x in 0.1f64..60.0) {
            // I_{ν−1} − I_{ν+1} = (2ν/x) I_ν
            let lhs = bessel_i(nu + 1.0, x).unwrap() - bessel_i(nu + 3.0, x).unwrap();
            let rhs = 2.0 * (nu + 2.0) / x * bessel_i(nu + 2.0, x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (lhs.abs() + bessel_i(nu + 1.0, x).unwrap()));
        }
    }
}

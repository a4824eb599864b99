//! Kummer's confluent hypergeometric function `Φ(s, b; z) = Σ (s)_j/(b)_j z^j/j!`
//! and its derivative in the first parameter.
//!
//! For `s ≥ 0, z ≥ 0` every term is positive and a compensated double
//! precision sum is exact to rounding. For large negative `s` the terms grow
//! like `(1 + z)^{|s|}` before the alternating tail cancels them, so double
//! precision is useless there; those evaluations fall through to an exact
//! fixed-point sum over big integers with enough guard bits to absorb the
//! cancellation.

use num_bigint::BigInt;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

use super::{is_nonpositive_integer, CompensatedSum, SeriesControl};
use crate::error::{Error, Result};

/// Largest tolerated ratio between the biggest series term and the result
/// before the double-precision sum is abandoned.
const CANCELLATION_LIMIT: f64 = 4096.0;

pub fn kummer_phi(s: f64, b: f64, z: f64) -> Result<f64> {
    Ok(kummer_pair(s, b, z)?.0)
}

/// `∂Φ/∂s (s, b; z)`.
pub fn kummer_phi_ds(s: f64, b: f64, z: f64) -> Result<f64> {
    Ok(kummer_pair(s, b, z)?.1)
}

/// `(Φ, ∂Φ/∂s)` at `(s, b; z)`.
pub fn kummer_pair(s: f64, b: f64, z: f64) -> Result<(f64, f64)> {
    kummer_pair_with(s, b, z, &SeriesControl::default())
}

pub fn kummer_pair_with(s: f64, b: f64, z: f64, ctl: &SeriesControl) -> Result<(f64, f64)> {
    ctl.validate()?;
    check_args(s, b, z)?;
    if z == 0.0 {
        return Ok((1.0, 0.0));
    }
    if z < 0.0 && s > 0.0 {
        // Kummer transformation Φ(s, b; z) = e^z Φ(b − s, b; −z)
        let (m, dm) = kummer_pair_with(b - s, b, -z, ctl)?;
        let e = z.exp();
        return Ok((e * m, -e * dm));
    }
    match series_f64(s, b, z, ctl)? {
        Some(pair) => Ok(pair),
        None => kummer_exact(s, b, z),
    }
}

fn check_args(s: f64, b: f64, z: f64) -> Result<()> {
    if !(s.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(Error::Domain(format!(
            "kummer arguments must be finite: s={s}, b={b}, z={z}"
        )));
    }
    if is_nonpositive_integer(b) {
        return Err(Error::Domain(format!(
            "kummer b must not be a nonpositive integer, got {b}"
        )));
    }
    Ok(())
}

/// True once every later term shrinks geometrically (ratio below `limit`).
fn tail_settled(s: f64, b: f64, z: f64, j: f64, limit: f64) -> bool {
    let sj = s + j;
    let bj = b + j;
    sj >= 0.0 && bj > 0.0 && (sj * z).abs() < limit * bj * (j + 1.0)
}

// Term recursion t_{j+1} = t_j (s+j) q_j with q_j = z/((b+j)(j+1)), and its
// s-derivative dt_{j+1} = (dt_j (s+j) + t_j) q_j. No digamma poles involved.
fn series_f64(s: f64, b: f64, z: f64, ctl: &SeriesControl) -> Result<Option<(f64, f64)>> {
    let mut t = 1.0;
    let mut dt = 0.0;
    let mut sum = CompensatedSum::new(1.0);
    let mut dsum = CompensatedSum::new(0.0);
    let mut tmax: f64 = 1.0;
    let mut dmax: f64 = 0.0;
    for j in 0..ctl.max_terms {
        let jf = j as f64;
        let q = z / ((b + jf) * (jf + 1.0));
        let sj = s + jf;
        let next_dt = (dt * sj + t) * q;
        t *= sj * q;
        dt = next_dt;
        if !(t.is_finite() && dt.is_finite()) {
            return Ok(None);
        }
        sum.add(t);
        dsum.add(dt);
        tmax = tmax.max(t.abs());
        dmax = dmax.max(dt.abs());
        let v = sum.value();
        let dv = dsum.value();
        if tail_settled(s, b, z, jf + 1.0, 0.5)
            && t.abs() <= ctl.rel_tol * v.abs()
            && dt.abs() <= ctl.rel_tol * dv.abs()
        {
            if tmax > CANCELLATION_LIMIT * v.abs() || dmax > CANCELLATION_LIMIT * dv.abs() {
                return Ok(None);
            }
            return Ok(Some((v, dv)));
        }
    }
    if tmax > CANCELLATION_LIMIT * sum.value().abs() {
        return Ok(None);
    }
    Err(Error::Convergence {
        what: "kummer series",
        partial: sum.value(),
        terms: ctl.max_terms,
    })
}

/// `(Φ, ∂Φ/∂s)` by an exact fixed-point sum over big integers.
///
/// `s`, `b`, `z` are dyadic rationals, so after scaling by `2^k` every term
/// ratio is a ratio of integers and the only error is one truncation per
/// term. Precision is raised until the result carries at least 64 clean bits.
pub fn kummer_exact(s: f64, b: f64, z: f64) -> Result<(f64, f64)> {
    check_args(s, b, z)?;
    if z == 0.0 {
        return Ok((1.0, 0.0));
    }
    let k = [s, b, z].iter().map(|&x| fraction_bits(x)).max().unwrap_or(0);
    let big_s = to_scaled_int(s, k);
    let big_b = to_scaled_int(b, k);
    let big_z = to_scaled_int(z, k);

    let (log2_max, n_est) = term_envelope(s, b, z)?;
    let guard = 64 + 2 * (64 - (n_est as u64).leading_zeros() as usize) + 16;
    let mut precision = log2_max.max(0.0).ceil() as usize + guard;
    for _ in 0..8 {
        let (v, dv, n_terms) = fixed_point_sum(&big_s, &big_b, &big_z, k, precision, s, b, z)?;
        let noise_bits = 64 - (n_terms as u64).leading_zeros() as usize + 2;
        let need = 60 + noise_bits;
        let short = need.saturating_sub(v.bits().min(dv.bits()) as usize);
        if short == 0 {
            return Ok((to_f64_scaled(&v, precision), to_f64_scaled(&dv, precision)));
        }
        precision += short + 32;
    }
    Err(Error::Convergence {
        what: "exact kummer sum (precision)",
        partial: f64::NAN,
        terms: 0,
    })
}

fn fraction_bits(x: f64) -> usize {
    if x == 0.0 {
        return 0;
    }
    let (mant, exp, _) = x.integer_decode();
    let exp_eff = i32::from(exp) + mant.trailing_zeros() as i32;
    (-exp_eff).max(0) as usize
}

fn to_scaled_int(x: f64, k: usize) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let (mant, exp, sign) = x.integer_decode();
    let tz = mant.trailing_zeros();
    let m = BigInt::from(mant >> tz);
    let shift = i64::from(exp) + i64::from(tz) + k as i64;
    debug_assert!(shift >= 0);
    let v = m << (shift as usize);
    if sign < 0 {
        -v
    } else {
        v
    }
}

/// log2 of the largest term magnitude and an estimate of the term count.
fn term_envelope(s: f64, b: f64, z: f64) -> Result<(f64, usize)> {
    let mut lt = 0.0_f64;
    let mut lmax = 0.0_f64;
    let lz = z.abs().log2();
    let mut j = 0usize;
    loop {
        let jf = j as f64;
        let sj = s + jf;
        if sj == 0.0 {
            // polynomial; derivative terms keep going but are dominated by the
            // same envelope
            return Ok((lmax, j + 64));
        }
        lt += sj.abs().log2() + lz - (b + jf).abs().log2() - (jf + 1.0).log2();
        lmax = lmax.max(lt);
        j += 1;
        if tail_settled(s, b, z, j as f64, 0.5) && lt < lmax - 200.0 {
            return Ok((lmax, j));
        }
        if j > 50_000_000 {
            return Err(Error::Convergence {
                what: "kummer term envelope",
                partial: lmax,
                terms: j,
            });
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fixed_point_sum(
    big_s: &BigInt,
    big_b: &BigInt,
    big_z: &BigInt,
    k: usize,
    precision: usize,
    s: f64,
    b: f64,
    z: f64,
) -> Result<(BigInt, BigInt, usize)> {
    let step = BigInt::one() << k;
    let mut t = BigInt::one() << precision;
    let mut dt = BigInt::zero();
    let mut sum = t.clone();
    let mut dsum = BigInt::zero();
    let mut a_j = big_s.clone();
    let mut b_j = big_b.clone();
    let cap = 50_000_000usize;
    for j in 0..cap {
        let den: BigInt = (&b_j << k) * BigInt::from(j + 1);
        let next_dt = (&dt * &a_j + (&t << k)) * big_z / &den;
        t = &t * &a_j * big_z / &den;
        dt = next_dt;
        sum += &t;
        dsum += &dt;
        a_j += &step;
        b_j += &step;
        if t.is_zero() && dt.is_zero() && tail_settled(s, b, z, (j + 1) as f64, 0.5) {
            return Ok((sum, dsum, j + 1));
        }
    }
    Err(Error::Convergence {
        what: "exact kummer sum",
        partial: to_f64_scaled(&sum, precision),
        terms: cap,
    })
}

fn to_f64_scaled(n: &BigInt, precision: usize) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let bits = n.bits() as i64;
    let mag = n.magnitude();
    let (m, e) = if bits > 64 {
        let shift = bits - 64;
        ((mag >> shift as usize).to_f64().unwrap_or(f64::NAN), shift)
    } else {
        (mag.to_f64().unwrap_or(f64::NAN), 0)
    };
    let v = ldexp(m, e - precision as i64);
    if n.is_negative() {
        -v
    } else {
        v
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    let up = 2f64.powi(1000);
    let down = 2f64.powi(-1000);
    while e > 1000 {
        x *= up;
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= down;
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// `Φ(s_top − j, b; z)` for `j = 0..len`, for scanning sign changes in `s`.
///
/// Uses the downward three-term recurrence in the first parameter, seeded by
/// two positive-term sums. The recurrence is only trusted for moderate `z`
/// and `b`; elsewhere each point is evaluated directly.
pub fn kummer_ladder(s_top: f64, b: f64, z: f64, len: usize) -> Result<Vec<f64>> {
    check_args(s_top, b, z)?;
    if len == 0 {
        return Ok(Vec::new());
    }
    if let Some(values) = ladder_recurrence(s_top, b, z, len)? {
        return Ok(values);
    }
    (0..len).map(|j| kummer_phi(s_top - j as f64, b, z)).collect()
}

// (b − a) M(a − 1) + (2a − b + z) M(a) − a M(a + 1) = 0
fn ladder_recurrence(s_top: f64, b: f64, z: f64, len: usize) -> Result<Option<Vec<f64>>> {
    if !(z > 0.0 && z <= 10.0 && b > 0.0 && b <= 30.0) {
        return Ok(None);
    }
    let m0 = if s_top >= 0.0 { 0usize } else { (-s_top).ceil() as usize };
    let a0 = s_top + m0 as f64;
    let ctl = SeriesControl::default();
    let (Some((mut cur, _)), Some((mut next, _))) = (series_f64(a0, b, z, &ctl)?, series_f64(a0 + 1.0, b, z, &ctl)?)
    else {
        return Ok(None);
    };
    let mut out = Vec::with_capacity(len);
    if m0 == 0 {
        out.push(cur);
    }
    for i in 1..(m0 + len) {
        let a = a0 - (i - 1) as f64;
        let denom = b - a;
        if denom.abs() < 1e-9 * b.max(1.0) {
            return Ok(None);
        }
        let prev = (a * next - (2.0 * a - b + z) * cur) / denom;
        next = cur;
        cur = prev;
        if !cur.is_finite() {
            return Ok(None);
        }
        if i >= m0 {
            out.push(cur);
        }
    }
    Ok(Some(out))
}

/// Whittaker `M_{k,μ}(z) = z^{μ+1/2} e^{−z/2} Φ(μ − k + 1/2, 2μ + 1; z)`.
pub fn whittaker_m(k: f64, mu: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("whittaker_m needs z > 0, got {z}")));
    }
    let phi = kummer_phi(mu - k + 0.5, 2.0 * mu + 1.0, z)?;
    Ok(((mu + 0.5) * z.ln() - 0.5 * z).exp() * phi)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::super::digamma;
    use super::*;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    // (s, b, z, Φ, ∂sΦ) from mpmath hyp1f1 / diff at 30 digits
    const ORACLE: [(f64, f64, f64, f64, f64); 8] = [
        (-0.3, 0.9, 1.6, 0.242_573_452_787_064_5, 2.157_358_084_919_440_3),
        (0.5, 1.5, 3.0, 4.222_211_992_888_512, 8.747_292_626_487_982),
        (
            -3799.63,
            0.9,
            1.6,
            -0.044_437_536_798_055_77,
            -0.004_735_771_760_297_258,
        ),
        (-50.5, 0.9, 50.0, -1_963_903_576.489_248, 9_837_882_595.631_245),
        (-20.25, 2.5, 20.0, 21.717_642_179_741_853, -33.969_084_903_050_99),
        (-7.3, 0.9, 0.016, 0.873_631_341_465_162_3, 0.016_775_914_079_861_72),
        (2.0, 0.9, -3.0, -0.111_394_133_739_904_56, 0.057_759_341_406_236_54),
        (-12.7, 1.3, 10.0, -7.094_429_060_714_936, 7.479_675_716_998_257),
    ];

    #[test]
    fn trivial_values() {
        assert_eq!(kummer_pair(-3.7, 1.2, 0.0).unwrap(), (1.0, 0.0));
        for i in 0..=100 {
            let z = 0.1 * i as f64;
            assert_relative_eq!(kummer_phi(1.0, 1.0, z).unwrap(), z.exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn reference_values() {
        for (s, b, z, phi, dphi) in ORACLE {
            let (v, dv) = kummer_pair(s, b, z).unwrap();
            assert_relative_eq!(v, phi, max_relative = 1e-11);
            assert_relative_eq!(dv, dphi, max_relative = 1e-11);
        }
    }

    #[test]
    fn exact_path_agrees_with_double_path() {
        for (s, b, z) in [(0.5, 1.5, 3.0), (-0.3, 0.9, 1.6), (3.2, 0.4, 7.5), (-2.0, 1.1, 4.0)] {
            let (v1, d1) = kummer_pair(s, b, z).unwrap();
            let (v2, d2) = kummer_exact(s, b, z).unwrap();
            assert_relative_eq!(v1, v2, max_relative = 1e-13);
            assert_relative_eq!(d1, d2, max_relative = 1e-12);
        }
    }

    #[test]
    fn derivative_of_exponential_series() {
        // ∂s Φ(1, 1; 1) = Σ_{j≥1} H_j/j!
        let mut total = 0.0;
        let mut h = 0.0;
        let mut fact = 1.0;
        for j in 1..40 {
            h += 1.0 / j as f64;
            fact *= j as f64;
            total += h / fact;
        }
        assert_relative_eq!(kummer_phi_ds(1.0, 1.0, 1.0).unwrap(), total, max_relative = 1e-14);
        assert_relative_eq!(total, 2.165_382, epsilon = 1e-6);
        assert_eq!(kummer_phi_ds(2.5, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_rational_partial_sum() {
        // 500 terms in exact rational arithmetic at s = −3/10, b = 9/10, z = 8/5
        let s = BigRational::new(BigInt::from(-3), BigInt::from(10));
        let b = BigRational::new(BigInt::from(9), BigInt::from(10));
        let z = BigRational::new(BigInt::from(8), BigInt::from(5));
        let one = BigRational::one();
        let mut term = one.clone();
        let mut sum = one.clone();
        for j in 0..500 {
            let jr = BigRational::from_integer(BigInt::from(j));
            term = term * (&s + &jr) * &z / ((&b + &jr) * (&jr + &one));
            sum += &term;
        }
        let oracle = sum.to_f64().unwrap();
        assert_relative_eq!(kummer_phi(-0.3, 0.9, 1.6).unwrap(), oracle, max_relative = 1e-13);
    }

    #[test]
    fn derivative_matches_digamma_weighted_series() {
        // (s)_j' = (s)_j (ψ(s+j) − ψ(s))
        let (s, b, z) = (-0.3_f64, 0.9_f64, 1.6_f64);
        let psi_s = digamma(s).unwrap();
        let mut t = 1.0;
        let mut total = 0.0;
        for j in 0..200 {
            let jf = j as f64;
            total += t * (digamma(s + jf).unwrap() - psi_s);
            t *= (s + jf) * z / ((b + jf) * (jf + 1.0));
        }
        assert_relative_eq!(kummer_phi_ds(s, b, z).unwrap(), total, max_relative = 1e-12);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = rng.random_range(-5.0..5.0);
            let b = rng.random_range(0.5..3.0);
            let z = rng.random_range(0.1..5.0);
            let h = 1e-5;
            let fd = (kummer_exact(s + h, b, z).unwrap().0 - kummer_exact(s - h, b, z).unwrap().0) / (2.0 * h);
            let ds = kummer_phi_ds(s, b, z).unwrap();
            assert!((ds - fd).abs() <= 1e-6 * ds.abs(), "s={s} b={b} z={z}: {ds} vs {fd}");
        }
    }

    #[test]
    fn ladder_matches_pointwise_values() {
        for (s_top, b, z) in [(-0.25, 0.9, 1.6), (0.4, 2.5, 9.5), (-3.6, 12.0, 5.0), (-0.1, 0.9, 1.6)] {
            let ladder = kummer_ladder(s_top, b, z, 400).unwrap();
            for (j, v) in ladder.iter().enumerate().step_by(37) {
                let exact = kummer_exact(s_top - j as f64, b, z).unwrap().0;
                // the recurrence carries an absolute error relative to the
                // oscillation envelope, so compare against a neighbourhood scale
                let scale = ladder[j.saturating_sub(3)..(j + 4).min(ladder.len())]
                    .iter()
                    .fold(0.0_f64, |m, x| m.max(x.abs()));
                assert!((v - exact).abs() <= 1e-9 * scale, "j={j}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn whittaker_identity() {
        let (k, mu, z) = (0.5, 0.25, 1.0_f64);
        let m = whittaker_m(k, mu, z).unwrap();
        let phi = kummer_phi(mu - k + 0.5, 2.0 * mu + 1.0, z).unwrap();
        assert_relative_eq!(m / (z.powf(mu + 0.5) * (-z / 2.0).exp()), phi, max_relative = 1e-14);
        assert_relative_eq!(m, 0.739_458_618_452_483_4, max_relative = 1e-13);
        let tiny = 1e-12_f64;
        assert_relative_eq!(
            whittaker_m(k, mu, tiny).unwrap() * tiny.powf(-mu - 0.5),
            1.0,
            max_relative = 1e-10
        );
        assert!(whittaker_m(k, mu, 0.0).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(kummer_phi(1.0, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(kummer_phi(1.0, -3.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(kummer_phi(f64::NAN, 1.0, 1.0), Err(Error::Domain(_))));
        let ctl = SeriesControl {
            rel_tol: 1e-14,
            max_terms: 5,
        };
        assert!(matches!(
            kummer_pair_with(1.0, 1.0, 30.0, &ctl),
            Err(Error::Convergence { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn contiguous_relation(s in -30.0f64..10.0, b in 0.2f64..5.0, z in 0.0f64..20.0) {
            // b Φ(s, b) − b Φ(s − 1, b) − z Φ(s, b + 1) = 0
            let m = kummer_phi(s, b, z).unwrap();
            let m_lo = kummer_phi(s - 1.0, b, z).unwrap();
            let m_b = kummer_phi(s, b + 1.0, z).unwrap();
            let scale = (b * m).abs() + (b * m_lo).abs() + (z * m_b).abs();
            prop_assert!((b * m - b * m_lo - z * m_b).abs() <= 1e-10 * scale);
        }

        #[test]
        fn positive_parameters_give_positive_values(s in 0.0f64..20.0, b in 0.05f64..20.0, z in 0.0f64..40.0) {
            prop_assert!(kummer_phi(s, b, z).unwrap() > 0.0);
        }

        #[test]
        fn z_derivative_identity(s in -8.0f64..8.0, b in 0.3f64..4.0, z in 0.5f64..8.0) {
            // d/dz Φ(s, b; z) = (s/b) Φ(s + 1, b + 1; z)
            let h = 1e-5;
            let fd = (kummer_exact(s, b, z + h).unwrap().0 - kummer_exact(s, b, z - h).unwrap().0) / (2.0 * h);
            let exact = s / b * kummer_phi(s + 1.0, b + 1.0, z).unwrap();
            let scale = kummer_phi(s, b, z).unwrap().abs() + exact.abs();
            prop_assert!((fd - exact).abs() <= 1e-6 * scale);
        }
    }
}

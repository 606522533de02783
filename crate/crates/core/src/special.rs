//! Scalar special functions: complex Gamma, upper incomplete Gamma, the
//! Euler-Mascheroni constant and the Dedekind eta function.
//!
//! Everything here is double precision. Gamma uses a Lanczos approximation
//! (g = 7, nine coefficients) with reflection for Re s < 1/2. The upper
//! incomplete Gamma switches between a Legendre continued fraction
//! (x > max(Re s, 0) + 1) and the lower-Gamma power series.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 10_000;

pub fn euler_gamma() -> f64 {
    EULER_GAMMA
}

fn nonpositive_integer(s: Complex64) -> Option<i64> {
    if s.im == 0.0 && s.re <= 0.0 && s.re == s.re.round() {
        Some(s.re as i64)
    } else {
        None
    }
}

/// Complex Gamma function.
pub fn gamma(s: Complex64) -> Result<Complex64> {
    if let Some(m) = nonpositive_integer(s) {
        return Err(Error::Pole(m));
    }
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::NonFinite(format!("gamma argument {s}")));
    }
    Ok(gamma_unchecked(s))
}

fn gamma_unchecked(s: Complex64) -> Complex64 {
    if s.re < 0.5 {
        // reflection: Gamma(s) Gamma(1-s) = pi / sin(pi s)
        let one = Complex64::new(1.0, 0.0);
        return Complex64::new(PI, 0.0) / ((s * PI).sin() * gamma_unchecked(one - s));
    }
    let z = s - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * acc
}

/// Real Gamma, a thin wrapper for callers working on the real axis.
pub fn gamma_real(x: f64) -> Result<f64> {
    gamma(Complex64::new(x, 0.0)).map(|g| g.re)
}

/// Upper incomplete Gamma function Γ(s, x) for complex s and real x > 0.
///
/// Defined for every s, including the non-positive integers where Γ(s) itself
/// has a pole (Γ(0, x) is the exponential integral E1).
pub fn incomplete_gamma_upper(s: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "incomplete gamma needs finite x > 0, got {x}"
        )));
    }
    if x > s.re.max(0.0) + 1.0 {
        return upper_continued_fraction(s, x);
    }
    if let Some(m) = nonpositive_integer(s) {
        // climb down from E1 with Γ(s, x) = (Γ(s+1, x) - x^s e^{-x}) / s
        let mut val = exp_integral_e1_series(x);
        for k in 1..=(-m) {
            let sk = -(k as f64);
            val = (val - x.powf(sk) * (-x).exp()) / sk;
        }
        return Ok(Complex64::new(val, 0.0));
    }
    let lower = lower_gamma_series(s, x)?;
    Ok(gamma_unchecked(s) - lower)
}

/// Real-argument convenience wrapper.
pub fn incomplete_gamma_upper_real(s: f64, x: f64) -> Result<f64> {
    incomplete_gamma_upper(Complex64::new(s, 0.0), x).map(|v| v.re)
}

fn upper_continued_fraction(s: Complex64, x: f64) -> Result<Complex64> {
    // complex division squares magnitudes, so keep tiny well above 1e-154
    let tiny = Complex64::new(1e-150, 0.0);
    let mut b = Complex64::new(x + 1.0, 0.0) - s;
    let mut c = Complex64::new(1e150, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (Complex64::new(i as f64, 0.0) - s);
        b += 2.0;
        d = an * d + b;
        if d.norm() < tiny.re {
            d = tiny;
        }
        c = b + an / c;
        if c.norm() < tiny.re {
            c = tiny;
        }
        d = Complex64::new(1.0, 0.0) / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 2.0 * f64::EPSILON {
            return Ok((s * x.ln() - x).exp() * h);
        }
    }
    Err(Error::NonFinite(format!(
        "incomplete gamma continued fraction stalled at s = {s}, x = {x}"
    )))
}

fn lower_gamma_series(s: Complex64, x: f64) -> Result<Complex64> {
    let mut term = Complex64::new(1.0, 0.0) / s;
    let mut sum = term;
    let mut denom = s;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.norm() < sum.norm() * 1e-17 {
            return Ok(sum * (s * x.ln() - x).exp());
        }
    }
    Err(Error::NonFinite(format!(
        "lower incomplete gamma series stalled at s = {s}, x = {x}"
    )))
}

fn exp_integral_e1_series(x: f64) -> f64 {
    // E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k k!)
    let mut sum = 0.0;
    let mut pow_over_fact = 1.0;
    for k in 1..200 {
        pow_over_fact *= -x / k as f64;
        let term = pow_over_fact / k as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Dedekind eta evaluated by its q-product, with the number of factors used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaValue {
    pub value: Complex64,
    pub tau: Complex64,
    pub terms_used: usize,
}

/// η(τ) = e^{πiτ/12} Π_{k≥1} (1 − e^{2πikτ}).
///
/// The product stops once the next factor differs from 1 by less than
/// `tol·(1 − |q|)`, which bounds the relative truncation error by `tol`.
pub fn dedekind_eta(tau: Complex64, tol: f64) -> Result<EtaValue> {
    if !(tau.im > 0.0) {
        return Err(Error::InvalidInput(format!("dedekind eta needs Im tau > 0, got {tau}")));
    }
    let i = Complex64::new(0.0, 1.0);
    let q = (2.0 * PI * i * tau).exp();
    let qabs = q.norm();
    let stop = tol * (1.0 - qabs);
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qk = q;
    let mut terms_used = 0;
    while qk.norm() >= stop {
        prod *= Complex64::new(1.0, 0.0) - qk;
        qk *= q;
        terms_used += 1;
        if terms_used > 1_000_000 {
            return Err(Error::ToleranceUnachievable {
                requested: tol,
                achieved: qk.norm(),
            });
        }
    }
    let value = (PI * i * tau / 12.0).exp() * prod;
    Ok(EtaValue { value, tau, terms_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(c(1.0, 0.0)).unwrap().re, 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(c(0.5, 0.0)).unwrap().re, PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(c(10.0, 0.0)).unwrap().re, 362_880.0, max_relative = 1e-13);
        // Γ(i) = -0.15494982830181068512... - 0.49801566811835604271... i
        let gi = gamma(c(0.0, 1.0)).unwrap();
        assert_relative_eq!(gi.re, -0.154_949_828_301_810_685_12, max_relative = 1e-13);
        assert_relative_eq!(gi.im, -0.498_015_668_118_356_042_71, max_relative = 1e-13);
        // Γ(-1/2) = -2 √π
        assert_relative_eq!(gamma(c(-0.5, 0.0)).unwrap().re, -2.0 * PI.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn gamma_poles_are_reported() {
        assert_eq!(gamma(c(0.0, 0.0)), Err(Error::Pole(0)));
        assert_eq!(gamma(c(-3.0, 0.0)), Err(Error::Pole(-3)));
        assert!(gamma(c(-3.0, 1e-9)).is_ok());
    }

    #[test]
    fn euler_constant_matches_harmonic_series_oracle() {
        // H_n - ln n - 1/(2n) + 1/(12 n^2) - 1/(120 n^4) + 1/(252 n^6)
        let n = 1000.0_f64;
        let mut h = 0.0;
        for k in (1..=1000).rev() {
            h += 1.0 / k as f64;
        }
        let oracle =
            h - n.ln() - 1.0 / (2.0 * n) + 1.0 / (12.0 * n * n) - 1.0 / (120.0 * n.powi(4)) + 1.0 / (252.0 * n.powi(6));
        assert!((euler_gamma() - oracle).abs() < 1e-12);
        assert!((euler_gamma() - 0.577_215_664_9).abs() < 1e-10);
    }

    #[test]
    fn incomplete_gamma_closed_forms() {
        for &x in &[0.01, 0.5, 1.0, 2.5, 10.0, 49.0] {
            let g1 = incomplete_gamma_upper(c(1.0, 0.0), x).unwrap();
            assert_relative_eq!(g1.re, (-x).exp(), max_relative = 1e-14);
            assert!(g1.im.abs() < 1e-300 + 1e-14 * g1.re.abs());
            // Γ(2, x) = (1 + x) e^{-x}
            let g2 = incomplete_gamma_upper_real(2.0, x).unwrap();
            assert_relative_eq!(g2, (1.0 + x) * (-x).exp(), max_relative = 1e-13);
        }
        // E1(1) = 0.21938393439552027368
        assert_relative_eq!(
            incomplete_gamma_upper_real(0.0, 1.0).unwrap(),
            0.219_383_934_395_520_273_68,
            max_relative = 1e-14
        );
        // E1(0.1) = 1.8229239584193906661
        assert_relative_eq!(
            incomplete_gamma_upper_real(0.0, 0.1).unwrap(),
            1.822_923_958_419_390_666_1,
            max_relative = 1e-14
        );
        // Γ(1/2, x) = √π erfc(√x); erfc(1) = 0.15729920705028513066
        assert_relative_eq!(
            incomplete_gamma_upper_real(0.5, 1.0).unwrap(),
            PI.sqrt() * 0.157_299_207_050_285_130_66,
            max_relative = 1e-13
        );
    }

    #[test]
    fn incomplete_gamma_at_negative_integers_uses_recurrence() {
        // Γ(-1, x) = E2(x)/x, E2(x) = e^{-x} - x E1(x)
        for &x in &[0.2, 0.9, 3.0] {
            let e1 = incomplete_gamma_upper_real(0.0, x).unwrap();
            let expected = ((-x).exp() - x * e1) / x;
            assert_relative_eq!(
                incomplete_gamma_upper_real(-1.0, x).unwrap(),
                expected,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn incomplete_gamma_rejects_bad_x() {
        assert!(incomplete_gamma_upper(c(1.0, 0.0), 0.0).is_err());
        assert!(incomplete_gamma_upper(c(1.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn eta_at_i_matches_gamma_quarter_closed_form() {
        let eta = dedekind_eta(c(0.0, 1.0), 1e-16).unwrap();
        let closed = gamma_real(0.25).unwrap() / (2.0 * PI.powf(0.75));
        assert_relative_eq!(eta.value.norm(), closed, max_relative = 1e-14);
        assert_relative_eq!(eta.value.norm(), 0.768_225_4, max_relative = 1e-7);
        assert!(eta.terms_used > 0);
    }

    #[test]
    fn eta_modulus_is_periodic_and_s_transforms() {
        let a = dedekind_eta(c(0.0, 1.0), 1e-16).unwrap().value;
        let b = dedekind_eta(c(1.0, 1.0), 1e-16).unwrap().value;
        assert_relative_eq!(a.norm(), b.norm(), max_relative = 1e-14);

        let tau = c(0.0, 2.0);
        let lhs = dedekind_eta(-Complex64::new(1.0, 0.0) / tau, 1e-16).unwrap().value;
        let rhs = (-Complex64::new(0.0, 1.0) * tau).sqrt() * dedekind_eta(tau, 1e-16).unwrap().value;
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn eta_rejects_lower_half_plane() {
        assert!(dedekind_eta(c(0.0, -1.0), 1e-16).is_err());
        assert!(dedekind_eta(c(0.3, 0.0), 1e-16).is_err());
    }
}

//! ζ(0), ζ′(0) and det = exp(−ζ′(0)) for Laplacians on flat tori.
//!
//! Two independent routes:
//!
//! * ABKS: from a heat trace and its short-time coefficients,
//!   ζ′(0) = γa₀ − Σ_{k≥1} a_k/k + ∫₀¹ (θ − Σ a_k t^{−k}) dt/t + ∫₁^∞ θ dt/t.
//! * Epstein continuation: the Mellin integral of θ split at T; the large-t
//!   piece is Σ mult·λ^{−s}Γ(s, λT) and the small-t piece goes through the
//!   Poisson-dual form, where it becomes incomplete gammas on Λ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::binomial;
use crate::heat::{nonzero_groups, radius_for, AsymptoticCoeffs, HeatTrace, TraceFunction};
use crate::lattice::{cell_diameter, crossover_time, gaussian_tail_bound_with, ComplexTorus, LaplaceConvention};
use crate::quad::integrate;
use crate::special::{euler_gamma, incomplete_gamma_upper_real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaRoute {
    Abks,
    EpsteinContinuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaResult {
    #[serde(rename = "zeta0")]
    pub zeta_at_0: f64,
    #[serde(rename = "zeta_prime0")]
    pub zeta_prime_at_0: f64,
    pub det: f64,
    pub est_error: f64,
    pub route: ZetaRoute,
}

impl ZetaResult {
    pub fn log_det(&self) -> f64 {
        -self.zeta_prime_at_0
    }
}

const MAX_EVALS: usize = 200_000;

/// ζ′(0) by the ABKS heat-trace formula. `tol` is the absolute target for
/// the two integrals together.
pub fn abks_b1<T: TraceFunction + ?Sized>(
    theta: &T,
    coeffs: &AsymptoticCoeffs,
    n: usize,
    tol: f64,
) -> Result<ZetaResult> {
    if coeffs.a.len() != n + 1 {
        return Err(Error::InvalidInput(format!(
            "expected {} coefficients, got {}",
            n + 1,
            coeffs.a.len()
        )));
    }
    let a0 = coeffs.a[0];
    let mut b1 = euler_gamma() * a0;
    for k in 1..=n {
        b1 -= coeffs.a[k] / k as f64;
    }

    let head = integrate(|t| theta.remainder(t, coeffs) / t, 0.0, 1.0, tol / 2.0, MAX_EVALS)?;
    b1 += head.value;
    let mut est = head.abs_error;

    // [1, ∞) on doubling intervals
    let tail_tol = tol / 2.0;
    let mut lo = 1.0;
    let mut acc = 0.0;
    let mut pieces = 0;
    loop {
        let hi = 2.0 * lo;
        let piece = integrate(|t| theta.trace(t) / t, lo, hi, tail_tol / 64.0, MAX_EVALS)?;
        acc += piece.value;
        est += piece.abs_error;
        pieces += 1;
        let th_hi = theta.trace(hi);
        let rate = match theta.decay_rate() {
            Some(r) => r,
            None => {
                let th_mid = theta.trace(1.5 * lo);
                if th_hi > 0.0 && th_mid > th_hi {
                    (th_mid / th_hi).ln() / (0.5 * lo)
                } else {
                    f64::INFINITY
                }
            }
        };
        // θ(t) ≤ θ(hi)e^{−λ(t−hi)} for t ≥ hi, so the rest is ≤ θ(hi)/(hi·λ)
        let rest = if th_hi == 0.0 { 0.0 } else { th_hi / (hi * rate) };
        if rest <= tail_tol * 1e-2 || (th_hi / hi) < tail_tol * 1e-3 * acc.abs().max(1e-300) {
            est += rest;
            break;
        }
        if pieces > 200 {
            return Err(Error::QuadratureNonConvergence {
                residual: rest,
                evaluations: pieces * 15,
            });
        }
        lo = hi;
    }
    b1 += acc;
    if !b1.is_finite() {
        return Err(Error::NonFinite("abks b1".into()));
    }
    Ok(ZetaResult {
        zeta_at_0: a0,
        zeta_prime_at_0: b1,
        det: (-b1).exp(),
        est_error: est,
        route: ZetaRoute::Abks,
    })
}

/// ABKS route on the torus with the analytic coefficients.
pub fn abks_det(torus: &ComplexTorus, conv: LaplaceConvention, q: usize, tol: f64) -> Result<ZetaResult> {
    let h = HeatTrace::new(torus, conv, q, 1e-15, 1.0)?;
    let coeffs = h.analytic_coeffs();
    abks_b1(&h, &coeffs, torus.n(), tol)
}

/// ζ(0), ζ′(0) via the incomplete-gamma continuation, split at T = t*.
///
/// With θ = C[A t^{−n} S(t) − 1], S = Σ_{v∈Λ} e^{−π²|v|²/(ct)}, b_v = π²|v|²/c:
///
///   ζ′(0) = C[−A T^{−n}/n − log T + A Σ'_v b_v^{−n} Γ(n, b_v/T)]
///           + Σ'_ξ mult·Γ(0, λ_ξ T) − γ ζ(0),    ζ(0) = −C.
pub fn epstein_zeta_det(torus: &ComplexTorus, conv: LaplaceConvention, q: usize) -> Result<ZetaResult> {
    epstein_zeta_det_tol(torus, conv, q, 1e-13)
}

pub fn epstein_zeta_det_tol(torus: &ComplexTorus, conv: LaplaceConvention, q: usize, tol: f64) -> Result<ZetaResult> {
    let n = torus.n();
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let c = conv.scale(torus)?;
    let cm = binomial(n, q) as f64;
    let v = torus.covolume();
    let amp = v * (PI / c).powi(n as i32);
    let big_t = crossover_time(torus, c);
    let d = 2 * n;
    let nf = n as f64;

    let q_gram = torus.dual_gram();
    let l_gram = torus.lattice_gram();
    let q_diam = cell_diameter(q_gram);
    let l_diam = cell_diameter(l_gram);

    // Γ(0, x) ≤ e^{−x}/x
    let a_dir = c * big_t;
    let dir_bound = |r2: f64| gaussian_tail_bound_with(d, 1.0 / v, q_diam, a_dir, r2) / (a_dir * r2);
    let dir_r2 = radius_for(nf / a_dir, tol / (2.0 * cm), dir_bound);

    // Γ(n, x) ≤ 2x^{n−1}e^{−x} once x ≥ 2(n−1): b^{−n}Γ(n, b/T) ≤ 2e^{−b/T}/(b T^{n−1})
    let a_dual = PI * PI / (c * big_t);
    let dual_bound = |r2: f64| {
        let b = PI * PI * r2 / c;
        if b / big_t < 2.0 * (nf - 1.0) {
            return f64::INFINITY;
        }
        amp * 2.0 / (b * big_t.powi(n as i32 - 1)) * gaussian_tail_bound_with(d, v, l_diam, a_dual, r2)
    };
    let dual_r2 = radius_for(nf / a_dual, tol / (2.0 * cm), dual_bound);

    let mut direct_sum = 0.0;
    for (nsq, m) in nonzero_groups(q_gram, dir_r2) {
        let x = c * nsq * big_t;
        direct_sum += m * incomplete_gamma_upper_real(0.0, x)?;
    }
    let mut dual_sum = 0.0;
    for (nsq, m) in nonzero_groups(l_gram, dual_r2) {
        let b = PI * PI * nsq / c;
        dual_sum += m * b.powi(-(n as i32)) * incomplete_gamma_upper_real(nf, b / big_t)?;
    }

    let zeta0 = -cm;
    let f0 = cm * (-amp * big_t.powi(-(n as i32)) / nf - big_t.ln() + amp * dual_sum) + cm * direct_sum;
    let zp = f0 + euler_gamma() * zeta0;
    let trunc = cm * dir_bound(dir_r2) + cm * dual_bound(dual_r2);
    let rounding = 64.0
        * f64::EPSILON
        * (cm * (amp * big_t.powi(-(n as i32)) / nf + big_t.ln().abs()) + cm * direct_sum.abs() + zp.abs());
    if !zp.is_finite() {
        return Err(Error::NonFinite("epstein zeta derivative".into()));
    }
    Ok(ZetaResult {
        zeta_at_0: zeta0,
        zeta_prime_at_0: zp,
        det: (-zp).exp(),
        est_error: trunc + rounding,
        route: ZetaRoute::EpsteinContinuation,
    })
}

/// Both routes; errors if they disagree by more than `tol`.
pub fn cross_checked_det(
    torus: &ComplexTorus,
    conv: LaplaceConvention,
    q: usize,
    tol: f64,
) -> Result<(ZetaResult, ZetaResult)> {
    let e = epstein_zeta_det(torus, conv, q)?;
    let a = abks_det(torus, conv, q, 1e-10)?;
    if (a.zeta_prime_at_0 - e.zeta_prime_at_0).abs() > tol {
        return Err(Error::RouteDisagreement {
            abks: a.zeta_prime_at_0,
            epstein: e.zeta_prime_at_0,
            tol,
        });
    }
    Ok((e, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::CoeffSource;
    use crate::special::dedekind_eta;
    use num_complex::Complex64;

    fn torus(re: f64, im: f64) -> ComplexTorus {
        ComplexTorus::from_tau(Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn toy_spectrum_reproduces_log_product() {
        let lambdas = [0.7, 1.3, 2.0, 3.5, 11.0];
        let theta = |t: f64| lambdas.iter().map(|l| (-t * l).exp()).sum::<f64>();
        let coeffs = AsymptoticCoeffs {
            a: vec![lambdas.len() as f64, 0.0],
            source: CoeffSource::AnalyticTorus,
            residual: None,
        };
        let r = abks_b1(&theta, &coeffs, 1, 1e-11).unwrap();
        let expected: f64 = -lambdas.iter().map(|l| l.ln()).sum::<f64>();
        assert!(
            (r.zeta_prime_at_0 - expected).abs() < 1e-9,
            "{} vs {}",
            r.zeta_prime_at_0,
            expected
        );
        assert_eq!(r.zeta_at_0, 5.0);
    }

    #[test]
    fn routes_agree_and_match_eta_on_de_rham() {
        for &(re, im) in &[(0.0, 1.0), (0.0, 2.0), (0.5, 0.75f64.sqrt()), (0.3, 1.7)] {
            let t = torus(re, im);
            let e = epstein_zeta_det(&t, LaplaceConvention::DeRham, 0).unwrap();
            let a = abks_det(&t, LaplaceConvention::DeRham, 0, 1e-10).unwrap();
            assert!(
                (e.zeta_prime_at_0 - a.zeta_prime_at_0).abs() < 1e-8,
                "{re}+{im}i: {} vs {}",
                e.zeta_prime_at_0,
                a.zeta_prime_at_0
            );
            assert_eq!(e.zeta_at_0, -1.0);
            assert!((a.zeta_at_0 + 1.0).abs() < 1e-12);
            let eta = dedekind_eta(Complex64::new(re, im), 1e-16).unwrap().value.norm();
            let oracle = im * im * eta.powi(4);
            assert!((e.det / oracle - 1.0).abs() < 1e-10, "{} vs {}", e.det, oracle);
        }
    }

    #[test]
    fn raw_epstein_at_i_is_four_pi_squared_eta_fourth() {
        let t = torus(0.0, 1.0);
        let e = epstein_zeta_det(&t, LaplaceConvention::RawEpstein, 0).unwrap();
        let eta4 = dedekind_eta(Complex64::new(0.0, 1.0), 1e-16)
            .unwrap()
            .value
            .norm()
            .powi(4);
        assert!((eta4 - 0.348_301).abs() < 1e-6);
        assert!((e.det / (4.0 * PI * PI * eta4) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dolbeault_det_is_twice_de_rham() {
        let t = torus(0.3, 1.7);
        let dr = epstein_zeta_det(&t, LaplaceConvention::DeRham, 0).unwrap();
        let db = epstein_zeta_det(&t, LaplaceConvention::Dolbeault, 0).unwrap();
        assert!((db.det / dr.det - 2.0).abs() < 1e-11);
        // ζ′ shifts by −ζ(0)·log c with c = 1/2
        assert!((db.zeta_prime_at_0 - dr.zeta_prime_at_0 - 0.5f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn higher_dimensional_routes_agree() {
        let t = ComplexTorus::product(&[Complex64::new(0.0, 1.0), Complex64::new(0.2, 1.3)]).unwrap();
        for q in 0..=2 {
            let e = epstein_zeta_det(&t, LaplaceConvention::Dolbeault, q).unwrap();
            let a = abks_det(&t, LaplaceConvention::Dolbeault, q, 1e-10).unwrap();
            assert!(
                (e.zeta_prime_at_0 - a.zeta_prime_at_0).abs() < 1e-7,
                "q={q}: {} vs {}",
                e.zeta_prime_at_0,
                a.zeta_prime_at_0
            );
            assert_eq!(e.zeta_at_0, -(binomial(2, q) as f64));
        }
    }

    #[test]
    fn cross_check_reports_disagreement_type() {
        let t = torus(0.0, 1.0);
        let (e, a) = cross_checked_det(&t, LaplaceConvention::DeRham, 0, 1e-6).unwrap();
        assert_eq!(e.route, ZetaRoute::EpsteinContinuation);
        assert_eq!(a.route, ZetaRoute::Abks);
    }
}

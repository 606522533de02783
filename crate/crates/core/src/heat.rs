//! Heat traces θ(t) = Σ' mult·exp(−tλ) on flat tori and their short-time
//! coefficients.
//!
//! Two lattice sums represent the same function. The direct sum runs over
//! the dual lattice; the Poisson-dual form is
//!
//!   θ(t) = C(n,q)·[A t^{−n} Σ_{v∈Λ} exp(−π²|v|²/(c t)) − 1],  A = V (π/c)^n,
//!
//! with λ = c|ξ|² and V the covolume. The direct sum converges fast for large
//! t, the dual one for small t; they meet at t* = π V^{1/n} / c.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::binomial;
use crate::lattice::{
    cell_diameter, crossover_time, enumerate_gram, gaussian_tail_bound_with, group_modes, ComplexTorus,
    LaplaceConvention,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatRoute {
    Direct,
    PoissonDual,
}

impl HeatRoute {
    pub fn name(&self) -> &'static str {
        match self {
            HeatRoute::Direct => "direct",
            HeatRoute::PoissonDual => "poisson_dual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatTraceValue {
    pub t: f64,
    pub value: f64,
    pub abs_error: f64,
    pub route: HeatRoute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffSource {
    AnalyticTorus,
    Fitted,
}

/// θ(t) = Σ_k a[k] t^{−k} + O(t) as t → 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCoeffs {
    pub a: Vec<f64>,
    pub source: CoeffSource,
    /// Least-squares residual norm for fitted coefficients.
    pub residual: Option<f64>,
}

impl AsymptoticCoeffs {
    pub fn eval(&self, t: f64) -> f64 {
        self.a.iter().enumerate().map(|(k, &ak)| ak * t.powi(-(k as i32))).sum()
    }
}

/// A zero-mode-free heat trace, as consumed by the ABKS formula.
pub trait TraceFunction {
    fn trace(&self, t: f64) -> f64;

    /// θ(t) − Σ a_k t^{−k}. Implementors with a cancellation-free form
    /// should override this.
    fn remainder(&self, t: f64, coeffs: &AsymptoticCoeffs) -> f64 {
        self.trace(t) - coeffs.eval(t)
    }

    /// Smallest eigenvalue, if known; used to bound the t → ∞ tail.
    fn decay_rate(&self) -> Option<f64> {
        None
    }
}

impl<F: Fn(f64) -> f64> TraceFunction for F {
    fn trace(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Heat trace of Δ_q on a flat torus with both lattice sums precomputed.
#[derive(Debug, Clone)]
pub struct HeatTrace {
    n: usize,
    form_mult: f64,
    c: f64,
    covolume: f64,
    amp: f64,
    t_star: f64,
    band: f64,
    tol: f64,
    // (|ξ|², count), nonzero only
    direct: Vec<(f64, f64)>,
    direct_r2: f64,
    direct_diam: f64,
    dual: Vec<(f64, f64)>,
    dual_r2: f64,
    dual_diam: f64,
}

/// Smallest r² (on a geometric ladder) with bound(r²) ≤ target.
pub(crate) fn radius_for<B: Fn(f64) -> f64>(start: f64, target: f64, bound: B) -> f64 {
    let mut r2 = start.max(1e-3);
    for _ in 0..400 {
        if bound(r2) <= target {
            return r2;
        }
        r2 *= 1.15;
    }
    r2
}

pub(crate) fn nonzero_groups(gram: &DMatrix<f64>, r2: f64) -> Vec<(f64, f64)> {
    let modes = enumerate_gram(gram, r2);
    group_modes(gram, &modes)
        .into_iter()
        .filter(|(v, _)| *v > 0.0)
        .map(|(v, m)| (v, m as f64))
        .collect()
}

impl HeatTrace {
    /// Both sums certified to absolute truncation error `tol` on
    /// [t*/band, ∞) (direct) and (0, t*·band] (dual).
    pub fn new(torus: &ComplexTorus, conv: LaplaceConvention, q: usize, tol: f64, band: f64) -> Result<Self> {
        let n = torus.n();
        if q > n {
            return Err(Error::DegreeOutOfRange { q, n });
        }
        if !(tol > 0.0) || !(band >= 1.0) {
            return Err(Error::InvalidInput("heat trace needs tol > 0 and band >= 1".into()));
        }
        let c = conv.scale(torus)?;
        let form_mult = binomial(n, q) as f64;
        let v = torus.covolume();
        let amp = v * (PI / c).powi(n as i32);
        let t_star = crossover_time(torus, c);
        let d = 2 * n;

        let q_gram = torus.dual_gram();
        let l_gram = torus.lattice_gram();
        let direct_diam = cell_diameter(q_gram);
        let dual_diam = cell_diameter(l_gram);

        let a_direct = c * t_star / band;
        let direct_r2 = radius_for(n as f64 / a_direct, tol / (2.0 * form_mult), |r2| {
            gaussian_tail_bound_with(d, 1.0 / v, direct_diam, a_direct, r2)
        });
        let t_hi = t_star * band;
        let a_dual = PI * PI / (c * t_hi);
        let dual_r2 = radius_for(n as f64 / a_dual, tol / (2.0 * form_mult), |r2| {
            amp * t_hi.powi(-(n as i32)) * gaussian_tail_bound_with(d, v, dual_diam, a_dual, r2)
        });

        Ok(HeatTrace {
            n,
            form_mult,
            c,
            covolume: v,
            amp,
            t_star,
            band,
            tol,
            direct: nonzero_groups(q_gram, direct_r2),
            direct_r2,
            direct_diam,
            dual: nonzero_groups(l_gram, dual_r2),
            dual_r2,
            dual_diam,
        })
    }

    pub fn crossover(&self) -> f64 {
        self.t_star
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    /// Number of grouped terms in (direct, dual) sums.
    pub fn sizes(&self) -> (usize, usize) {
        (self.direct.len(), self.dual.len())
    }

    pub fn analytic_coeffs(&self) -> AsymptoticCoeffs {
        let mut a = vec![0.0; self.n + 1];
        a[self.n] = self.form_mult * self.amp;
        a[0] -= self.form_mult;
        AsymptoticCoeffs {
            a,
            source: CoeffSource::AnalyticTorus,
            residual: None,
        }
    }

    pub fn theta_direct(&self, t: f64) -> Result<HeatTraceValue> {
        check_t(t)?;
        let mut sum = 0.0;
        for &(nsq, m) in &self.direct {
            let e = (-t * self.c * nsq).exp();
            if e == 0.0 {
                break;
            }
            sum += m * e;
        }
        let value = self.form_mult * sum;
        let trunc = self.form_mult
            * gaussian_tail_bound_with(
                2 * self.n,
                1.0 / self.covolume,
                self.direct_diam,
                self.c * t,
                self.direct_r2,
            );
        let abs_error = trunc + 4.0 * f64::EPSILON * value.abs();
        self.finish(t, value, abs_error, HeatRoute::Direct)
    }

    /// Σ'_{v∈Λ} exp(−π²|v|²/(ct)) and its truncation bound.
    fn dual_partial(&self, t: f64) -> (f64, f64) {
        let a = PI * PI / (self.c * t);
        let mut sum = 0.0;
        for &(nsq, m) in &self.dual {
            let e = (-a * nsq).exp();
            if e == 0.0 {
                break;
            }
            sum += m * e;
        }
        let trunc = gaussian_tail_bound_with(2 * self.n, self.covolume, self.dual_diam, a, self.dual_r2);
        (sum, trunc)
    }

    pub fn theta_dual(&self, t: f64) -> Result<HeatTraceValue> {
        check_t(t)?;
        let (s, trunc) = self.dual_partial(t);
        let lead = self.amp * t.powi(-(self.n as i32));
        let value = self.form_mult * (lead * (1.0 + s) - 1.0);
        let abs_error = self.form_mult * lead * trunc + 4.0 * f64::EPSILON * self.form_mult * (lead * (1.0 + s) + 1.0);
        self.finish(t, value, abs_error, HeatRoute::PoissonDual)
    }

    fn finish(&self, t: f64, value: f64, abs_error: f64, route: HeatRoute) -> Result<HeatTraceValue> {
        if !value.is_finite() || !abs_error.is_finite() {
            return Err(Error::NonFinite(format!("heat trace at t = {t}")));
        }
        if abs_error > self.tol {
            return Err(Error::ToleranceUnachievable {
                requested: self.tol,
                achieved: abs_error,
            });
        }
        Ok(HeatTraceValue {
            t,
            value: value.max(0.0),
            abs_error,
            route,
        })
    }

    /// Route chosen by t against the crossover.
    pub fn theta(&self, t: f64) -> Result<HeatTraceValue> {
        if t >= self.t_star {
            self.theta_direct(t)
        } else {
            self.theta_dual(t)
        }
    }

    /// Independent t values evaluated in parallel; output order follows input.
    pub fn theta_many(&self, ts: &[f64]) -> Result<Vec<HeatTraceValue>> {
        ts.par_iter().map(|&t| self.theta(t)).collect()
    }

    /// θ − a_n^{an} t^{−n} − a_0^{an} without cancellation.
    fn analytic_remainder(&self, t: f64) -> f64 {
        if t >= self.t_star {
            let th = self.theta_direct_unchecked(t);
            th - self.form_mult * self.amp * t.powi(-(self.n as i32)) + self.form_mult
        } else {
            let (s, _) = self.dual_partial(t);
            self.form_mult * self.amp * t.powi(-(self.n as i32)) * s
        }
    }

    fn theta_direct_unchecked(&self, t: f64) -> f64 {
        self.form_mult
            * self
                .direct
                .iter()
                .map(|&(nsq, m)| m * (-t * self.c * nsq).exp())
                .sum::<f64>()
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("heat trace needs finite t > 0, got {t}")));
    }
    Ok(())
}

impl TraceFunction for HeatTrace {
    fn trace(&self, t: f64) -> f64 {
        if t >= self.t_star {
            self.theta_direct_unchecked(t)
        } else {
            let (s, _) = self.dual_partial(t);
            self.form_mult * (self.amp * t.powi(-(self.n as i32)) * (1.0 + s) - 1.0)
        }
    }

    fn remainder(&self, t: f64, coeffs: &AsymptoticCoeffs) -> f64 {
        let own = self.analytic_coeffs();
        let mut r = self.analytic_remainder(t);
        for k in 0..coeffs.a.len().max(own.a.len()) {
            let diff = own.a.get(k).copied().unwrap_or(0.0) - coeffs.a.get(k).copied().unwrap_or(0.0);
            if diff != 0.0 {
                r += diff * t.powi(-(k as i32));
            }
        }
        r
    }

    fn decay_rate(&self) -> Option<f64> {
        self.direct.first().map(|&(nsq, _)| self.c * nsq)
    }
}

/// θ(torus, conv, q, t) with automatic route and absolute tolerance `tol`.
pub fn theta(torus: &ComplexTorus, conv: LaplaceConvention, q: usize, t: f64, tol: f64) -> Result<HeatTraceValue> {
    HeatTrace::new(torus, conv, q, tol, 1.0)?.theta(t)
}

/// Analytic short-time coefficients a_0..a_n of the zero-mode-free trace on
/// functions: a_n = V(π/c)^n (de Rham: V/(4π)^n), a_0 = −1, the rest 0.
pub fn asymptotic_coeffs(torus: &ComplexTorus, conv: LaplaceConvention) -> Result<AsymptoticCoeffs> {
    asymptotic_coeffs_q(torus, conv, 0)
}

/// As [`asymptotic_coeffs`] on (0,q)-forms (everything scaled by C(n,q)).
pub fn asymptotic_coeffs_q(torus: &ComplexTorus, conv: LaplaceConvention, q: usize) -> Result<AsymptoticCoeffs> {
    let n = torus.n();
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let c = conv.scale(torus)?;
    let m = binomial(n, q) as f64;
    let mut a = vec![0.0; n + 1];
    a[n] = m * torus.covolume() * (PI / c).powi(n as i32);
    a[0] -= m;
    Ok(AsymptoticCoeffs {
        a,
        source: CoeffSource::AnalyticTorus,
        residual: None,
    })
}

/// Least-squares fit of Σ_{k=0}^n a_k t^{−k} to trace samples.
///
/// Columns are normalized before the SVD; a condition number above 1e12
/// is refused.
pub fn fit_asymptotic(samples: &[(f64, f64)], n: usize) -> Result<AsymptoticCoeffs> {
    let m = samples.len();
    if m < 2 * (n + 1) {
        return Err(Error::InvalidInput(format!(
            "fit needs at least {} samples, got {m}",
            2 * (n + 1)
        )));
    }
    if samples.iter().any(|&(t, v)| !(t > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("fit samples need t > 0 and finite values".into()));
    }
    let mut design = DMatrix::from_fn(m, n + 1, |i, k| samples[i].0.powi(-(k as i32)));
    let mut scales = vec![0.0; n + 1];
    for k in 0..=n {
        let s = design.column(k).norm();
        scales[k] = s;
        design.column_mut(k).scale_mut(1.0 / s);
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= 1e12) {
        return Err(Error::IllConditioned { condition });
    }
    let rhs = nalgebra::DVector::from_iterator(m, samples.iter().map(|s| s.1));
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::NonFinite(format!("least squares: {e}")))?;
    let residual = (&design * &x - &rhs).norm();
    let a = (0..=n).map(|k| x[k] / scales[k]).collect();
    Ok(AsymptoticCoeffs {
        a,
        source: CoeffSource::Fitted,
        residual: Some(residual),
    })
}

/// Geometric grid of `count` points on [t_min, t_max].
pub fn geometric_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![t_min];
    }
    let r = (t_max / t_min).ln() / (count - 1) as f64;
    (0..count).map(|i| t_min * (r * i as f64).exp()).collect()
}

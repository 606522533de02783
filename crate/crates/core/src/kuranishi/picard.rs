//! Order-by-order solution of ∂̄φ + ½[φ,φ] = 0 as a power series
//! φ(τ) = Σ_I φ_I τ^I in the first-order parameters.
//!
//! At order m ≥ 2 the coefficient is φ_I = −½ ∂̄*G S_I with
//! S_I = Σ_{J+J′=I} [φ_J, φ_J′] over ordered pairs. The harmonic part of S_I
//! is the obstruction; it is measured and must stay below the tolerance.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::bracket::bracket;
use super::field::TensorField;
use super::ops::{dbar, dbar_star, green};
use crate::error::{Error, Result};

/// Admissibility test applied to the first-order data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedCheck {
    /// ∂̄φ_i = 0 and ∂̄*φ_i = 0.
    #[default]
    Harmonic,
    /// ∂̄φ_i = 0 only. Needed for seeds with a nonzero bracket, since
    /// harmonic Beltrami differentials on a flat torus are constant.
    Closed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub order: usize,
    pub mode_radius: f64,
    pub tol: f64,
    pub seed_check: SeedCheck,
    /// Every parameter is set to this value when measuring the residual of
    /// the truncated series.
    pub probe: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            order: 4,
            mode_radius: 8.0,
            tol: 1e-10,
            seed_check: SeedCheck::Harmonic,
            probe: 0.05,
        }
    }
}

/// Multi-index I ∈ N^N, |I| = Σ I_i.
pub type MultiIndex = Vec<u32>;

#[derive(Debug, Clone)]
pub struct KuranishiSolution {
    pub first_order: Vec<TensorField>,
    pub order: usize,
    pub coeffs: BTreeMap<MultiIndex, TensorField>,
    /// Entry m−1: ‖∂̄φ⁽ᵐ⁾ + ½[φ⁽ᵐ⁾,φ⁽ᵐ⁾]‖ for the order-m truncation at the probe.
    pub residual_norms: Vec<f64>,
    /// Entry m−1: ‖∂̄φ_I + ½S_I‖ over |I| = m, the part of the equation solved at order m.
    pub order_residuals: Vec<f64>,
    pub mode_radius: f64,
    pub probe: f64,
}

/// All I with |I| = m, lexicographic.
pub fn multi_indices(len: usize, m: u32) -> Vec<MultiIndex> {
    fn rec(len: usize, m: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == len {
            prefix.push(m);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=m).rev() {
            prefix.push(first);
            rec(len, m - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if len == 0 {
        return out;
    }
    rec(len, m, &mut Vec::with_capacity(len), &mut out);
    out.sort();
    out
}

/// Ordered splittings I = J + J′ with |J|, |J′| ≥ 1.
fn splittings(i: &[u32]) -> Vec<(MultiIndex, MultiIndex)> {
    let mut out = Vec::new();
    let total: u32 = i.iter().sum();
    let mut j = vec![0u32; i.len()];
    loop {
        let s: u32 = j.iter().sum();
        if s >= 1 && s < total {
            let jp: Vec<u32> = i.iter().zip(&j).map(|(a, b)| a - b).collect();
            out.push((j.clone(), jp));
        }
        // odometer over 0 ≤ J ≤ I
        let mut pos = 0;
        loop {
            if pos == j.len() {
                return out;
            }
            if j[pos] < i[pos] {
                j[pos] += 1;
                break;
            }
            j[pos] = 0;
            pos += 1;
        }
    }
}

fn check_radius(f: &TensorField, radius: f64) -> Result<()> {
    let norm = f.max_mode_norm();
    if norm > radius {
        return Err(Error::ModeOverflow { norm, radius });
    }
    Ok(())
}

fn check_seeds(first_order: &[TensorField], opts: &PicardOptions) -> Result<()> {
    if first_order.is_empty() {
        return Err(Error::InvalidInput("no first-order data".into()));
    }
    for (i, f) in first_order.iter().enumerate() {
        if !f.is_beltrami() {
            return Err(Error::TypeMismatch(format!(
                "first-order datum {i} is not a Beltrami differential"
            )));
        }
        first_order[0].same_space(f)?;
        let scale = f.max_abs().max(1.0) * (1.0 + f.max_mode_norm());
        let d = dbar(f)?.max_abs();
        if d > 1e-12 * scale {
            return Err(Error::NonHarmonicSeed {
                index: i,
                reason: format!("|dbar phi| = {d:e}"),
            });
        }
        if opts.seed_check == SeedCheck::Harmonic {
            let ds = dbar_star(f)?.max_abs();
            if ds > 1e-12 * scale {
                return Err(Error::NonHarmonicSeed {
                    index: i,
                    reason: format!("|dbar* phi| = {ds:e}"),
                });
            }
        }
        check_radius(f, opts.mode_radius)?;
    }
    Ok(())
}

fn unit_vector(len: usize, i: usize) -> MultiIndex {
    let mut v = vec![0; len];
    v[i] = 1;
    v
}

/// Solves with default options except order, radius and tolerance.
pub fn picard_solve(
    first_order: &[TensorField],
    order: usize,
    mode_radius: f64,
    tol: f64,
) -> Result<KuranishiSolution> {
    picard_solve_with(
        first_order,
        &PicardOptions {
            order,
            mode_radius,
            tol,
            ..PicardOptions::default()
        },
    )
}

pub fn picard_solve_with(first_order: &[TensorField], opts: &PicardOptions) -> Result<KuranishiSolution> {
    if opts.order == 0 {
        return Err(Error::InvalidInput("order must be at least 1".into()));
    }
    if !(opts.mode_radius > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("mode radius and tolerance must be positive".into()));
    }
    check_seeds(first_order, opts)?;
    let nseeds = first_order.len();
    let torus = first_order[0].torus_arc().clone();
    let half = Complex64::new(0.5, 0.0);

    let mut coeffs: BTreeMap<MultiIndex, TensorField> = BTreeMap::new();
    for (i, f) in first_order.iter().enumerate() {
        coeffs.insert(unit_vector(nseeds, i), f.clone());
    }
    let mut first = 0.0;
    for f in first_order {
        first += dbar(f)?.l2_norm().powi(2);
    }
    let mut order_residuals = vec![first.sqrt()];

    for m in 2..=opts.order as u32 {
        let level = multi_indices(nseeds, m);
        let solved: Vec<(MultiIndex, TensorField, f64)> = level
            .par_iter()
            .map(|idx| -> Result<(MultiIndex, TensorField, f64)> {
                let mut s = TensorField::zero(torus.clone(), 2, true)?;
                for (j, jp) in splittings(idx) {
                    let (a, b) = (&coeffs[&j], &coeffs[&jp]);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    s = s.add(&bracket(a, b)?)?;
                }
                let phi = dbar_star(&green(&s))?.scale(Complex64::new(-0.5, 0.0)).pruned();
                check_radius(&phi, opts.mode_radius)?;
                let r = dbar(&phi)?.axpy(half, &s)?;
                let rn = r.l2_norm();
                Ok((idx.clone(), phi, rn * rn))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sq = 0.0;
        for (idx, phi, r2) in solved {
            sq += r2;
            coeffs.insert(idx, phi);
        }
        let res = sq.sqrt();
        if !res.is_finite() {
            return Err(Error::NonFinite(format!("order {m} residual")));
        }
        if res > opts.tol {
            return Err(Error::Obstructed {
                order: m as usize,
                residual: res,
            });
        }
        order_residuals.push(res);
    }

    let mut sol = KuranishiSolution {
        first_order: first_order.to_vec(),
        order: opts.order,
        coeffs,
        residual_norms: Vec::new(),
        order_residuals,
        mode_radius: opts.mode_radius,
        probe: opts.probe,
    };
    let tau = vec![Complex64::new(opts.probe, 0.0); nseeds];
    sol.residual_norms = (1..=opts.order)
        .map(|m| sol.maurer_cartan_residual(&tau, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(sol)
}

fn monomial(tau: &[Complex64], idx: &[u32]) -> Complex64 {
    tau.iter()
        .zip(idx)
        .fold(Complex64::new(1.0, 0.0), |acc, (t, &e)| acc * t.powu(e))
}

impl KuranishiSolution {
    pub fn num_parameters(&self) -> usize {
        self.first_order.len()
    }

    pub fn coefficient(&self, idx: &[u32]) -> Option<&TensorField> {
        self.coeffs.get(idx)
    }

    /// Σ_{|I| ≤ max_order} φ_I τ^I.
    pub fn evaluate_truncated(&self, tau: &[Complex64], max_order: usize) -> Result<TensorField> {
        if tau.len() != self.num_parameters() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters",
                self.num_parameters()
            )));
        }
        let mut out = TensorField::zero(self.first_order[0].torus_arc().clone(), 1, true)?;
        for (idx, f) in &self.coeffs {
            let deg: u32 = idx.iter().sum();
            if deg as usize > max_order {
                continue;
            }
            out = out.axpy(monomial(tau, idx), f)?;
        }
        Ok(out)
    }

    pub fn evaluate(&self, tau: &[Complex64]) -> Result<TensorField> {
        self.evaluate_truncated(tau, self.order)
    }

    /// ‖∂̄φ + ½[φ,φ]‖ for the order-m truncation at τ.
    pub fn maurer_cartan_residual(&self, tau: &[Complex64], m: usize) -> Result<f64> {
        let phi = self.evaluate_truncated(tau, m)?;
        let r = dbar(&phi)?.axpy(Complex64::new(0.5, 0.0), &bracket(&phi, &phi)?)?;
        Ok(r.l2_norm())
    }

    /// Largest ‖∂̄*φ_I‖ over |I| ≥ 2.
    pub fn max_coclosed_defect(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (idx, f) in &self.coeffs {
            if idx.iter().sum::<u32>() >= 2 {
                worst = worst.max(dbar_star(f)?.l2_norm());
            }
        }
        Ok(worst)
    }

    /// JSON: multi-index → list of (mode, components), plus residuals.
    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = self
            .coeffs
            .iter()
            .map(|(idx, f)| {
                let modes: Vec<Value> = f
                    .coeffs()
                    .iter()
                    .map(|(k, v)| {
                        let comps: Vec<Value> = v.iter().map(|z| json!([z.re, z.im])).collect();
                        json!({ "k": k, "components": comps })
                    })
                    .collect();
                json!({ "index": idx, "modes": modes })
            })
            .collect();
        json!({
            "order": self.order,
            "mode_radius": self.mode_radius,
            "probe": self.probe,
            "residual_norms": self.residual_norms,
            "order_residuals": self.order_residuals,
            "coefficients": coeffs,
        })
    }
}

/// Two-parameter seed on the square product torus C²/(Z[i]²) with a
/// nonzero bracket: the constant φ₁ = ½ dz̄¹⊗∂₁ + dz̄²⊗∂₁ and
/// φ₂ = e^{2πi x₁} dz̄¹⊗(∂₁ + i∂₂). Both are ∂̄-closed; φ₂ is not coclosed,
/// so the solve uses [`SeedCheck::Closed`]. The series does not terminate:
/// the coefficients of τ₁^k τ₂ shrink by roughly ½ per order.
pub fn synthetic_seed() -> Result<Vec<TensorField>> {
    use crate::lattice::ComplexTorus;
    use std::sync::Arc;
    let i = Complex64::new(0.0, 1.0);
    let torus = Arc::new(ComplexTorus::product(&[i, i])?);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let phi1 = TensorField::constant_beltrami(torus.clone(), &[vec![one * 0.5, zero], vec![one, zero]])?;
    let phi2 = TensorField::mode(torus, 1, true, vec![1, 0, 0, 0], vec![one, i, zero, zero])?;
    Ok(vec![phi1, phi2])
}

/// Options the shipped synthetic seed is solved with.
pub fn synthetic_options(order: usize) -> PicardOptions {
    PicardOptions {
        order,
        mode_radius: 8.0,
        tol: 1e-10,
        seed_check: SeedCheck::Closed,
        probe: PROBE,
    }
}

const PROBE: f64 = 0.03;

//! The bracket of Beltrami differentials,
//!
//!   [φ,ψ]^ν_{ᾱβ̄} = Y_{αβ} − Y_{βα},  Y_{αβ} = φ^μ_ᾱ ∂_μ ψ^ν_β̄ − ψ^μ_β̄ ∂_μ φ^ν_ᾱ,
//!
//! computed as a convolution over Fourier modes. It is symmetric in φ ↔ ψ
//! and [φ,φ] = 2(φ^μ_ᾱ∂_μφ_β̄ − φ^μ_β̄∂_μφ_ᾱ).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::TensorField;
use super::ops::holomorphic_covector;
use crate::error::{Error, Result};
use crate::exterior::{combinations, index_of};

fn require_beltrami(f: &TensorField) -> Result<()> {
    if !f.is_beltrami() {
        return Err(Error::TypeMismatch(format!(
            "bracket needs (0,1)⊗T fields, got degree {} (vector-valued: {})",
            f.degree(),
            f.is_vector_valued()
        )));
    }
    Ok(())
}

/// Y_{αβ}^ν at mode k1 + k2 from φ̂(k1), ψ̂(k2), as an n×n×n array [α][β][ν].
fn y_block(
    n: usize,
    phi: &[Complex64],
    kappa1: &[Complex64],
    psi: &[Complex64],
    kappa2: &[Complex64],
) -> Vec<Complex64> {
    let i2pi = Complex64::new(0.0, 2.0 * PI);
    // contractions φ^μ_α κ2_μ and ψ^μ_β κ1_μ
    let phi_k2: Vec<Complex64> = (0..n)
        .map(|a| (0..n).map(|mu| phi[a * n + mu] * kappa2[mu]).sum::<Complex64>() * i2pi)
        .collect();
    let psi_k1: Vec<Complex64> = (0..n)
        .map(|b| (0..n).map(|mu| psi[b * n + mu] * kappa1[mu]).sum::<Complex64>() * i2pi)
        .collect();
    let mut y = vec![Complex64::new(0.0, 0.0); n * n * n];
    for a in 0..n {
        for b in 0..n {
            for nu in 0..n {
                y[(a * n + b) * n + nu] = phi_k2[a] * psi[b * n + nu] - psi_k1[b] * phi[a * n + nu];
            }
        }
    }
    y
}

/// [φ, ψ] as a (0,2)⊗T^{1,0} field.
pub fn bracket(phi: &TensorField, psi: &TensorField) -> Result<TensorField> {
    require_beltrami(phi)?;
    require_beltrami(psi)?;
    phi.same_space(psi)?;
    let torus = phi.torus_arc().clone();
    let n = torus.n();
    // no (0,2)-forms on a curve
    let mut out = TensorField::zero(torus.clone(), 2, true)?;
    let pairs_idx = combinations(n, 2);
    let width = out.width();

    let psi_modes: Vec<(&Vec<i64>, &Vec<Complex64>, Vec<Complex64>)> = psi
        .coeffs()
        .iter()
        .map(|(k, v)| (k, v, holomorphic_covector(&torus, k)))
        .collect();
    let phi_modes: Vec<(&Vec<i64>, &Vec<Complex64>)> = phi.coeffs().iter().collect();

    let partial: Vec<Vec<(Vec<i64>, Vec<Complex64>)>> = phi_modes
        .par_iter()
        .map(|(k1, v1)| {
            let kappa1 = holomorphic_covector(&torus, k1);
            let mut local = Vec::with_capacity(psi_modes.len());
            for (k2, v2, kappa2) in &psi_modes {
                let y = y_block(n, v1, &kappa1, v2, kappa2);
                let mut comps = vec![Complex64::new(0.0, 0.0); width];
                let mut any = false;
                for (a, b) in pairs_idx.iter().map(|p| (p[0], p[1])) {
                    let slot = index_of(&pairs_idx, &[a, b]);
                    for nu in 0..n {
                        let v = y[(a * n + b) * n + nu] - y[(b * n + a) * n + nu];
                        if v != Complex64::new(0.0, 0.0) {
                            any = true;
                        }
                        comps[slot * n + nu] = v;
                    }
                }
                if any {
                    let k: Vec<i64> = k1.iter().zip(k2.iter()).map(|(a, b)| a + b).collect();
                    local.push((k, comps));
                }
            }
            local
        })
        .collect();
    // sequential merge keeps the summation order fixed
    for local in partial {
        for (k, comps) in local {
            out.accumulate(&k, &comps, Complex64::new(1.0, 0.0));
        }
    }
    Ok(out.pruned())
}

/// Pointwise [φ,ψ] at x by central differences of order 4, step h; an
/// oracle independent of the mode-space convolution.
pub fn bracket_fd_pointwise(phi: &TensorField, psi: &TensorField, x: &[f64], h: f64) -> Result<Vec<Complex64>> {
    require_beltrami(phi)?;
    require_beltrami(psi)?;
    phi.same_space(psi)?;
    let n = phi.n();
    if n < 2 {
        return Err(Error::DegreeOutOfRange { q: 2, n });
    }
    // ∂_μ = ½(∂/∂x_μ − i ∂/∂y_μ)
    let deriv = |f: &TensorField| -> Vec<Vec<Complex64>> {
        let mut d = vec![vec![Complex64::new(0.0, 0.0); f.width()]; n];
        for mu in 0..n {
            for (axis, w) in [(mu, Complex64::new(0.5, 0.0)), (n + mu, Complex64::new(0.0, -0.5))] {
                let at = |s: f64| {
                    let mut p = x.to_vec();
                    p[axis] += s;
                    f.evaluate(&p)
                };
                let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
                for c in 0..f.width() {
                    let g = (8.0 * (p1[c] - m1[c]) - (p2[c] - m2[c])) / (12.0 * h);
                    d[mu][c] += w * g;
                }
            }
        }
        d
    };
    let fphi = phi.evaluate(x);
    let fpsi = psi.evaluate(x);
    let dphi = deriv(phi);
    let dpsi = deriv(psi);
    let y = |a: usize, b: usize, nu: usize| {
        let mut s = Complex64::new(0.0, 0.0);
        for mu in 0..n {
            s += fphi[a * n + mu] * dpsi[mu][b * n + nu] - fpsi[b * n + mu] * dphi[mu][a * n + nu];
        }
        s
    };
    let pairs = combinations(n, 2);
    let mut out = vec![Complex64::new(0.0, 0.0); pairs.len() * n];
    for (slot, p) in pairs.iter().enumerate() {
        for nu in 0..n {
            out[slot * n + nu] = y(p[0], p[1], nu) - y(p[1], p[0], nu);
        }
    }
    Ok(out)
}

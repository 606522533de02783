//! Mode-diagonal operators: ∂̄, ∂̄*, the Dolbeault Laplacian, its Green
//! operator and the harmonic projector.
//!
//! On e_ξ, ∂_a = 2πiκ_a and ∂_ā = 2πiκ̄_a with κ_a = (ξ_a − iξ_{n+a})/2.
//! (0,1)-covectors carry the Hermitian form P = 2H̄^{-1}, i.e.
//! ⟨dz̄^i, dz̄^j⟩ = 2(H^{-1})_{ij}, extended to Λ^q by minors.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::field::TensorField;
use crate::error::{Error, Result};
use crate::exterior::{induced_gram, wedge_matrix};
use crate::lattice::ComplexTorus;

/// κ(k) ∈ C^n for the mode label k.
pub fn holomorphic_covector(torus: &ComplexTorus, k: &[i64]) -> Vec<Complex64> {
    let n = torus.n();
    let xi = torus.mode_vector(k);
    (0..n).map(|a| Complex64::new(xi[a], -xi[n + a]) * 0.5).collect()
}

/// 2πiκ̄(k), the symbol of ∂̄ on e_ξ.
pub fn dbar_symbol(torus: &ComplexTorus, k: &[i64]) -> Vec<Complex64> {
    let i2pi = Complex64::new(0.0, 2.0 * PI);
    holomorphic_covector(torus, k)
        .into_iter()
        .map(|c| i2pi * c.conj())
        .collect()
}

/// Hermitian form on (0,1)-covectors, P = 2H̄^{-1}.
pub fn covector_metric(torus: &ComplexTorus) -> DMatrix<Complex64> {
    let h = torus.metric();
    let inv = h.clone().try_inverse().expect("metric is positive definite");
    inv.map(|z| z.conj() * 2.0)
}

/// Gram matrix of the induced Hermitian form on (0,q)-covectors.
pub fn form_gram(torus: &ComplexTorus, q: usize) -> DMatrix<Complex64> {
    induced_gram(&covector_metric(torus), q)
}

/// Apply a per-mode matrix acting on the form index, identically on each
/// T^{1,0} component.
fn apply_blockwise(m: &DMatrix<Complex64>, comps: &[Complex64], nv: usize) -> Vec<Complex64> {
    let rows = m.nrows();
    let cols = m.ncols();
    let mut out = vec![Complex64::new(0.0, 0.0); rows * nv];
    for r in 0..rows {
        for c in 0..cols {
            let mrc = m[(r, c)];
            if mrc == Complex64::new(0.0, 0.0) {
                continue;
            }
            for nu in 0..nv {
                out[r * nv + nu] += mrc * comps[c * nv + nu];
            }
        }
    }
    out
}

/// ∂̄: (0,q) → (0,q+1); q = n is out of range.
pub fn dbar(f: &TensorField) -> Result<TensorField> {
    let torus = f.torus_arc().clone();
    let mut out = TensorField::zero(torus.clone(), f.degree() + 1, f.is_vector_valued())?;
    let nv = f.nv();
    for (k, v) in f.coeffs() {
        if k.iter().all(|&x| x == 0) {
            continue;
        }
        let e = wedge_matrix(&dbar_symbol(&torus, k), f.degree());
        out.coeffs.insert(k.clone(), apply_blockwise(&e, v, nv));
    }
    Ok(out.pruned())
}

/// ∂̄*: (0,q) → (0,q−1) for q ≥ 1, the adjoint of ∂̄ for the induced L² pairing.
pub fn dbar_star(f: &TensorField) -> Result<TensorField> {
    let torus = f.torus_arc().clone();
    let q = f.degree();
    if q == 0 {
        return Err(Error::DegreeOutOfRange { q: 0, n: torus.n() });
    }
    let mut out = TensorField::zero(torus.clone(), q - 1, f.is_vector_valued())?;
    let nv = f.nv();
    let kq = form_gram(&torus, q);
    let kqm = form_gram(&torus, q - 1);
    let kqm_inv = kqm.try_inverse().expect("induced form is positive definite");
    for (k, v) in f.coeffs() {
        if k.iter().all(|&x| x == 0) {
            continue;
        }
        let e = wedge_matrix(&dbar_symbol(&torus, k), q - 1);
        let adj = &kqm_inv * e.adjoint() * &kq;
        out.coeffs.insert(k.clone(), apply_blockwise(&adj, v, nv));
    }
    Ok(out.pruned())
}

/// Matrix of Δ on (0,q)-forms at mode k, assembled from the ∂̄ and ∂̄*
/// symbols: E_{q−1}A_q + A_{q+1}E_q with A_q = K_{q−1}^{-1}E_{q−1}^†K_q.
pub fn form_laplacian_symbol(torus: &ComplexTorus, k: &[i64], q: usize) -> Result<DMatrix<Complex64>> {
    let n = torus.n();
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let w = dbar_symbol(torus, k);
    let adjoint = |deg: usize| -> DMatrix<Complex64> {
        // ∂̄*: Λ^deg → Λ^{deg−1}
        let e = wedge_matrix(&w, deg - 1);
        let kinv = form_gram(torus, deg - 1)
            .try_inverse()
            .expect("induced form is positive definite");
        kinv * e.adjoint() * form_gram(torus, deg)
    };
    let dim = crate::exterior::binomial(n, q) as usize;
    let mut l = DMatrix::zeros(dim, dim);
    if q > 0 {
        l += wedge_matrix(&w, q - 1) * adjoint(q);
    }
    if q < n {
        l += adjoint(q + 1) * wedge_matrix(&w, q);
    }
    Ok(l)
}

/// Real eigenvalues of a matrix self-adjoint for ⟨α,β⟩ = β^†Kα.
pub fn self_adjoint_eigenvalues(l: &DMatrix<Complex64>, k: &DMatrix<Complex64>) -> Vec<f64> {
    // with K = CC^†, C^†LC^{−†} is Hermitian
    let c = k.clone().cholesky().expect("Gram matrix is positive definite").l();
    let c_inv_adj = c.adjoint().try_inverse().expect("Cholesky factor is invertible");
    let h = c.adjoint() * l * c_inv_adj;
    let herm = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().collect()
}

/// Dolbeault eigenvalue 2π²|ξ|² of the mode k.
pub fn mode_eigenvalue(torus: &ComplexTorus, k: &[i64]) -> f64 {
    2.0 * PI * PI * torus.mode_normsq(k)
}

/// Δ = ∂̄∂̄* + ∂̄*∂̄, composed from the two operators.
pub fn laplacian(f: &TensorField) -> Result<TensorField> {
    let mut out = TensorField::zero(f.torus_arc().clone(), f.degree(), f.is_vector_valued())?;
    if f.degree() > 0 {
        out = out.add(&dbar(&dbar_star(f)?)?)?;
    }
    if f.degree() < f.n() {
        out = out.add(&dbar_star(&dbar(f)?)?)?;
    }
    Ok(out)
}

/// Green operator: divides each nonzero mode by its eigenvalue, kills k = 0.
pub fn green(f: &TensorField) -> TensorField {
    let torus = f.torus_arc().clone();
    let mut out = f.clone();
    out.coeffs.retain(|k, _| k.iter().any(|&x| x != 0));
    for (k, v) in out.coeffs.iter_mut() {
        let lam = mode_eigenvalue(&torus, k);
        for z in v.iter_mut() {
            *z /= lam;
        }
    }
    out
}

/// Harmonic projection: the zero mode.
pub fn harmonic(f: &TensorField) -> TensorField {
    let mut out = f.clone();
    out.coeffs.retain(|k, _| k.iter().all(|&x| x == 0));
    out
}

//! The L² pairing of Beltrami differentials,
//!
//!   ⟨φ₁,φ₂⟩ = ∫ g^{l̄p} g_{km̄} φ₁^k_l̄ conj(φ₂^m_p̄) vol,
//!
//! computed by Parseval and by grid quadrature, together with the trace
//! identities of derivation extensions on Λ^q.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{fundamental_grid, TensorField};
use crate::error::{Error, Result};
use crate::exterior::{binomial, derivation_matrix};
use crate::lattice::ComplexTorus;

fn require_beltrami(f: &TensorField) -> Result<()> {
    if !f.is_beltrami() {
        return Err(Error::TypeMismatch(format!(
            "expected a Beltrami differential, got (0,{}){}",
            f.degree(),
            if f.is_vector_valued() { "⊗T" } else { "" }
        )));
    }
    Ok(())
}

fn inverse_metric(torus: &ComplexTorus) -> DMatrix<Complex64> {
    torus
        .metric()
        .clone()
        .try_inverse()
        .expect("metric is positive definite")
}

/// Pointwise contraction of component arrays a, b (layout l·n + k).
fn contract(
    n: usize,
    h: &DMatrix<Complex64>,
    hinv: &DMatrix<Complex64>,
    a: &[Complex64],
    b: &[Complex64],
) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for l in 0..n {
        for p in 0..n {
            let glp = hinv[(l, p)];
            for k in 0..n {
                for m in 0..n {
                    s += glp * h[(k, m)] * a[l * n + k] * b[p * n + m].conj();
                }
            }
        }
    }
    s
}

/// ⟨φ₁,φ₂⟩ by Parseval over the common modes.
pub fn wp_inner(phi1: &TensorField, phi2: &TensorField) -> Result<Complex64> {
    require_beltrami(phi1)?;
    require_beltrami(phi2)?;
    phi1.same_space(phi2)?;
    let torus = phi1.torus();
    let n = torus.n();
    let h = torus.metric();
    let hinv = inverse_metric(torus);
    let mut s = Complex64::new(0.0, 0.0);
    for (k, a) in phi1.coeffs() {
        if let Some(b) = phi2.get(k) {
            s += contract(n, h, &hinv, a, b);
        }
    }
    Ok(s * torus.covolume())
}

/// Grid size that integrates products of the two fields' modes exactly.
fn exact_grid(fields: &[&TensorField]) -> usize {
    let kmax = fields
        .iter()
        .flat_map(|f| f.coeffs().keys())
        .flat_map(|k| k.iter().map(|x| x.unsigned_abs() as usize))
        .max()
        .unwrap_or(0);
    2 * kmax + 1
}

/// ⟨φ₁,φ₂⟩ by the rectangle rule on a per_axis^{2n} grid of the
/// fundamental cell; exact once per_axis exceeds twice the largest mode index.
pub fn wp_inner_quadrature(phi1: &TensorField, phi2: &TensorField, per_axis: usize) -> Result<Complex64> {
    require_beltrami(phi1)?;
    require_beltrami(phi2)?;
    phi1.same_space(phi2)?;
    if per_axis == 0 {
        return Err(Error::InvalidInput("grid needs at least one point per axis".into()));
    }
    let torus = phi1.torus();
    let n = torus.n();
    let h = torus.metric();
    let hinv = inverse_metric(torus);
    let pts = fundamental_grid(torus, per_axis);
    let mut s = Complex64::new(0.0, 0.0);
    for x in &pts {
        s += contract(n, h, &hinv, &phi1.evaluate(x), &phi2.evaluate(x));
    }
    Ok(s * (torus.covolume() / pts.len() as f64))
}

/// Gram matrix of the pairing on a finite family.
#[derive(Debug, Clone, PartialEq)]
pub struct WPGram {
    pub size: usize,
    pub gram: DMatrix<Complex64>,
}

impl WPGram {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.size).all(|i| (0..self.size).all(|j| (self.gram[(i, j)] - self.gram[(j, i)].conj()).norm() <= tol))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.gram + self.gram.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Rows `i,j,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,re,im\n");
        for i in 0..self.size {
            for j in 0..self.size {
                let z = self.gram[(i, j)];
                out.push_str(&format!("{i},{j},{:.16e},{:.16e}\n", z.re, z.im));
            }
        }
        out
    }
}

pub fn wp_gram(basis: &[TensorField]) -> Result<WPGram> {
    let size = basis.len();
    let mut gram = DMatrix::zeros(size, size);
    for i in 0..size {
        for j in i..size {
            let v = wp_inner(&basis[i], &basis[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v.conj();
        }
        gram[(i, i)].im = 0.0;
    }
    Ok(WPGram { size, gram })
}

/// Largest |φ_{k̄l̄} − φ_{l̄k̄}| over grid points, with φ_{k̄l̄} = g_{jk̄} φ^j_l̄.
pub fn symmetry_check(phi: &TensorField) -> Result<f64> {
    require_beltrami(phi)?;
    let torus = phi.torus();
    let n = torus.n();
    let h = torus.metric();
    let per_axis = exact_grid(&[phi]).max(if phi.coeffs().keys().any(|k| k.iter().any(|&x| x != 0)) {
        4
    } else {
        1
    });
    let mut worst: f64 = 0.0;
    for x in fundamental_grid(torus, per_axis) {
        let v = phi.evaluate(&x);
        let low = |k: usize, l: usize| (0..n).map(|j| h[(j, k)] * v[l * n + j]).sum::<Complex64>();
        for k in 0..n {
            for l in k + 1..n {
                worst = worst.max((low(k, l) - low(l, k)).norm());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivationTrace {
    pub enumerated: Complex64,
    pub closed_form: Complex64,
}

/// Trace of the derivation extension of F to Λ^q, by enumerating the
/// basis, checked against C(n−1,q−1)·tr F.
pub fn derivation_trace(f: &DMatrix<Complex64>, q: usize) -> Result<DerivationTrace> {
    let n = f.nrows();
    if f.ncols() != n {
        return Err(Error::InvalidInput("derivation_trace needs a square matrix".into()));
    }
    if q == 0 || q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let enumerated = derivation_matrix(f, q).trace();
    let closed_form = f.trace() * binomial(n - 1, q - 1) as f64;
    let scale = closed_form.norm().max(1.0);
    if (enumerated - closed_form).norm() > 1e-12 * scale {
        return Err(Error::IdentityViolation(format!(
            "trace on Λ^{q}: enumerated {enumerated} vs {closed_form}"
        )));
    }
    Ok(DerivationTrace {
        enumerated,
        closed_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceIdentity {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_diff: f64,
}

/// Integrated trace of the derivation extension to Λ^q of φ_i∘φ_j^*, the
/// adjoint taken with the metrics on (1,0)- and (0,1)-covectors, against
/// C(n−1,q−1)·⟨φ_i,φ_j⟩.
pub fn wedge_trace_identity(phi_i: &TensorField, phi_j: &TensorField, q: usize) -> Result<TraceIdentity> {
    require_beltrami(phi_i)?;
    require_beltrami(phi_j)?;
    phi_i.same_space(phi_j)?;
    let torus = phi_i.torus();
    let n = torus.n();
    if q == 0 || q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let hinv = inverse_metric(torus);
    // metrics on (1,0)- and (0,1)-covectors
    let k10_inv = torus.metric() * Complex64::new(0.5, 0.0);
    let k01 = hinv.map(|z| z.conj() * 2.0);
    let per_axis = exact_grid(&[phi_i, phi_j]);
    let pts = fundamental_grid(torus, per_axis);
    let as_matrix = |v: &[Complex64]| DMatrix::from_fn(n, n, |l, k| v[l * n + k]);
    let mut lhs = Complex64::new(0.0, 0.0);
    for x in &pts {
        let a = as_matrix(&phi_i.evaluate(x));
        let b = as_matrix(&phi_j.evaluate(x));
        let comp = &a * &k10_inv * b.adjoint() * &k01;
        lhs += derivation_matrix(&comp, q).trace();
    }
    lhs *= torus.covolume() / pts.len() as f64;
    let rhs = wp_inner(phi_i, phi_j)? * binomial(n - 1, q - 1) as f64;
    Ok(TraceIdentity {
        lhs,
        rhs,
        abs_diff: (lhs - rhs).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn skew2() -> Arc<ComplexTorus> {
        let p = DMatrix::from_row_slice(
            2,
            4,
            &[
                c(1.0, 0.0),
                c(0.1, 0.2),
                c(0.3, 1.1),
                c(0.0, 0.4),
                c(0.0, 0.0),
                c(1.2, -0.1),
                c(0.2, 0.0),
                c(-0.3, 0.9),
            ],
        );
        let h = DMatrix::from_row_slice(2, 2, &[c(1.3, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.8, 0.0)]);
        Arc::new(ComplexTorus::new(p, h).unwrap())
    }

    fn random_beltrami(t: &Arc<ComplexTorus>, rng: &mut ChaCha8Rng, modes: usize) -> TensorField {
        let n = t.n();
        let mut f = TensorField::zero(t.clone(), 1, true).unwrap();
        for m in 0..modes {
            let k: Vec<i64> = if m == 0 {
                vec![0; 2 * n]
            } else {
                (0..2 * n).map(|_| rng.random_range(-1..=1)).collect()
            };
            let comps: Vec<Complex64> = (0..n * n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            f.accumulate(&k, &comps, c(1.0, 0.0));
        }
        f
    }

    #[test]
    fn unit_beltrami_on_square_curve() {
        let t = Arc::new(ComplexTorus::from_tau(c(0.0, 1.0)).unwrap());
        let phi = TensorField::constant_beltrami(t, &[vec![c(1.0, 0.0)]]).unwrap();
        assert!((wp_inner(&phi, &phi).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(symmetry_check(&phi).unwrap(), 0.0);
    }

    #[test]
    fn parseval_matches_quadrature() {
        let t = skew2();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_beltrami(&t, &mut rng, 3);
        let b = random_beltrami(&t, &mut rng, 3);
        let p = wp_inner(&a, &b).unwrap();
        let q = wp_inner_quadrature(&a, &b, 5).unwrap();
        assert!((p - q).norm() < 1e-10 * p.norm().max(1.0), "{p} vs {q}");
    }

    #[test]
    fn distinct_modes_are_orthogonal() {
        let t = skew2();
        let comps = vec![c(1.0, 0.0), c(0.5, 0.0), c(0.0, 1.0), c(0.2, 0.0)];
        let a = TensorField::mode(t.clone(), 1, true, vec![1, 0, 0, 0], comps.clone()).unwrap();
        let b = TensorField::mode(t, 1, true, vec![0, 0, 1, 0], comps).unwrap();
        assert_eq!(wp_inner(&a, &b).unwrap(), c(0.0, 0.0));
        assert!(wp_inner_quadrature(&a, &b, 3).unwrap().norm() < 1e-14);
    }

    #[test]
    fn gram_is_hermitian_psd() {
        let t = skew2();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let basis: Vec<_> = (0..4).map(|_| random_beltrami(&t, &mut rng, 2)).collect();
        let g = wp_gram(&basis).unwrap();
        assert!(g.is_hermitian(0.0));
        assert!(g.min_eigenvalue() > -1e-12);
        for i in 0..4 {
            for j in 0..4 {
                let lhs = g.gram[(i, j)].norm_sqr();
                assert!(lhs <= g.gram[(i, i)].re * g.gram[(j, j)].re * (1.0 + 1e-12));
            }
        }
        assert!(g.to_csv().starts_with("i,j,re,im\n0,0,"));
    }

    #[test]
    fn asymmetric_lowered_matrix_is_flagged() {
        let t = skew2();
        // X = (H^T)^{-1} S lowers to S
        let ht_inv = t.metric().transpose().try_inverse().unwrap();
        let lower = |s: [[f64; 2]; 2]| {
            let sm = DMatrix::from_fn(2, 2, |r, c2| c(s[r][c2], 0.0));
            let x = &ht_inv * sm;
            let m: Vec<Vec<Complex64>> = (0..2).map(|l| (0..2).map(|k| x[(k, l)]).collect()).collect();
            TensorField::constant_beltrami(t.clone(), &m).unwrap()
        };
        let sym = lower([[1.0, 0.3], [0.3, 2.0]]);
        let asym = lower([[1.0, 0.3], [-0.7, 2.0]]);
        assert!(symmetry_check(&sym).unwrap() < 1e-12);
        assert!((symmetry_check(&asym).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivation_trace_examples() {
        let f = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(2.0, 0.0),
            c(3.0, 0.0),
        ]));
        let r = derivation_trace(&f, 2).unwrap();
        assert!((r.enumerated - c(12.0, 0.0)).norm() < 1e-14);
        for n in 1..=5 {
            for q in 1..=n {
                let id = DMatrix::<Complex64>::identity(n, n);
                let r = derivation_trace(&id, q).unwrap();
                assert_eq!(r.enumerated.re, (q as u64 * binomial(n, q)) as f64);
            }
        }
        assert!(derivation_trace(&f, 0).is_err());
    }

    #[test]
    fn trace_identity_on_curve_and_product() {
        let t = Arc::new(ComplexTorus::from_tau(c(0.0, 1.0)).unwrap());
        let phi = TensorField::constant_beltrami(t, &[vec![c(1.0, 0.0)]]).unwrap();
        let r = wedge_trace_identity(&phi, &phi, 1).unwrap();
        assert!((r.lhs - c(1.0, 0.0)).norm() < 1e-14 && (r.rhs - c(1.0, 0.0)).norm() < 1e-14);

        let t = Arc::new(ComplexTorus::square(2).unwrap());
        let z = c(0.0, 0.0);
        let a = TensorField::constant_beltrami(t.clone(), &[vec![c(1.0, 0.0), z], vec![z, z]]).unwrap();
        let b = TensorField::constant_beltrami(t, &[vec![z, z], vec![z, c(1.0, 0.0)]]).unwrap();
        for q in 1..=2 {
            let r = wedge_trace_identity(&a, &b, q).unwrap();
            assert!(r.lhs.norm() < 1e-15 && r.rhs.norm() < 1e-15);
        }
    }

    #[test]
    fn trace_identity_on_random_pairs() {
        let t = skew2();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let a = random_beltrami(&t, &mut rng, 1);
            let b = random_beltrami(&t, &mut rng, 1);
            for q in 1..=2 {
                let r = wedge_trace_identity(&a, &b, q).unwrap();
                assert!(r.abs_diff < 1e-12, "{r:?}");
            }
        }
    }
}

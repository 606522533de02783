use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exterior::binomial;
use crate::lattice::ComplexTorus;

/// A (0,q)-form on a flat torus, optionally with values in T^{1,0}, stored
/// by Fourier mode.
///
/// For each mode k the component array has length C(n,q)·nv with
/// nv = n for vector-valued fields and 1 otherwise; entry `I·nv + ν` is the
/// coefficient of dz̄^I ⊗ ∂_ν for the I-th increasing multi-index. A Beltrami
/// differential φ = φ^k_l̄ dz̄^l ⊗ ∂_k therefore sits at `l·n + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub(crate) torus: Arc<ComplexTorus>,
    pub(crate) q: usize,
    pub(crate) vector_valued: bool,
    pub(crate) coeffs: BTreeMap<Vec<i64>, Vec<Complex64>>,
}

impl TensorField {
    pub fn zero(torus: Arc<ComplexTorus>, q: usize, vector_valued: bool) -> Result<Self> {
        let n = torus.n();
        if q > n {
            return Err(Error::DegreeOutOfRange { q, n });
        }
        Ok(TensorField {
            torus,
            q,
            vector_valued,
            coeffs: BTreeMap::new(),
        })
    }

    /// A field with the single Fourier mode k.
    pub fn mode(
        torus: Arc<ComplexTorus>,
        q: usize,
        vector_valued: bool,
        k: Vec<i64>,
        comps: Vec<Complex64>,
    ) -> Result<Self> {
        let mut f = Self::zero(torus, q, vector_valued)?;
        if k.len() != 2 * f.n() {
            return Err(Error::InvalidInput(format!("mode label needs {} entries", 2 * f.n())));
        }
        if comps.len() != f.width() {
            return Err(Error::InvalidInput(format!(
                "component array needs {} entries, got {}",
                f.width(),
                comps.len()
            )));
        }
        f.coeffs.insert(k, comps);
        Ok(f)
    }

    pub fn constant(torus: Arc<ComplexTorus>, q: usize, vector_valued: bool, comps: Vec<Complex64>) -> Result<Self> {
        let n = torus.n();
        Self::mode(torus, q, vector_valued, vec![0; 2 * n], comps)
    }

    /// Beltrami differential with constant matrix m[l][k] = φ^k_l̄.
    pub fn constant_beltrami(torus: Arc<ComplexTorus>, m: &[Vec<Complex64>]) -> Result<Self> {
        let n = torus.n();
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("Beltrami matrix must be {n}x{n}")));
        }
        let comps = m.iter().flat_map(|r| r.iter().copied()).collect();
        Self::constant(torus, 1, true, comps)
    }

    pub fn torus(&self) -> &ComplexTorus {
        &self.torus
    }

    pub fn torus_arc(&self) -> &Arc<ComplexTorus> {
        &self.torus
    }

    pub fn n(&self) -> usize {
        self.torus.n()
    }

    pub fn degree(&self) -> usize {
        self.q
    }

    pub fn is_vector_valued(&self) -> bool {
        self.vector_valued
    }

    pub fn is_beltrami(&self) -> bool {
        self.q == 1 && self.vector_valued
    }

    pub fn nv(&self) -> usize {
        if self.vector_valued {
            self.n()
        } else {
            1
        }
    }

    /// Length of a per-mode component array.
    pub fn width(&self) -> usize {
        binomial(self.n(), self.q) as usize * self.nv()
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i64>, Vec<Complex64>> {
        &self.coeffs
    }

    pub fn get(&self, k: &[i64]) -> Option<&Vec<Complex64>> {
        self.coeffs.get(k)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs
            .values()
            .all(|v| v.iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }

    pub(crate) fn same_space(&self, other: &TensorField) -> Result<()> {
        if !(Arc::ptr_eq(&self.torus, &other.torus) || *self.torus == *other.torus) {
            return Err(Error::TorusMismatch);
        }
        if self.q != other.q || self.vector_valued != other.vector_valued {
            return Err(Error::TypeMismatch(format!(
                "(0,{}){} vs (0,{}){}",
                self.q,
                if self.vector_valued { "⊗T" } else { "" },
                other.q,
                if other.vector_valued { "⊗T" } else { "" }
            )));
        }
        Ok(())
    }

    pub(crate) fn accumulate(&mut self, k: &[i64], comps: &[Complex64], scale: Complex64) {
        let w = comps.len();
        let entry = self
            .coeffs
            .entry(k.to_vec())
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); w]);
        for (e, c) in entry.iter_mut().zip(comps) {
            *e += scale * c;
        }
    }

    /// self + s·other.
    pub fn axpy(&self, s: Complex64, other: &TensorField) -> Result<TensorField> {
        self.same_space(other)?;
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            out.accumulate(k, v, s);
        }
        Ok(out)
    }

    pub fn add(&self, other: &TensorField) -> Result<TensorField> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &TensorField) -> Result<TensorField> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn scale(&self, s: Complex64) -> TensorField {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            for z in v.iter_mut() {
                *z *= s;
            }
        }
        out
    }

    /// Drops modes whose components are all exactly zero.
    pub fn pruned(mut self) -> TensorField {
        self.coeffs
            .retain(|_, v| v.iter().any(|z| *z != Complex64::new(0.0, 0.0)));
        self
    }

    /// Coordinate L² norm: sqrt(vol · Σ_k Σ |c|²).
    pub fn l2_norm(&self) -> f64 {
        let s = self
            .coeffs
            .values()
            .flat_map(|v| v.iter())
            .fold(0.0, |acc, z| acc + z.norm_sqr());
        (self.torus.covolume() * s).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .values()
            .flat_map(|v| v.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest |ξ| over the support.
    pub fn max_mode_norm(&self) -> f64 {
        self.coeffs
            .keys()
            .map(|k| self.torus.mode_normsq(k).sqrt())
            .fold(0.0, f64::max)
    }

    /// Pointwise value at the real point x ∈ R^{2n}.
    pub fn evaluate(&self, x: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.width()];
        for (k, v) in &self.coeffs {
            let xi = self.torus.mode_vector(k);
            let phase: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
            let e = Complex64::from_polar(1.0, 2.0 * PI * phase);
            for (o, c) in out.iter_mut().zip(v) {
                *o += e * c;
            }
        }
        out
    }
}

/// Points B·u for u on a uniform grid of `per_axis`^{2n} points in [0,1)^{2n}.
pub fn fundamental_grid(torus: &ComplexTorus, per_axis: usize) -> Vec<Vec<f64>> {
    let d = 2 * torus.n();
    let b = torus.real_basis();
    let total = per_axis.pow(d as u32);
    let mut pts = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut u = vec![0.0; d];
        for ui in u.iter_mut() {
            *ui = (rem % per_axis) as f64 / per_axis as f64;
            rem /= per_axis;
        }
        let x: Vec<f64> = (0..d).map(|r| (0..d).map(|c| b[(r, c)] * u[c]).sum()).collect();
        pts.push(x);
    }
    pts
}

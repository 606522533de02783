//! Flat complex tori C^n/Λ, their dual lattices and Laplace spectra.
//!
//! Conventions. A point z ∈ C^n is realized as x = (Re z, Im z) ∈ R^{2n}.
//! The period matrix Π is n×2n; its columns realized this way form the real
//! basis B (2n×2n). The Hermitian metric H = A + iB' gives the Riemannian
//! length² of v as v^T H v̄, i.e. the real metric G = [[A, B'], [−B', A]].
//!
//! Fourier modes are e_ξ(x) = exp(2πi ξ·x) with ξ = B* k, k ∈ Z^{2n}, where
//! B* = B^{-T} is the dual basis. The squared length of ξ in the dual metric
//! is k^T Q k with Q = B*^T G^{-1} B* (the dual Gram matrix).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::binomial;
use crate::special::incomplete_gamma_upper_real;

/// Serialized form of a torus: period matrix rows and metric rows as
/// `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub n: usize,
    pub periods: Vec<Vec<[f64; 2]>>,
    pub metric: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TorusSpec", into = "TorusSpec")]
pub struct ComplexTorus {
    n: usize,
    periods: DMatrix<Complex64>,
    metric: DMatrix<Complex64>,
    basis: DMatrix<f64>,
    real_metric: DMatrix<f64>,
    dual: DMatrix<f64>,
    dual_gram: DMatrix<f64>,
    lattice_gram: DMatrix<f64>,
    covolume: f64,
}

impl TryFrom<TorusSpec> for ComplexTorus {
    type Error = Error;

    fn try_from(spec: TorusSpec) -> Result<Self> {
        let n = spec.n;
        if spec.periods.len() != n || spec.metric.len() != n {
            return Err(Error::InvalidInput("torus spec has wrong row count".into()));
        }
        let mut periods = DMatrix::zeros(n, 2 * n);
        let mut metric = DMatrix::zeros(n, n);
        for a in 0..n {
            if spec.periods[a].len() != 2 * n || spec.metric[a].len() != n {
                return Err(Error::InvalidInput("torus spec has wrong column count".into()));
            }
            for j in 0..2 * n {
                let [re, im] = spec.periods[a][j];
                periods[(a, j)] = Complex64::new(re, im);
            }
            for b in 0..n {
                let [re, im] = spec.metric[a][b];
                metric[(a, b)] = Complex64::new(re, im);
            }
        }
        ComplexTorus::new(periods, metric)
    }
}

impl From<ComplexTorus> for TorusSpec {
    fn from(t: ComplexTorus) -> Self {
        t.spec()
    }
}

impl ComplexTorus {
    pub fn new(periods: DMatrix<Complex64>, metric: DMatrix<Complex64>) -> Result<Self> {
        let n = periods.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("torus dimension must be positive".into()));
        }
        if periods.ncols() != 2 * n {
            return Err(Error::InvalidInput(format!(
                "period matrix must be {n}x{}, got {}x{}",
                2 * n,
                periods.nrows(),
                periods.ncols()
            )));
        }
        if metric.nrows() != n || metric.ncols() != n {
            return Err(Error::InvalidInput(format!("metric must be {n}x{n}")));
        }
        if periods
            .iter()
            .chain(metric.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidInput("non-finite torus data".into()));
        }
        let scale = metric.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let herm_defect = (&metric - metric.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_defect > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidInput("metric is not Hermitian".into()));
        }

        let d = 2 * n;
        let mut basis = DMatrix::zeros(d, d);
        for j in 0..d {
            for a in 0..n {
                basis[(a, j)] = periods[(a, j)].re;
                basis[(n + a, j)] = periods[(a, j)].im;
            }
        }
        let mut real_metric = DMatrix::zeros(d, d);
        for a in 0..n {
            for b in 0..n {
                let h = metric[(a, b)];
                real_metric[(a, b)] = h.re;
                real_metric[(n + a, n + b)] = h.re;
                real_metric[(a, n + b)] = h.im;
                real_metric[(n + a, b)] = -h.im;
            }
        }
        // symmetrize away rounding in the Hermitian input
        real_metric = (&real_metric + real_metric.transpose()) * 0.5;
        let g_inv = real_metric
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("metric is not positive definite".into()))?
            .inverse();

        let det_b = basis.determinant();
        if !det_b.is_finite() || det_b.abs() < 1e-300 {
            return Err(Error::InvalidInput("singular period matrix".into()));
        }
        let dual = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("singular period matrix".into()))?
            .transpose();
        let lattice_gram = symmetric(basis.transpose() * &real_metric * &basis);
        let dual_gram = symmetric(dual.transpose() * g_inv * &dual);
        let covolume = lattice_gram.determinant().sqrt();
        if !(covolume > 0.0) {
            return Err(Error::InvalidInput("degenerate lattice".into()));
        }
        Ok(ComplexTorus {
            n,
            periods,
            metric,
            basis,
            real_metric,
            dual,
            dual_gram,
            lattice_gram,
            covolume,
        })
    }

    /// The elliptic curve C/(Z + τZ) with the Euclidean metric.
    pub fn from_tau(tau: Complex64) -> Result<Self> {
        Self::product(&[tau])
    }

    /// C/(Z + τZ) rescaled by 1/√Im τ, so the area is 1 for every τ.
    pub fn from_tau_unit_volume(tau: Complex64) -> Result<Self> {
        check_tau(tau)?;
        let s = 1.0 / tau.im.sqrt();
        let periods = DMatrix::from_row_slice(1, 2, &[Complex64::new(s, 0.0), tau * s]);
        Self::new(periods, DMatrix::identity(1, 1))
    }

    /// Product of elliptic curves, columns ordered (e_1, …, e_n, τ_1e_1, …, τ_ne_n).
    pub fn product(taus: &[Complex64]) -> Result<Self> {
        let n = taus.len();
        for &t in taus {
            check_tau(t)?;
        }
        let mut periods = DMatrix::zeros(n, 2 * n);
        for (a, &t) in taus.iter().enumerate() {
            periods[(a, a)] = Complex64::new(1.0, 0.0);
            periods[(a, n + a)] = t;
        }
        Self::new(periods, DMatrix::identity(n, n))
    }

    /// (C/(Z + iZ))^n.
    pub fn square(n: usize) -> Result<Self> {
        Self::product(&vec![Complex64::new(0.0, 1.0); n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn periods(&self) -> &DMatrix<Complex64> {
        &self.periods
    }

    pub fn metric(&self) -> &DMatrix<Complex64> {
        &self.metric
    }

    /// Real realization B of the period columns.
    pub fn real_basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Real 2n×2n metric G.
    pub fn real_metric(&self) -> &DMatrix<f64> {
        &self.real_metric
    }

    /// Dual basis B* = B^{-T}; columns generate Λ*.
    pub fn dual_basis(&self) -> &DMatrix<f64> {
        &self.dual
    }

    /// Q with |ξ|² = k^T Q k for ξ = B* k.
    pub fn dual_gram(&self) -> &DMatrix<f64> {
        &self.dual_gram
    }

    /// B^T G B; the Gram matrix of Λ itself.
    pub fn lattice_gram(&self) -> &DMatrix<f64> {
        &self.lattice_gram
    }

    /// Riemannian volume of the torus, sqrt(det(B^T G B)).
    pub fn covolume(&self) -> f64 {
        self.covolume
    }

    pub fn mode_normsq(&self, k: &[i64]) -> f64 {
        quad_form(&self.dual_gram, k)
    }

    /// Real dual vector ξ = B* k.
    pub fn mode_vector(&self, k: &[i64]) -> DVector<f64> {
        let kv = DVector::from_iterator(k.len(), k.iter().map(|&v| v as f64));
        &self.dual * kv
    }

    pub fn spec(&self) -> TorusSpec {
        let rows = |m: &DMatrix<Complex64>| {
            (0..m.nrows())
                .map(|a| (0..m.ncols()).map(|j| [m[(a, j)].re, m[(a, j)].im]).collect())
                .collect()
        };
        TorusSpec {
            n: self.n,
            periods: rows(&self.periods),
            metric: rows(&self.metric),
        }
    }

    /// Canonical parameter string; two tori with the same string are identical.
    pub fn canonical_string(&self) -> String {
        let mut s = format!("n={}", self.n);
        s.push_str(";periods=");
        for z in self.periods.transpose().iter() {
            s.push_str(&format!("{:.16e},{:.16e};", z.re, z.im));
        }
        s.push_str("metric=");
        for z in self.metric.transpose().iter() {
            s.push_str(&format!("{:.16e},{:.16e};", z.re, z.im));
        }
        s
    }
}

fn check_tau(tau: Complex64) -> Result<()> {
    if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
        return Err(Error::InvalidInput(format!("modulus needs Im tau > 0, got {tau}")));
    }
    Ok(())
}

fn symmetric(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub(crate) fn quad_form(q: &DMatrix<f64>, k: &[i64]) -> f64 {
    let d = k.len();
    let mut acc = 0.0;
    for i in 0..d {
        if k[i] == 0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..d {
            row += q[(i, j)] * k[j] as f64;
        }
        acc += k[i] as f64 * row;
    }
    acc
}

/// A Fourier label k with |ξ|² in the dual metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualMode {
    pub k: Vec<i64>,
    pub normsq: f64,
}

fn within(normsq: f64, radius_sq: f64) -> bool {
    normsq <= radius_sq + 1e-12 * radius_sq.max(1e-300)
}

/// All k ∈ Z^d with k^T gram k ≤ radius_sq, sorted lexicographically.
///
/// Fincke–Pohst: with gram = R^T R, the search descends from the last
/// coordinate and bounds each k_i by the remaining budget.
pub fn enumerate_gram(gram: &DMatrix<f64>, radius_sq: f64) -> Vec<DualMode> {
    let d = gram.nrows();
    let r = gram
        .clone()
        .cholesky()
        .expect("Gram matrix must be positive definite")
        .l()
        .transpose();
    let mut out = Vec::new();
    if !(radius_sq >= 0.0) {
        return out;
    }
    let budget = radius_sq * (1.0 + 1e-10) + 1e-300;
    let mut k = vec![0i64; d];
    descend(&r, d, budget, &mut k, &mut out, gram, radius_sq);
    out.sort_by(|a, b| a.k.cmp(&b.k));
    out
}

fn descend(
    r: &DMatrix<f64>,
    level: usize,
    budget: f64,
    k: &mut [i64],
    out: &mut Vec<DualMode>,
    gram: &DMatrix<f64>,
    radius_sq: f64,
) {
    if level == 0 {
        let normsq = quad_form(gram, k);
        if within(normsq, radius_sq) {
            out.push(DualMode { k: k.to_vec(), normsq });
        }
        return;
    }
    let i = level - 1;
    let d = k.len();
    let rii = r[(i, i)];
    let mut shift = 0.0;
    for j in (i + 1)..d {
        shift += r[(i, j)] * k[j] as f64;
    }
    let center = -shift / rii;
    let width = budget.max(0.0).sqrt() / rii;
    let lo = (center - width - 1e-9).ceil() as i64;
    let hi = (center + width + 1e-9).floor() as i64;
    for v in lo..=hi {
        k[i] = v;
        let y = rii * v as f64 + shift;
        let rest = budget - y * y;
        if rest < -1e-12 * budget.max(1e-300) {
            continue;
        }
        descend(r, i, rest.max(0.0), k, out, gram, radius_sq);
    }
    k[i] = 0;
}

/// Reference enumeration: scan the integer box |k_i| ≤ sqrt(radius_sq · (gram⁻¹)_ii).
pub fn enumerate_gram_box(gram: &DMatrix<f64>, radius_sq: f64) -> Vec<DualMode> {
    let d = gram.nrows();
    let inv = gram.clone().try_inverse().expect("Gram matrix must be invertible");
    let bounds: Vec<i64> = (0..d)
        .map(|i| (radius_sq.max(0.0) * inv[(i, i)]).sqrt().floor() as i64 + 1)
        .collect();
    let mut out = Vec::new();
    let mut k: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        let normsq = quad_form(gram, &k);
        if within(normsq, radius_sq) {
            out.push(DualMode { k: k.clone(), normsq });
        }
        // odometer, last coordinate fastest gives lexicographic order
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if k[i] < bounds[i] {
                k[i] += 1;
                for (j, kj) in k.iter_mut().enumerate().skip(i + 1) {
                    *kj = -bounds[j];
                }
                break;
            }
        }
    }
}

/// Every ξ ∈ Λ* with |ξ|² ≤ radius_sq, once each, lexicographic in k.
pub fn enumerate_modes(torus: &ComplexTorus, radius_sq: f64) -> Vec<DualMode> {
    enumerate_gram(torus.dual_gram(), radius_sq)
}

pub fn dual_basis(torus: &ComplexTorus) -> DMatrix<f64> {
    torus.dual_basis().clone()
}

pub fn covolume(torus: &ComplexTorus) -> f64 {
    torus.covolume()
}

/// Exact diameter of the fundamental parallelepiped of a lattice with the
/// given Gram matrix: max over sign vectors s of sqrt(s^T gram s).
pub fn cell_diameter(gram: &DMatrix<f64>) -> f64 {
    let d = gram.nrows();
    let mut best: f64 = 0.0;
    // s_0 = +1 fixed, the rest enumerated
    for mask in 0u64..(1u64 << (d.saturating_sub(1))) {
        let mut s = vec![1i64; d];
        for (j, sj) in s.iter_mut().enumerate().skip(1) {
            if mask >> (j - 1) & 1 == 1 {
                *sj = -1;
            }
        }
        best = best.max(quad_form(gram, &s));
    }
    best.sqrt()
}

/// Certified bound on Σ_{v ∈ L, |v|² > radius_sq} exp(−a|v|²) for the
/// lattice with Gram matrix `gram`.
///
/// Uses #{|v| ≤ r} ≤ ω_d (r + D)^d / covol with D the cell diameter, and
/// integrates against the Gaussian in closed form through Γ(j/2 + 1, aR²).
pub fn gaussian_tail_bound(gram: &DMatrix<f64>, a: f64, radius_sq: f64) -> f64 {
    let d = gram.nrows();
    let covol = gram.determinant().sqrt();
    let diam = cell_diameter(gram);
    gaussian_tail_bound_with(d, covol, diam, a, radius_sq)
}

pub(crate) fn gaussian_tail_bound_with(d: usize, covol: f64, diam: f64, a: f64, radius_sq: f64) -> f64 {
    let n = d / 2;
    let mut omega = PI.powi(n as i32);
    for j in 1..=n {
        omega /= j as f64;
    }
    let x = a * radius_sq.max(0.0);
    let mut sum = 0.0;
    for j in 0..=d {
        let g = if x > 0.0 {
            incomplete_gamma_upper_real(j as f64 / 2.0 + 1.0, x).unwrap_or(f64::INFINITY)
        } else {
            crate::special::gamma_real(j as f64 / 2.0 + 1.0).unwrap_or(f64::INFINITY)
        };
        sum += binomial(d, j) as f64 * diam.powi((d - j) as i32) * a.powf(-(j as f64) / 2.0) * g;
    }
    omega / covol * sum
}

/// Eigenvalue normalization of the Laplacian on modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum LaplaceConvention {
    /// 4π²|ξ|², the Riemannian Laplacian.
    DeRham,
    /// 2π²|ξ|², ∂̄*∂̄ + ∂̄∂̄* on a Kähler torus.
    Dolbeault,
    /// |m + nτ|² for C/(Z + τZ); realized as covol²·|ξ|², n = 1 only.
    RawEpstein,
}

impl LaplaceConvention {
    pub fn scale(&self, torus: &ComplexTorus) -> Result<f64> {
        match self {
            LaplaceConvention::DeRham => Ok(4.0 * PI * PI),
            LaplaceConvention::Dolbeault => Ok(2.0 * PI * PI),
            LaplaceConvention::RawEpstein => {
                if torus.n() != 1 {
                    return Err(Error::InvalidInput(
                        "raw-epstein convention is defined for n = 1 only".into(),
                    ));
                }
                Ok(torus.covolume().powi(2))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LaplaceConvention::DeRham => "de-rham",
            LaplaceConvention::Dolbeault => "dolbeault",
            LaplaceConvention::RawEpstein => "raw-epstein",
        }
    }
}

impl std::str::FromStr for LaplaceConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "de-rham" | "derham" => Ok(LaplaceConvention::DeRham),
            "dolbeault" => Ok(LaplaceConvention::Dolbeault),
            "raw-epstein" | "raw" => Ok(LaplaceConvention::RawEpstein),
            other => Err(Error::InvalidInput(format!("unknown convention {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    pub lambda: f64,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStream {
    pub n: usize,
    pub q: usize,
    pub convention: LaplaceConvention,
    pub entries: Vec<SpectralEntry>,
    pub lambda_max: f64,
    /// Bound on Σ_{λ > lambda_max} mult·exp(−tλ), valid for every t ≥ tail_t_min.
    pub tail_bound: f64,
    pub tail_t_min: f64,
    pub zero_modes: u64,
}

impl SpectrumStream {
    /// Σ mult·exp(−tλ) over the stored entries.
    pub fn heat_sum(&self, t: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| e.multiplicity as f64 * (-t * e.lambda).exp())
            .sum()
    }
}

/// Crossover time πV^{1/n}/c between the direct and Poisson-dual heat sums.
pub fn crossover_time(torus: &ComplexTorus, c: f64) -> f64 {
    PI * torus.covolume().powf(1.0 / torus.n() as f64) / c
}

/// Laplace spectrum on (0,q)-forms up to lambda_max, zero modes excluded.
pub fn spectrum(torus: &ComplexTorus, conv: LaplaceConvention, q: usize, lambda_max: f64) -> Result<SpectrumStream> {
    let n = torus.n();
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(Error::InvalidInput(format!("lambda_max must be > 0, got {lambda_max}")));
    }
    let c = conv.scale(torus)?;
    let form_mult = binomial(n, q);
    let modes = enumerate_modes(torus, lambda_max / c);
    let groups = group_modes(torus.dual_gram(), &modes);
    let entries = groups
        .into_iter()
        .filter(|(nsq, _)| *nsq > 0.0)
        .map(|(nsq, count)| SpectralEntry {
            lambda: c * nsq,
            multiplicity: count * form_mult,
        })
        .collect();
    let tail_t_min = crossover_time(torus, c);
    let tail_bound = form_mult as f64 * gaussian_tail_bound(torus.dual_gram(), c * tail_t_min, lambda_max / c);
    Ok(SpectrumStream {
        n,
        q,
        convention: conv,
        entries,
        lambda_max,
        tail_bound,
        tail_t_min,
        zero_modes: form_mult,
    })
}

/// Rational approximation p/q with q ≤ max_den by continued fractions.
pub(crate) fn rationalize(x: f64, max_den: i64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= 1e-14 * x.abs().max(1.0) {
            return Some((h1, k1));
        }
        let frac = r - a;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    if k1 > 0 && (x - h1 as f64 / k1 as f64).abs() <= 1e-14 * x.abs().max(1.0) {
        Some((h1, k1))
    } else {
        None
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Integer form L·Q when every entry of Q is rational with bounded denominator.
fn integer_gram(gram: &DMatrix<f64>) -> Option<(Vec<i128>, i128)> {
    let d = gram.nrows();
    let mut fracs = Vec::with_capacity(d * d);
    let mut lcm: i128 = 1;
    for i in 0..d {
        for j in 0..d {
            let (p, q) = rationalize(gram[(i, j)], 1_000_000)?;
            lcm = lcm / gcd(lcm, q as i128) * q as i128;
            if lcm > 1_000_000_000_000 {
                return None;
            }
            fracs.push((p as i128, q as i128));
        }
    }
    Some((fracs.iter().map(|&(p, q)| p * (lcm / q)).collect(), lcm))
}

/// Groups modes by |ξ|², returning (normsq, count) sorted ascending.
pub(crate) fn group_modes(gram: &DMatrix<f64>, modes: &[DualMode]) -> Vec<(f64, u64)> {
    let d = gram.nrows();
    if let Some((ig, den)) = integer_gram(gram) {
        let mut keyed: Vec<i128> = modes
            .iter()
            .map(|m| {
                let mut acc: i128 = 0;
                for i in 0..d {
                    for j in 0..d {
                        acc += ig[i * d + j] * m.k[i] as i128 * m.k[j] as i128;
                    }
                }
                acc
            })
            .collect();
        keyed.sort_unstable();
        let mut out: Vec<(f64, u64)> = Vec::new();
        let mut i = 0;
        while i < keyed.len() {
            let mut j = i;
            while j < keyed.len() && keyed[j] == keyed[i] {
                j += 1;
            }
            out.push((keyed[i] as f64 / den as f64, (j - i) as u64));
            i = j;
        }
        return out;
    }
    let mut norms: Vec<f64> = modes.iter().map(|m| m.normsq).collect();
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(f64, u64)> = Vec::new();
    let mut i = 0;
    while i < norms.len() {
        let start = norms[i];
        let mut j = i;
        let mut sum = 0.0;
        while j < norms.len() && norms[j] - start <= 1e-12 * norms[j].abs().max(1e-300) {
            sum += norms[j];
            j += 1;
        }
        let value = if start == 0.0 { 0.0 } else { sum / (j - i) as f64 };
        out.push((value, (j - i) as u64));
        i = j;
    }
    out
}

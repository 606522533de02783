//! Per-degree determinants on (0,q)-forms, the exact/coexact split and
//! Ray–Singer torsion bookkeeping.
//!
//! On a flat torus Δ_q acts componentwise, so det Δ_q = det Δ₀^{C(n,q)} on
//! the nonzero spectrum. Per nonzero mode the (0,•) complex is the Koszul
//! complex of a nonzero covector, which splits C(n,q) = C(n−1,q−1) + C(n−1,q)
//! into ∂̄-exact and ∂̄*-exact parts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{binomial, binomial_i};
use crate::heat::HeatTrace;
use crate::lattice::{ComplexTorus, LaplaceConvention};
use crate::zeta::ZetaResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HodgeModelTag {
    /// h^{0,q} = C(n,q), parallel (0,q)-forms.
    TorusModel,
    /// h^{0,q} = 1 for q ∈ {0, n}, 0 otherwise.
    StrictCyModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HodgeModel {
    pub tag: HodgeModelTag,
    pub n: usize,
}

impl HodgeModel {
    pub fn torus(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        Ok(HodgeModel {
            tag: HodgeModelTag::TorusModel,
            n,
        })
    }

    pub fn strict_cy(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("strict CY model needs n >= 2".into()));
        }
        Ok(HodgeModel {
            tag: HodgeModelTag::StrictCyModel,
            n,
        })
    }

    pub fn hodge_numbers(&self) -> Vec<u64> {
        (0..=self.n)
            .map(|q| match self.tag {
                HodgeModelTag::TorusModel => binomial(self.n, q),
                HodgeModelTag::StrictCyModel => u64::from(q == 0 || q == self.n),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplicityConvention {
    /// det Δ′_q = det Δ₀^{C(n−1,q)} for 1 ≤ q ≤ n−1 and Δ′_n = Δ_n.
    PaperIz,
    /// det Δ′_q = det Δ₀^{C(n−1,q−1)}, mode-wise Koszul accounting.
    Koszul,
}

impl MultiplicityConvention {
    pub fn name(&self) -> &'static str {
        match self {
            MultiplicityConvention::PaperIz => "paper_iz",
            MultiplicityConvention::Koszul => "koszul",
        }
    }
}

/// (exact_dim, coexact_dim) = (C(n−1,q−1), C(n−1,q)).
pub fn koszul_split(n: usize, q: usize) -> Result<(u64, u64)> {
    if n == 0 || q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let (n, q) = (n as i64, q as i64);
    Ok((binomial_i(n - 1, q - 1) as u64, binomial_i(n - 1, q) as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HodgeSplitZeta {
    pub q: usize,
    pub zeta_prime_mult: i64,
    pub zeta_doubleprime_mult: i64,
}

/// Multiplier c′_q with ζ′_q = c′_q·ζ₀ under the given convention.
pub fn prime_mult(n: usize, q: usize, conv: MultiplicityConvention) -> i64 {
    let (ni, qi) = (n as i64, q as i64);
    match conv {
        MultiplicityConvention::Koszul => binomial_i(ni - 1, qi - 1),
        MultiplicityConvention::PaperIz => {
            if q == 0 {
                0
            } else if q == n {
                1
            } else {
                binomial_i(ni - 1, qi)
            }
        }
    }
}

pub fn hodge_split(n: usize, q: usize, conv: MultiplicityConvention) -> Result<HodgeSplitZeta> {
    if n == 0 || q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let p = prime_mult(n, q, conv);
    Ok(HodgeSplitZeta {
        q,
        zeta_prime_mult: p,
        zeta_doubleprime_mult: binomial(n, q) as i64 - p,
    })
}

/// c″(q) − c′(q+1) for q = 0..n−1; all zero iff the isospectral chain holds.
pub fn chain_defect(n: usize, conv: MultiplicityConvention) -> Vec<i64> {
    (0..n)
        .map(|q| {
            let a = hodge_split(n, q, conv).expect("q in range");
            let b = hodge_split(n, q + 1, conv).expect("q in range");
            a.zeta_doubleprime_mult - b.zeta_prime_mult
        })
        .collect()
}

/// (Σ(−1)^q q C(n,q), Σ_{q≥1}(−1)^q c′_q) as integers.
pub fn degree_sum_identity(n: usize, conv: MultiplicityConvention) -> (i64, i64) {
    let mut full = 0i64;
    let mut primed = 0i64;
    for q in 0..=n {
        let s = if q % 2 == 0 { 1 } else { -1 };
        full += s * q as i64 * binomial(n, q) as i64;
        if q >= 1 {
            primed += s * prime_mult(n, q, conv);
        }
    }
    (full, primed)
}

/// max_t |Θ_q(t)/Θ₀(t) − C(n,q)| on full traces including zero modes.
pub fn bochner_ratio(torus: &ComplexTorus, q: usize, t_grid: &[f64]) -> Result<f64> {
    let n = torus.n();
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let h0 = HeatTrace::new(torus, LaplaceConvention::Dolbeault, 0, 1e-10, 1.0)?;
    let hq = HeatTrace::new(torus, LaplaceConvention::Dolbeault, q, 1e-10, 1.0)?;
    let zq = binomial(n, q) as f64;
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let full0 = h0.theta(t)?.value + 1.0;
        if !(full0 > 0.0) {
            return Err(Error::InvalidInput("theta_0 must be positive".into()));
        }
        let fullq = hq.theta(t)?.value + zq;
        worst = worst.max((fullq / full0 - zq).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionReport {
    pub n: usize,
    pub model: HodgeModel,
    pub convention: MultiplicityConvention,
    pub log_det0: f64,
    /// log det Δ_q = C(n,q)·log det Δ₀, q = 0..n.
    pub log_det: Vec<f64>,
    /// log det Δ′_q under the convention, q = 0..n.
    pub log_det_prime: Vec<f64>,
    /// Σ_{q≥1} (−1)^q log det Δ′_q.
    pub log_torsion: f64,
    /// Σ_q (−1)^q q log det Δ_q.
    pub log_torsion_full: f64,
    /// Whether the two assemblies agree (they do iff the ζ″ chain holds).
    pub reduction_consistent: bool,
    pub chain_defect: Vec<i64>,
    pub closed_form: f64,
    pub discrepancy: f64,
}

pub fn torsion(model: HodgeModel, convention: MultiplicityConvention, det0: &ZetaResult) -> Result<TorsionReport> {
    let n = model.n;
    if model.tag == HodgeModelTag::StrictCyModel && n < 2 {
        return Err(Error::InvalidInput("strict CY model needs n >= 2".into()));
    }
    let d = det0.log_det();
    let log_det: Vec<f64> = (0..=n).map(|q| binomial(n, q) as f64 * d).collect();
    let log_det_prime: Vec<f64> = (0..=n).map(|q| prime_mult(n, q, convention) as f64 * d).collect();
    let sign = |q: usize| if q.is_multiple_of(2) { 1.0 } else { -1.0 };
    let log_torsion: f64 = (1..=n).map(|q| sign(q) * log_det_prime[q]).sum();
    let log_torsion_full: f64 = (0..=n).map(|q| sign(q) * q as f64 * log_det[q]).sum();
    let (full_i, primed_i) = degree_sum_identity(n, convention);
    let closed_form = if n % 2 == 1 { -2.0 * d } else { 0.0 };
    Ok(TorsionReport {
        n,
        model,
        convention,
        log_det0: d,
        log_det,
        log_det_prime,
        log_torsion,
        log_torsion_full,
        reduction_consistent: full_i == primed_i,
        chain_defect: chain_defect(n, convention),
        closed_form,
        discrepancy: log_torsion - closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::wedge_matrix;
    use crate::zeta::ZetaRoute;
    use num_complex::Complex64;

    fn det_with_log(d: f64) -> ZetaResult {
        ZetaResult {
            zeta_at_0: -1.0,
            zeta_prime_at_0: -d,
            det: d.exp(),
            est_error: 0.0,
            route: ZetaRoute::EpsteinContinuation,
        }
    }

    #[test]
    fn koszul_examples() {
        assert_eq!(koszul_split(3, 2).unwrap(), (2, 1));
        assert_eq!(koszul_split(5, 0).unwrap(), (0, 1));
        assert_eq!(koszul_split(5, 5).unwrap(), (1, 0));
        assert!(koszul_split(3, 4).is_err());
    }

    #[test]
    fn koszul_rank_oracle_n4() {
        let u = [
            Complex64::new(0.3, -1.2),
            Complex64::new(0.7, 0.1),
            Complex64::new(-0.4, 0.9),
            Complex64::new(1.1, 0.2),
        ];
        for q in 1..=4 {
            let m = wedge_matrix(&u, q - 1);
            let rank = m.svd(false, false).rank(1e-10);
            let (exact, _) = koszul_split(4, q).unwrap();
            assert_eq!(rank as u64, exact, "q = {q}");
        }
        assert_eq!(wedge_matrix(&u, 1).svd(false, false).rank(1e-10), 3);
    }

    #[test]
    fn chains_and_degree_sums() {
        for n in 1..=12 {
            assert!(chain_defect(n, MultiplicityConvention::Koszul).iter().all(|&x| x == 0));
            let (a, b) = degree_sum_identity(n, MultiplicityConvention::Koszul);
            assert_eq!(a, b);
            for q in 0..=n {
                let s = hodge_split(n, q, MultiplicityConvention::Koszul).unwrap();
                assert_eq!((s.zeta_prime_mult + s.zeta_doubleprime_mult) as u64, binomial(n, q));
            }
        }
        assert!(chain_defect(3, MultiplicityConvention::PaperIz).iter().any(|&x| x != 0));
    }

    #[test]
    fn torsion_examples() {
        let d = 0.73;
        let m3 = HodgeModel::strict_cy(3).unwrap();
        let p = torsion(m3, MultiplicityConvention::PaperIz, &det_with_log(d)).unwrap();
        assert!((p.log_torsion + 2.0 * d).abs() < 1e-14);
        assert!(p.discrepancy.abs() < 1e-14);
        let k = torsion(m3, MultiplicityConvention::Koszul, &det_with_log(d)).unwrap();
        assert!(k.log_torsion.abs() < 1e-14);
        assert!((k.discrepancy - 2.0 * d).abs() < 1e-14);
        assert!(k.reduction_consistent);
        let m2 = HodgeModel::torus(2).unwrap();
        assert_eq!(
            torsion(m2, MultiplicityConvention::Koszul, &det_with_log(d))
                .unwrap()
                .closed_form,
            0.0
        );
    }

    #[test]
    fn hodge_numbers_by_model() {
        assert_eq!(HodgeModel::torus(3).unwrap().hodge_numbers(), vec![1, 3, 3, 1]);
        assert_eq!(HodgeModel::strict_cy(3).unwrap().hodge_numbers(), vec![1, 0, 0, 1]);
        assert!(HodgeModel::strict_cy(1).is_err());
    }

    #[test]
    fn bochner_examples() {
        let grid = [0.01, 0.05, 0.2, 1.0, 3.0];
        let t2 = ComplexTorus::product(&[Complex64::new(0.0, 1.0), Complex64::new(0.1, 1.4)]).unwrap();
        assert!(bochner_ratio(&t2, 1, &grid).unwrap() <= 1e-12);
        let t1 = ComplexTorus::from_tau(Complex64::new(0.3, 1.7)).unwrap();
        assert!(bochner_ratio(&t1, 1, &grid).unwrap() <= 1e-12);
    }
}

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use spectorus::heat::HeatTrace;
use spectorus::kuranishi::derivation_trace;
use spectorus::lattice::{enumerate_gram, enumerate_gram_box, ComplexTorus, LaplaceConvention};
use spectorus::moduli::modulus_map;
use spectorus::report::to_canonical_json;
use spectorus::special::dedekind_eta;
use spectorus::zeta::epstein_zeta_det;

fn upper_half() -> impl Strategy<Value = Complex64> {
    (-0.5f64..0.5, 0.8f64..2.5).prop_map(|(re, im)| Complex64::new(re, im))
}

fn gram(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| {
        let a = DMatrix::from_vec(d, d, v);
        a.transpose() * &a + DMatrix::identity(d, d) * 0.3
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pruned_enumeration_matches_box_scan(g in gram(4), r2 in 0.5f64..6.0) {
        let a: Vec<Vec<i64>> = enumerate_gram(&g, r2).into_iter().map(|m| m.k).collect();
        let b: Vec<Vec<i64>> = enumerate_gram_box(&g, r2).into_iter().map(|m| m.k).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn eta_inversion(tau in upper_half()) {
        // |η(−1/τ)| = |τ|^{1/2} |η(τ)|
        let lhs = dedekind_eta(-tau.inv(), 1e-15).unwrap().value.norm();
        let rhs = tau.norm().sqrt() * dedekind_eta(tau, 1e-15).unwrap().value.norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn de_rham_det_is_kronecker(tau in upper_half()) {
        let t = ComplexTorus::from_tau(tau).unwrap();
        let z = epstein_zeta_det(&t, LaplaceConvention::DeRham, 0).unwrap();
        let eta = dedekind_eta(tau, 1e-15).unwrap().value.norm();
        assert_relative_eq!(z.det, tau.im.powi(2) * eta.powi(4), max_relative = 1e-8);
        assert_relative_eq!(z.zeta_at_0, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn heat_routes_agree(tau in upper_half(), s in -0.5f64..0.5) {
        let t = ComplexTorus::from_tau(tau).unwrap();
        let ht = HeatTrace::new(&t, LaplaceConvention::Dolbeault, 0, 1e-12, 4.0).unwrap();
        let at = ht.crossover() * 10f64.powf(s);
        let d = ht.theta_direct(at).unwrap().value;
        let p = ht.theta_dual(at).unwrap().value;
        assert_relative_eq!(d, p, max_relative = 1e-11);
    }

    #[test]
    fn derivation_trace_is_binomial_times_trace(v in prop::collection::vec(-3.0f64..3.0, 2 * 25), q in 1usize..=5) {
        let f = DMatrix::from_fn(5, 5, |i, j| Complex64::new(v[2 * (5 * i + j)], v[2 * (5 * i + j) + 1]));
        let d = derivation_trace(&f, q).unwrap();
        prop_assert!((d.enumerated - d.closed_form).norm() <= 1e-12 * d.closed_form.norm().max(1.0));
    }

    #[test]
    fn modulus_map_stays_in_upper_half(tau in upper_half(), r in 0.0f64..0.9, arg in 0.0f64..std::f64::consts::TAU) {
        prop_assert_eq!(modulus_map(tau, Complex64::new(0.0, 0.0)).unwrap(), tau);
        let t = Complex64::from_polar(r, arg);
        prop_assert!(modulus_map(tau, t).unwrap().im > 0.0);
    }

    #[test]
    fn canonical_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = to_canonical_json(&x);
        // std's parser is exact; serde_json's default one may be off by an ulp
        let back: f64 = s.trim().parse().unwrap();
        prop_assert_eq!(back, if x == 0.0 { 0.0 } else { x });
        prop_assert_eq!(to_canonical_json(&back), s);
    }
}

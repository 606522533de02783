//! Acceptance criteria 1–12. Every criterion prints one line; the target
//! fails at the end if any line is FAIL.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectorus::exterior::binomial;
use spectorus::heat::{geometric_grid, HeatTrace};
use spectorus::hodge::{chain_defect, torsion, HodgeModel, MultiplicityConvention};
use spectorus::kuranishi::{
    bracket_fd_pointwise, dbar, derivation_trace, fundamental_grid, picard_solve, picard_solve_with, synthetic_options,
    synthetic_seed, wedge_trace_identity, TensorField,
};
use spectorus::lattice::{ComplexTorus, LaplaceConvention};
use spectorus::moduli::{self, Normalization, SweepConfig, ETA_I_ABS4};
use spectorus::report::VerifyReport;
use spectorus::zeta::{abks_det, epstein_zeta_det_tol};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn kronecker_taus() -> Vec<Complex64> {
    vec![c(0.0, 1.0), c(0.0, 2.0), c(0.5, 3f64.sqrt() / 2.0), c(0.3, 1.7)]
}

struct Line {
    id: usize,
    pass: bool,
}

fn line(id: usize, name: &str, pass: bool, start: Instant, detail: String) -> Line {
    println!(
        "criterion {id:>2} {name:<28} {} ({:.1} s) {detail}",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    Line { id, pass }
}

fn kronecker() -> Line {
    let start = Instant::now();
    let rep = moduli::verify_kronecker(&kronecker_taus(), LaplaceConvention::RawEpstein, 1e-6).unwrap();
    let m = &rep.measured;
    let secs = start.elapsed().as_secs_f64();
    let control = moduli::verify_kronecker(&kronecker_taus(), LaplaceConvention::DeRham, 1e-6).unwrap();
    let pass = rep.pass() && secs < 30.0;
    line(
        1,
        "kronecker ratio constancy",
        pass,
        start,
        format!(
            "raw-epstein spread {:.3e}, literal constant {:.6e}, |eta(i)|^4 oracle {}; de-rham spread {:.3e}",
            m["ratio_spread"],
            m["ratio_first"],
            (m["eta_i_abs4"] - ETA_I_ABS4).abs() <= 1e-12,
            control.measured["ratio_spread"]
        ),
    )
}

fn two_route() -> Line {
    let start = Instant::now();
    let mut gap: f64 = 0.0;
    let mut zeta0_dev: f64 = 0.0;
    for tau in kronecker_taus() {
        let t = ComplexTorus::from_tau(tau).unwrap();
        for conv in [LaplaceConvention::RawEpstein, LaplaceConvention::DeRham] {
            let e = epstein_zeta_det_tol(&t, conv, 0, 1e-10).unwrap();
            let a = abks_det(&t, conv, 0, 1e-10).unwrap();
            gap = gap.max((a.zeta_prime_at_0 - e.zeta_prime_at_0).abs());
            zeta0_dev = zeta0_dev.max((e.zeta_at_0 + 1.0).abs()).max((a.zeta_at_0 + 1.0).abs());
        }
    }
    let pass = gap <= 1e-6 && zeta0_dev <= 1e-9 && start.elapsed().as_secs_f64() < 60.0;
    line(
        2,
        "abks vs epstein",
        pass,
        start,
        format!("max gap {gap:.3e}, max |zeta(0)+1| {zeta0_dev:.1e}"),
    )
}

fn poisson() -> Line {
    let start = Instant::now();
    let tori = [
        ComplexTorus::from_tau(c(0.3, 1.7)).unwrap(),
        ComplexTorus::product(&[c(0.0, 1.0), c(0.5, 0.9)]).unwrap(),
        moduli::bochner_torus(3).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for t in &tori {
        let ht = HeatTrace::new(t, LaplaceConvention::DeRham, 0, 1e-13, 10f64.sqrt()).unwrap();
        let ts = ht.crossover();
        for tt in geometric_grid(ts / 10f64.sqrt(), ts * 10f64.sqrt(), 11) {
            let d = ht.theta_direct(tt).unwrap().value;
            let p = ht.theta_dual(tt).unwrap().value;
            worst = worst.max((d - p).abs() / d.abs().max(1.0));
        }
    }
    line(
        3,
        "poisson self-consistency",
        worst <= 1e-12,
        start,
        format!("max relative gap {worst:.3e} over a decade around t*"),
    )
}

fn bochner() -> Line {
    let start = Instant::now();
    let rep = moduli::verify_bochner(&[1, 2, 3], &geometric_grid(1e-2, 10.0, 9), 0.1, 1e-12).unwrap();
    let d = rep.measured["max_deviation"];
    line(
        4,
        "bochner ratio",
        rep.pass(),
        start,
        format!("max |theta_q/theta_0 - C(n,q)| {d:.3e}"),
    )
}

fn hodge_chain() -> Line {
    let start = Instant::now();
    let koszul_ok = (1..=12).all(|n| chain_defect(n, MultiplicityConvention::Koszul).iter().all(|&d| d == 0));
    let paper_nonzero = (1..=12)
        .filter(|&n| chain_defect(n, MultiplicityConvention::PaperIz).iter().any(|&d| d != 0))
        .count();
    line(
        5,
        "hodge split chain",
        koszul_ok,
        start,
        format!("koszul chain exact for n <= 12; paper-iz multipliers break the chain for {paper_nonzero} of 12 dimensions (reported)"),
    )
}

fn iz() -> Line {
    let start = Instant::now();
    let mut worst_iz: f64 = 0.0;
    let mut worst_koszul: f64 = 0.0;
    let mut even_ok = true;
    for n in 2..=5 {
        let torus = ComplexTorus::square(n).unwrap();
        let det0 = epstein_zeta_det_tol(&torus, LaplaceConvention::Dolbeault, 0, 1e-8).unwrap();
        let model = HodgeModel::torus(n).unwrap();
        let iz = torsion(model, MultiplicityConvention::PaperIz, &det0).unwrap();
        let koszul = torsion(model, MultiplicityConvention::Koszul, &det0).unwrap();
        let log_det0 = det0.log_det();
        if n % 2 == 1 {
            worst_iz = worst_iz.max((iz.log_torsion + 2.0 * log_det0).abs());
        } else {
            even_ok &= iz.closed_form == 0.0 && iz.log_torsion.abs() <= 1e-10;
        }
        worst_koszul = worst_koszul.max(koszul.log_torsion.abs());
    }
    let rep = moduli::verify_iz(&[3, 5], 1e-10).unwrap();
    let pass = worst_iz <= 1e-10 && worst_koszul <= 1e-10 && even_ok && rep.pass();
    line(
        6,
        "torsion audit",
        pass,
        start,
        format!(
            "iz |log I + 2 log det| {worst_iz:.3e}, koszul |log I| {worst_koszul:.3e}, even n closed form 0: {even_ok}"
        ),
    )
}

fn variational() -> Line {
    let start = Instant::now();
    let taus = [c(0.0, 1.0), c(0.0, 2.0), c(1.0, 1.0)];
    let rep = moduli::verify_var(&taus, None, 2, Normalization::UnitVolume, 1e-3).unwrap();
    let m = &rep.measured;
    let eta_half = (m["oracle_fd_eta"] - 0.5).abs() <= 1e-3;
    let pipe_half = (m["oracle_fd_pipeline"] - 0.5).abs() <= 1e-3;
    let pass = rep.pass() && rep.flags["all_positive"] && eta_half && pipe_half;
    line(
        7,
        "variational formula",
        pass,
        start,
        format!(
            "ratio spread {:.3e}, ratio {:.6}, fd error {:.1e}, oracle fd {:.6} / {:.6}",
            m["ratio_spread"], m["ratio_first"], m["fd_error_max"], m["oracle_fd_pipeline"], m["oracle_fd_eta"]
        ),
    )
}

/// ∂̄φ + ½[φ,φ] at grid points, with the bracket by finite differences.
fn fd_mc_residual(phi: &TensorField) -> f64 {
    let d = dbar(phi).unwrap();
    let mut worst: f64 = 0.0;
    for x in fundamental_grid(phi.torus(), 3).iter().step_by(7) {
        let br = bracket_fd_pointwise(phi, phi, x, 1e-3).unwrap();
        let dv = d.evaluate(x);
        for (a, b) in dv.iter().zip(&br) {
            worst = worst.max((a + b * 0.5).norm());
        }
    }
    worst
}

fn kuranishi() -> Line {
    let start = Instant::now();
    // constant data: φ(τ) = Σ φ_i τ_i exactly
    let t = Arc::new(ComplexTorus::product(&[c(0.0, 1.0), c(0.2, 1.3)]).unwrap());
    let m1 = vec![vec![c(1.0, 0.0), c(0.0, 0.5)], vec![c(-0.3, 0.0), c(0.2, 0.1)]];
    let m2 = vec![vec![c(0.0, 0.0), c(0.7, 0.0)], vec![c(0.0, -1.0), c(0.4, 0.0)]];
    let seeds = vec![
        TensorField::constant_beltrami(t.clone(), &m1).unwrap(),
        TensorField::constant_beltrami(t.clone(), &m2).unwrap(),
    ];
    let sol = picard_solve(&seeds, 4, 4.0, 1e-10).unwrap();
    let higher_zero = sol
        .coeffs
        .iter()
        .filter(|(k, _)| k.iter().sum::<u32>() >= 2)
        .all(|(_, f)| f.is_zero());
    let tau = [c(0.3, -0.1), c(0.2, 0.25)];
    let linear = seeds[0].scale(tau[0]).add(&seeds[1].scale(tau[1])).unwrap();
    let const_dev = sol.evaluate(&tau).unwrap().sub(&linear).unwrap().max_abs();
    let const_res = sol.maurer_cartan_residual(&tau, 4).unwrap();
    let const_ok = higher_zero && const_dev == 0.0 && const_res == 0.0;

    let seed = synthetic_seed().unwrap();
    let syn = picard_solve_with(&seed, &synthetic_options(6)).unwrap();
    let r = &syn.residual_norms;
    let monotone = r.windows(2).all(|w| w[1] <= w[0]);
    let final_res = *r.last().unwrap();
    let coclosed = syn.max_coclosed_defect().unwrap();
    let probe = [c(syn.probe, 0.0), c(syn.probe, 0.0)];
    let fd_res = fd_mc_residual(&syn.evaluate(&probe).unwrap());
    let pass = const_ok && final_res <= 1e-10 && monotone && coclosed <= 1e-12 && fd_res <= 1e-8;
    line(
        8,
        "kuranishi solver",
        pass,
        start,
        format!(
            "constant data exact: {const_ok}; synthetic residual at order 6 {final_res:.3e}, monotone {monotone}, coclosed defect {coclosed:.1e}, grid fd residual {fd_res:.1e}"
        ),
    )
}

fn random_beltrami(t: &Arc<ComplexTorus>, rng: &mut ChaCha8Rng) -> TensorField {
    let n = t.n();
    let m: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    TensorField::constant_beltrami(t.clone(), &m).unwrap()
}

fn random_torus(n: usize, rng: &mut ChaCha8Rng) -> ComplexTorus {
    loop {
        let p = DMatrix::from_fn(n, 2 * n, |a, j| {
            let base = if j == a {
                c(1.0, 0.0)
            } else if j == n + a {
                c(0.0, 1.0)
            } else {
                c(0.0, 0.0)
            };
            base + c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))
        });
        let a = DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)));
        let h = &a * a.adjoint() + DMatrix::<Complex64>::identity(n, n);
        if let Ok(t) = ComplexTorus::new(p, h) {
            return t;
        }
    }
}

fn trace_lemma() -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let f = DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
        for q in 1..=n {
            let d = derivation_trace(&f, q).unwrap();
            let expect = f.trace() * binomial(n - 1, q - 1) as f64;
            worst_rel = worst_rel.max((d.enumerated - expect).norm() / expect.norm().max(1.0));
        }
    }
    let mut worst_wedge: f64 = 0.0;
    for trial in 0..30 {
        let n = 1 + trial % 3;
        let t = Arc::new(random_torus(n, &mut rng));
        let (a, b) = (random_beltrami(&t, &mut rng), random_beltrami(&t, &mut rng));
        for q in 1..=n {
            let id = wedge_trace_identity(&a, &b, q).unwrap();
            worst_wedge = worst_wedge.max(id.abs_diff / id.rhs.norm().max(1.0));
        }
    }
    let pass = worst_rel <= 1e-12 && worst_wedge <= 1e-10;
    line(
        9,
        "derivation trace lemma",
        pass,
        start,
        format!("200 random F: {worst_rel:.1e}; 30 random pairs: {worst_wedge:.1e}"),
    )
}

fn heat_coefficients() -> Line {
    let start = Instant::now();
    let family = SweepConfig::grid(c(0.0, 1.0), 0.1, 5).unwrap();
    let rep = moduli::verify_ak_const(&family, 1e-6).unwrap();
    let m = &rep.measured;
    let drift = m["control_a1_relative_variation"] > 1e-3 && rep.flags["control_tracks_volume"];
    line(
        10,
        "heat coefficient constancy",
        rep.pass() && drift,
        start,
        format!(
            "fixed volume a1 variation {:.1e}, a0 deviation {:.1e}; control a1 variation {:.3e} proportional to volume: {}",
            m["a1_relative_variation"], m["a0_max_deviation"], m["control_a1_relative_variation"], rep.flags["control_tracks_volume"]
        ),
    )
}

fn psh_grid() -> SweepConfig {
    SweepConfig::grid(c(0.0, 1.0), 0.1, 5).unwrap()
}

fn psh() -> Line {
    let start = Instant::now();
    let rep = moduli::verify_psh(&psh_grid(), 5, 1e-6).unwrap();
    let m = &rep.measured;
    let pass = rep.pass() && m["min_hessian"] >= -1e-6 && rep.flags["det_finite"];
    line(
        11,
        "plurisubharmonicity scan",
        pass,
        start,
        format!(
            "min ddbar b1 {:.6}, fd error {:.1e}, empirical sup det {:.6}",
            m["min_hessian"], m["fd_error_max"], m["det_sup"]
        ),
    )
}

fn all_reports() -> Vec<VerifyReport> {
    vec![
        moduli::verify_kronecker(&kronecker_taus(), LaplaceConvention::RawEpstein, 1e-6).unwrap(),
        moduli::verify_bochner(&[1, 2], &geometric_grid(1e-2, 10.0, 5), 0.1, 1e-12).unwrap(),
        moduli::verify_iz(&[2, 3], 1e-10).unwrap(),
        moduli::verify_var(&[c(0.0, 1.0), c(0.0, 2.0)], None, 2, Normalization::UnitVolume, 1e-3).unwrap(),
        moduli::verify_ak_const(&SweepConfig::grid(c(0.0, 1.0), 0.1, 3).unwrap(), 1e-6).unwrap(),
        moduli::verify_psh(&SweepConfig::grid(c(0.2, 1.4), 0.1, 3).unwrap(), 3, 1e-6).unwrap(),
    ]
}

fn determinism() -> Line {
    let start = Instant::now();
    let a: Vec<(String, String)> = all_reports().iter().map(|r| (r.to_json(), r.to_csv())).collect();
    let b: Vec<(String, String)> = all_reports().iter().map(|r| (r.to_json(), r.to_csv())).collect();
    let same = a == b;
    line(
        12,
        "determinism",
        same,
        start,
        format!("{} verify reports byte-identical across runs: {same}", a.len()),
    )
}

#[test]
fn acceptance() {
    let lines = vec![
        kronecker(),
        two_route(),
        poisson(),
        bochner(),
        hodge_chain(),
        iz(),
        variational(),
        kuranishi(),
        trace_lemma(),
        heat_coefficients(),
        psh(),
        determinism(),
    ];
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!(
        "acceptance: {} of {} criteria pass",
        lines.len() - failed.len(),
        lines.len()
    );
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

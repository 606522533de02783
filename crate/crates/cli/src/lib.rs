//! Command-line front end. [`run`] parses arguments, dispatches to the
//! library and maps the outcome to an exit code:
//! 0 success or pass, 1 verification failure, 2 usage or input error,
//! 3 numerical failure or inconclusive verification.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use spectorus::cache::{DiskCache, Lookup};
use spectorus::heat::{geometric_grid, HeatTrace};
use spectorus::hodge::{torsion, HodgeModel, MultiplicityConvention};
use spectorus::kuranishi::{picard_solve_with, synthetic_options, synthetic_seed, wp_gram, PicardOptions, TensorField};
use spectorus::lattice::{ComplexTorus, LaplaceConvention};
use spectorus::moduli::{self, Normalization, SweepConfig};
use spectorus::report::{format_float, to_canonical_json, Table, VerifyReport, VerifyStatus, FORMAT_VERSION};
use spectorus::zeta::{abks_det, epstein_zeta_det_tol, ZetaResult};
use spectorus::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Parses `i`, `2i`, `-i`, `1+i`, `0.3+1.7i`, `1e-3-2i` and plain reals.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse {s:?} as a complex number");
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return s.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not leading and not an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(p) => (body[..p].parse::<f64>().map_err(|_| bad())?, &body[p..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

fn parse_multiplicity(s: &str) -> Result<MultiplicityConvention, String> {
    match s {
        "paper-iz" | "paper_iz" => Ok(MultiplicityConvention::PaperIz),
        "koszul" => Ok(MultiplicityConvention::Koszul),
        other => Err(format!("unknown multiplicity convention {other:?} (paper-iz, koszul)")),
    }
}

#[derive(Parser, Debug)]
#[command(name = "spectorus", version, about = "Spectral geometry of flat complex tori")]
struct Cli {
    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here (and a CSV next to it when there is a table).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cache directory for spectra and determinants (else $SPECTORUS_CACHE_DIR).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Zeta-regularized determinant of Δ_q.
    Det(DetArgs),
    /// Heat trace θ(t) on a grid of times.
    HeatTrace(HeatArgs),
    /// Analytic torsion assembly from per-degree determinants.
    Torsion(TorsionArgs),
    /// Power-series solution of the Maurer–Cartan equation.
    Kuranishi(KuranishiArgs),
    /// Weil–Petersson Gram matrix of the constant Beltrami basis.
    Wp(WpArgs),
    /// Numerical audits.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// log det over a grid of moduli.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct TorusArgs {
    /// Modulus τ of the curve C/(Z + τZ).
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    tau: Option<Complex64>,
    /// Comma-separated moduli of a product of curves.
    #[arg(long, value_parser = parse_complex, value_delimiter = ',', allow_hyphen_values = true)]
    taus: Option<Vec<Complex64>>,
    /// JSON file {"n", "periods", "metric"} with [re, im] entries.
    #[arg(long)]
    torus: Option<PathBuf>,
    /// unit-period or unit-volume (curves given by --tau only).
    #[arg(long, default_value = "unit-period")]
    normalization: Normalization,
}

impl TorusArgs {
    fn build(&self) -> Result<ComplexTorus, Error> {
        match (&self.tau, &self.taus, &self.torus) {
            (Some(t), None, None) => moduli::curve(*t, self.normalization),
            (None, Some(ts), None) => ComplexTorus::product(ts),
            (None, None, Some(p)) => {
                let text = fs::read_to_string(p).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))
            }
            (None, None, None) => Err(Error::InvalidInput(
                "one of --tau, --taus or --torus is required".into(),
            )),
            _ => Err(Error::InvalidInput(
                "--tau, --taus and --torus are mutually exclusive".into(),
            )),
        }
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct DetArgs {
    #[command(flatten)]
    torus: TorusArgs,
    /// de-rham, dolbeault or raw-epstein.
    #[arg(long, default_value = "de-rham")]
    convention: LaplaceConvention,
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// Target accuracy of the Epstein route and agreement tolerance of the ABKS route.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Skip the ABKS cross-check.
    #[arg(long)]
    no_cross_check: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct HeatArgs {
    #[command(flatten)]
    torus: TorusArgs,
    #[arg(long, default_value = "de-rham")]
    convention: LaplaceConvention,
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// Explicit comma-separated times (else a geometric grid).
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-3)]
    t_min: f64,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[arg(long, default_value_t = 13)]
    count: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Also sum the explicit spectrum up to this eigenvalue (cached).
    #[arg(long)]
    lambda_max: Option<f64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct TorsionArgs {
    /// Dimension; the reference torus is (C/Z[i])^n unless a torus is given.
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, value_parser = parse_complex, value_delimiter = ',', allow_hyphen_values = true)]
    taus: Option<Vec<Complex64>>,
    /// paper-iz or koszul; both when omitted.
    #[arg(long, value_parser = parse_multiplicity)]
    multiplicity: Option<MultiplicityConvention>,
    /// torus or strict-cy.
    #[arg(long, default_value = "torus")]
    model: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct KuranishiArgs {
    /// synthetic (two-parameter seed with a nonzero bracket) or constant.
    #[arg(long, default_value = "synthetic")]
    seed: String,
    #[arg(long, default_value_t = 6)]
    order: usize,
    #[arg(long, default_value_t = 8.0)]
    radius: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Parameter value at which truncation residuals are measured.
    #[arg(long)]
    probe: Option<f64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct WpArgs {
    #[command(flatten)]
    torus: TorusArgs,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// exp(−E′(0)) against (Im τ)²|η(τ)|⁴.
    Kronecker(KroneckerArgs),
    /// θ_q/θ₀ = C(n,q).
    Bochner(BochnerArgs),
    /// Torsion closed forms under both multiplicity conventions.
    Iz(IzArgs),
    /// −∂∂̄ log det Δ₀ against the Weil–Petersson norm.
    Var(VarArgs),
    /// Heat coefficients across a fixed-volume family.
    AkConst(GridArgs),
    /// Plurisubharmonicity of ζ′(0) on a grid of moduli.
    Psh(GridArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct KroneckerArgs {
    #[arg(long, value_parser = parse_complex, value_delimiter = ',', allow_hyphen_values = true, default_value = "i,2i,0.5+0.8660254037844386i,0.3+1.7i")]
    taus: Vec<Complex64>,
    #[arg(long, default_value = "raw-epstein")]
    convention: LaplaceConvention,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct BochnerArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 1e-2)]
    t_min: f64,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[arg(long, default_value_t = 9)]
    count: usize,
    /// Smallest t for the mode-by-mode route.
    #[arg(long, default_value_t = 0.1)]
    modewise_t_min: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct IzArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct VarArgs {
    #[arg(long, value_parser = parse_complex, value_delimiter = ',', allow_hyphen_values = true, default_value = "i,2i,1+i")]
    taus: Vec<Complex64>,
    /// FD step (default 1e-3·Im τ₀).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, default_value = "unit-volume")]
    normalization: Normalization,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct GridArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "i")]
    base: Complex64,
    #[arg(long, default_value_t = 0.1)]
    spacing: f64,
    #[arg(long, default_value_t = 5)]
    size: usize,
    #[arg(long, default_value = "de-rham")]
    convention: LaplaceConvention,
    /// FD step (default 1e-3·Im τ).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SweepArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "i")]
    base: Complex64,
    #[arg(long, default_value_t = 0.1)]
    spacing: f64,
    #[arg(long, default_value_t = 5)]
    size: usize,
    /// Explicit comma-separated moduli instead of a grid.
    #[arg(long, value_parser = parse_complex, value_delimiter = ',', allow_hyphen_values = true)]
    taus: Option<Vec<Complex64>>,
    #[arg(long, default_value = "de-rham")]
    convention: LaplaceConvention,
    #[arg(long, default_value = "unit-period")]
    normalization: Normalization,
}

/// What a command produced.
struct Outcome {
    json: Value,
    csv: Option<String>,
    summary: String,
    code: i32,
}

impl Outcome {
    fn ok(json: Value, csv: Option<String>, summary: String) -> Self {
        Outcome {
            json,
            csv,
            summary,
            code: EXIT_OK,
        }
    }

    fn from_report(rep: VerifyReport) -> Self {
        let code = match rep.status {
            VerifyStatus::Pass => EXIT_OK,
            VerifyStatus::Fail => EXIT_FAIL,
            VerifyStatus::Inconclusive => EXIT_NUMERICAL,
        };
        Outcome {
            json: rep.to_value(),
            csv: Some(rep.to_csv()),
            summary: rep.summary(),
            code,
        }
    }
}

fn error_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::Pole(_) => "pole",
        Error::DegreeOutOfRange { .. } => "degree_out_of_range",
        Error::ToleranceUnachievable { .. } => "tolerance_unachievable",
        Error::QuadratureNonConvergence { .. } => "quadrature_non_convergence",
        Error::IllConditioned { .. } => "ill_conditioned",
        Error::RouteDisagreement { .. } => "route_disagreement",
        Error::TorusMismatch => "torus_mismatch",
        Error::TypeMismatch(_) => "type_mismatch",
        Error::NonHarmonicSeed { .. } => "non_harmonic_seed",
        Error::ModeOverflow { .. } => "mode_overflow",
        Error::Obstructed { .. } => "obstructed",
        Error::NonFinite(_) => "non_finite",
        Error::IdentityViolation(_) => "identity_violation",
        Error::Io(_) => "io",
    }
}

fn emit_error(kind: &str, message: &str, code: i32) -> i32 {
    let v = json!({"error": {"kind": kind, "message": message, "exit_code": code}});
    eprint!("{}", to_canonical_json(&v));
    code
}

fn zeta_json(z: &ZetaResult) -> Value {
    json!({
        "zeta0": z.zeta_at_0,
        "zeta_prime0": z.zeta_prime_at_0,
        "log_det": z.log_det(),
        "det": z.det,
        "est_error": z.est_error,
        "route": z.route,
    })
}

fn resolve_cache(flag: &Option<PathBuf>) -> Result<Option<DiskCache>, Error> {
    match flag {
        Some(p) => Ok(Some(DiskCache::new(p)?)),
        None => DiskCache::from_env(None),
    }
}

fn cmd_det(a: &DetArgs, cache: Option<&DiskCache>) -> Result<Outcome, Error> {
    let torus = a.torus.build()?;
    let prov = |route: &str| {
        vec![
            ("torus", torus.canonical_string()),
            ("convention", a.convention.name().to_string()),
            ("q", a.q.to_string()),
            ("tol", format_float(a.tol)),
            ("route", route.to_string()),
        ]
    };
    let cached = |route: &str, f: &dyn Fn() -> spectorus::Result<ZetaResult>| -> Result<(ZetaResult, bool), Error> {
        match cache {
            Some(c) => c.det_with(&prov(route), f).map(|(z, l)| (z, l == Lookup::Hit)),
            None => f().map(|z| (z, false)),
        }
    };
    let (epstein, hit_e) = cached("epstein", &|| {
        epstein_zeta_det_tol(&torus, a.convention, a.q, a.tol.min(1e-8))
    })?;
    let mut json = json!({
        "format_version": FORMAT_VERSION,
        "command": "det",
        "torus": torus.spec(),
        "convention": a.convention,
        "q": a.q,
        "tol": a.tol,
        "epstein": zeta_json(&epstein),
        "zeta0": epstein.zeta_at_0,
        "zeta_prime0": epstein.zeta_prime_at_0,
        "log_det": epstein.log_det(),
        "det": epstein.det,
    });
    let mut summary = format!(
        "det {:.12e} (log det {:.12e}, zeta0 {})",
        epstein.det,
        epstein.log_det(),
        epstein.zeta_at_0
    );
    let mut hits = vec![hit_e];
    if !a.no_cross_check {
        let (abks, hit_a) = cached("abks", &|| abks_det(&torus, a.convention, a.q, a.tol.max(1e-12)))?;
        hits.push(hit_a);
        let gap = (abks.zeta_prime_at_0 - epstein.zeta_prime_at_0).abs();
        json["abks"] = zeta_json(&abks);
        json["route_gap"] = json!(gap);
        summary.push_str(&format!(", route gap {gap:.3e}"));
        if gap > a.tol.max(1e-12) * 10.0 + abks.est_error {
            return Err(Error::RouteDisagreement {
                abks: abks.zeta_prime_at_0,
                epstein: epstein.zeta_prime_at_0,
                tol: a.tol,
            });
        }
    }
    if cache.is_some() {
        summary.push_str(if hits.iter().all(|&h| h) {
            " [cache hit]"
        } else {
            " [computed]"
        });
    }
    Ok(Outcome::ok(json, None, summary))
}

fn cmd_heat(a: &HeatArgs, cache: Option<&DiskCache>) -> Result<Outcome, Error> {
    let torus = a.torus.build()?;
    let ts = match &a.t {
        Some(ts) => ts.clone(),
        None => {
            if !(a.t_min > 0.0 && a.t_max > a.t_min) || a.count < 2 {
                return Err(Error::InvalidInput("need 0 < t-min < t-max and count >= 2".into()));
            }
            geometric_grid(a.t_min, a.t_max, a.count)
        }
    };
    let ht = HeatTrace::new(&torus, a.convention, a.q, a.tol, 1.0)?;
    let values = ht.theta_many(&ts)?;
    let spec = match a.lambda_max {
        Some(lm) => Some(match cache {
            Some(c) => c.spectrum(&torus, a.convention, a.q, lm)?.0,
            None => spectorus::lattice::spectrum(&torus, a.convention, a.q, lm)?,
        }),
        None => None,
    };
    let mut table = Table::new(&[
        "t",
        "value",
        "abs_error",
        "route_dual",
        "spectral_sum",
        "spectral_tail_bound",
    ]);
    let mut rows = Vec::new();
    for v in &values {
        let (ss, tb) = match &spec {
            Some(s) => (
                s.heat_sum(v.t),
                if v.t >= s.tail_t_min { s.tail_bound } else { f64::NAN },
            ),
            None => (f64::NAN, f64::NAN),
        };
        table.push(vec![
            v.t,
            v.value,
            v.abs_error,
            f64::from(u8::from(v.route.name() != "direct")),
            ss,
            tb,
        ]);
        rows.push(json!({
            "t": v.t,
            "value": v.value,
            "abs_error": v.abs_error,
            "route": v.route,
            "spectral_sum": if spec.is_some() { json!(ss) } else { Value::Null },
        }));
    }
    let json = json!({
        "format_version": FORMAT_VERSION,
        "command": "heat-trace",
        "torus": torus.spec(),
        "convention": a.convention,
        "q": a.q,
        "crossover": ht.crossover(),
        "values": rows,
        "spectrum_size": spec.as_ref().map(|s| s.entries.len()),
    });
    let summary = format!(
        "heat-trace {} points, crossover t* = {:.6e}",
        values.len(),
        ht.crossover()
    );
    Ok(Outcome::ok(json, Some(table.to_csv()), summary))
}

fn cmd_torsion(a: &TorsionArgs) -> Result<Outcome, Error> {
    let torus = match &a.taus {
        Some(ts) => ComplexTorus::product(ts)?,
        None => ComplexTorus::square(a.n)?,
    };
    let n = torus.n();
    let model = match a.model.as_str() {
        "torus" => HodgeModel::torus(n)?,
        "strict-cy" => HodgeModel::strict_cy(n)?,
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown model {other:?} (torus, strict-cy)"
            )))
        }
    };
    let det0 = epstein_zeta_det_tol(&torus, LaplaceConvention::Dolbeault, 0, a.tol)?;
    let convs = match a.multiplicity {
        Some(c) => vec![c],
        None => vec![MultiplicityConvention::PaperIz, MultiplicityConvention::Koszul],
    };
    let reports = convs
        .iter()
        .map(|&c| torsion(model, c, &det0))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = reports
        .iter()
        .map(|r| {
            format!(
                "{}: log torsion {:.12e} (closed form {:.12e})",
                r.convention.name(),
                r.log_torsion,
                r.closed_form
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    let json = json!({
        "format_version": FORMAT_VERSION,
        "command": "torsion",
        "torus": torus.spec(),
        "det0": zeta_json(&det0),
        "reports": reports,
    });
    Ok(Outcome::ok(json, None, format!("torsion n={n} {summary}")))
}

fn cmd_kuranishi(a: &KuranishiArgs) -> Result<Outcome, Error> {
    let (seed, mut opts) = match a.seed.as_str() {
        "synthetic" => (synthetic_seed()?, synthetic_options(a.order)),
        "constant" => {
            let t = Arc::new(ComplexTorus::square(2)?);
            let one = Complex64::new(1.0, 0.0);
            let z = Complex64::new(0.0, 0.0);
            let s = vec![
                TensorField::constant_beltrami(t.clone(), &[vec![one, z], vec![z, z]])?,
                TensorField::constant_beltrami(t, &[vec![z, z], vec![one * 0.5, one]])?,
            ];
            (
                s,
                PicardOptions {
                    order: a.order,
                    ..PicardOptions::default()
                },
            )
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown seed {other:?} (synthetic, constant)"
            )))
        }
    };
    opts.mode_radius = a.radius;
    opts.tol = a.tol;
    if let Some(p) = a.probe {
        opts.probe = p;
    }
    let sol = picard_solve_with(&seed, &opts)?;
    let mut json = sol.to_json();
    json["format_version"] = json!(FORMAT_VERSION);
    json["command"] = json!("kuranishi");
    json["seed"] = json!(a.seed);
    json["max_coclosed_defect"] = json!(sol.max_coclosed_defect()?);
    let mut table = Table::new(&["order", "residual_norm", "order_residual"]);
    for (m, (r, o)) in sol.residual_norms.iter().zip(&sol.order_residuals).enumerate() {
        table.push(vec![(m + 1) as f64, *r, *o]);
    }
    let summary = format!(
        "kuranishi seed={} order={} final residual {:.3e}",
        a.seed,
        sol.order,
        sol.residual_norms.last().copied().unwrap_or(0.0)
    );
    Ok(Outcome::ok(json, Some(table.to_csv()), summary))
}

fn cmd_wp(a: &WpArgs) -> Result<Outcome, Error> {
    let torus = Arc::new(a.torus.build()?);
    let n = torus.n();
    let mut basis = Vec::with_capacity(n * n);
    for l in 0..n {
        for k in 0..n {
            let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            m[l][k] = Complex64::new(1.0, 0.0);
            basis.push(TensorField::constant_beltrami(torus.clone(), &m)?);
        }
    }
    let g = wp_gram(&basis)?;
    let gram: Vec<Vec<[f64; 2]>> = (0..g.size)
        .map(|i| (0..g.size).map(|j| [g.gram[(i, j)].re, g.gram[(i, j)].im]).collect())
        .collect();
    let json = json!({
        "format_version": FORMAT_VERSION,
        "command": "wp",
        "torus": torus.spec(),
        "basis": "dzbar^l (x) d_k, index l*n + k",
        "gram": gram,
        "min_eigenvalue": g.min_eigenvalue(),
    });
    let summary = format!(
        "wp gram {}x{}, min eigenvalue {:.6e}",
        g.size,
        g.size,
        g.min_eigenvalue()
    );
    Ok(Outcome::ok(json, Some(g.to_csv()), summary))
}

fn grid_config(a: &GridArgs) -> Result<SweepConfig, Error> {
    let mut cfg = SweepConfig::grid(a.base, a.spacing, a.size)?;
    cfg.convention = a.convention;
    cfg.h = a.h;
    cfg.levels = a.levels;
    cfg.tol = a.tol;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_verify(v: &VerifyCommand) -> Result<Outcome, Error> {
    let rep = match v {
        VerifyCommand::Kronecker(a) => moduli::verify_kronecker(&a.taus, a.convention, a.tol)?,
        VerifyCommand::Bochner(a) => {
            if !(a.t_min > 0.0 && a.t_max > a.t_min) || a.count < 2 {
                return Err(Error::InvalidInput("need 0 < t-min < t-max and count >= 2".into()));
            }
            moduli::verify_bochner(
                &a.ns,
                &geometric_grid(a.t_min, a.t_max, a.count),
                a.modewise_t_min,
                a.tol,
            )?
        }
        VerifyCommand::Iz(a) => moduli::verify_iz(&a.ns, a.tol)?,
        VerifyCommand::Var(a) => moduli::verify_var(&a.taus, a.h, a.levels, a.normalization, a.tol)?,
        VerifyCommand::AkConst(a) => moduli::verify_ak_const(&grid_config(a)?, a.tol)?,
        VerifyCommand::Psh(a) => moduli::verify_psh(&grid_config(a)?, a.size, a.tol)?,
    };
    Ok(Outcome::from_report(rep))
}

fn cmd_sweep(a: &SweepArgs) -> Result<Outcome, Error> {
    let mut cfg = SweepConfig::grid(a.base, a.spacing, a.size)?;
    if let Some(ts) = &a.taus {
        cfg.points = ts.clone();
    }
    cfg.convention = a.convention;
    cfg.normalization = a.normalization;
    let table = moduli::sweep(&cfg)?;
    let json = json!({
        "format_version": FORMAT_VERSION,
        "command": "sweep",
        "convention": cfg.convention,
        "normalization": cfg.normalization,
        "table": table,
    });
    let summary = format!("sweep {} points", table.rows.len());
    Ok(Outcome::ok(json, Some(table.to_csv()), summary))
}

/// Turns a JSON config object into `--key value` tokens.
fn config_tokens(path: &Path) -> Result<Vec<OsString>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let obj = v
        .as_object()
        .ok_or_else(|| format!("{}: config must be a JSON object", path.display()))?;
    let scalar = |v: &Value| match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(format!("unsupported config value {other}")),
    };
    let mut out = Vec::new();
    for (k, v) in obj {
        if matches!(k.as_str(), "config" | "out" | "cache_dir" | "cache-dir") {
            return Err(format!("config key {k:?} must be given on the command line"));
        }
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                out.push(flag.into());
                out.push(parts.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other)?.into());
            }
        }
    }
    Ok(out)
}

/// Splices config-file flags in front of the explicit ones, so flags win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let pos = argv
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="));
    let Some(pos) = pos else { return Ok(argv) };
    let mut argv = argv;
    let arg = argv.remove(pos).to_string_lossy().into_owned();
    let path = match arg.strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => {
            if pos >= argv.len() {
                return Err("--config needs a path".into());
            }
            PathBuf::from(argv.remove(pos))
        }
    };
    let tokens = config_tokens(&path)?;
    // subcommand path: program, command and, for verify, the check name
    let mut insert_at = 1;
    let mut depth = 0;
    while insert_at < argv.len() && depth < 2 {
        let s = argv[insert_at].to_string_lossy();
        if s.starts_with('-') {
            break;
        }
        depth += 1;
        insert_at += 1;
        if depth == 1 && s != "verify" {
            break;
        }
    }
    argv.splice(insert_at..insert_at, tokens);
    Ok(argv)
}

fn write_outputs(out: &Path, o: &Outcome) -> Result<(), Error> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, to_canonical_json(&o.json))?;
    if let Some(csv) = &o.csv {
        fs::write(out.with_extension("csv"), csv)?;
    }
    Ok(())
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(msg) => return emit_error("usage", &msg, EXIT_USAGE),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                print!("{e}");
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    EXIT_USAGE
                } else {
                    EXIT_OK
                };
            }
            return emit_error("usage", e.to_string().trim(), EXIT_USAGE);
        }
    };
    let cache = match resolve_cache(&cli.cache_dir) {
        Ok(c) => c,
        Err(e) => return emit_error(error_kind(&e), &e.to_string(), error_code(&e)),
    };
    let result = match &cli.command {
        Command::Det(a) => cmd_det(a, cache.as_ref()),
        Command::HeatTrace(a) => cmd_heat(a, cache.as_ref()),
        Command::Torsion(a) => cmd_torsion(a),
        Command::Kuranishi(a) => cmd_kuranishi(a),
        Command::Wp(a) => cmd_wp(a),
        Command::Verify(v) => cmd_verify(v),
        Command::Sweep(a) => cmd_sweep(a),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => return emit_error(error_kind(&e), &e.to_string(), error_code(&e)),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = write_outputs(path, &outcome) {
                return emit_error(error_kind(&e), &e.to_string(), EXIT_USAGE);
            }
            println!("{}", outcome.summary);
        }
        None => {
            print!("{}", to_canonical_json(&outcome.json));
            eprintln!("{}", outcome.summary);
        }
    }
    outcome.code
}

//! `min-energy` command-line driver.
//!
//! Every subcommand reads its inputs, writes its tables and one JSON report
//! into `--out`, and maps the outcome to an exit status:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success, every checked contract held |
//! | 1 | a contract check failed |
//! | 2 | unreadable file or malformed document |
//! | 3 | bad parameter |
//! | 4 | model precondition violated |
//! | 5 | target not reachable |
//! | 6 | Landau–Ginzburg data outside its domain |

mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::energy::{
    bcle_residual, default_grid, energy_of, optimal_control_infinite, optimal_trajectory_infinite,
    simulate_mild, uniform_grid, value_auxiliary, value_finite, value_infinite, AuxiliaryCost,
};
use crate::error::Error;
use crate::gramian::{
    gramian_finite, gramian_infinite, h_space, null_controllability_check, GramianMethod,
    GramianReport,
};
use crate::landau::{
    build_lg_model, inverse_gramian_form, lg_equilibrium, lg_value_check, profile_at,
    profile_grid, LGModel,
};
use crate::operators::ingest::{ModelDocument, ModelKind};
use crate::operators::{ControlProblem, Vector};
use crate::random::gaussian_vector;
use crate::riccati::{certificate, CertificateOptions, DEFAULT_SEED};
use output::{indexed, num, provenance, sha256_hex, OutDir};

#[derive(Debug, Parser)]
#[command(name = "min-energy", version, about = "Minimum-energy control experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Finite-horizon or infinite-horizon reachability Gramian.
    Gramian(GramianArgs),
    /// Riccati certificate: canonical solutions, solution set, maximality, comparison.
    Verify(VerifyArgs),
    /// Optimal control and trajectory reaching a target state.
    Synthesize(SynthesizeArgs),
    /// Value of the problem with penalized free initial state.
    Auxiliary(AuxiliaryArgs),
    /// Landau–Ginzburg value check and density profiles.
    Landau(LandauArgs),
    /// Gramian, certificate, synthesis and auxiliary checks in one report.
    All(AllArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model document (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GramianArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    /// Horizon; omit for the infinite-horizon Gramian.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Relative tolerance for the residual and cross-method checks.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    /// Random states per horizon in the comparison check.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// Seed, hexadecimal.
    #[arg(long)]
    pub seed: Option<String>,
    /// Residual bound for accepting a Riccati solution.
    #[arg(long, default_value_t = crate::riccati::SOLUTION_THRESHOLD)]
    pub tol: f64,
    /// Require the comparison checks (fails on non-coercive models).
    #[arg(long)]
    pub comparison: bool,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    /// Target state, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub target: String,
    /// Also report the value for this finite horizon.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Relative tolerance for endpoint and energy checks.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct AuxiliaryArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub target: String,
    /// Initial-state penalty `N = c·I_H`.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub n_scale: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct LandauArgs {
    #[arg(long, default_value_t = 8)]
    pub n_modes: usize,
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub rho_minus: f64,
    #[arg(long, default_value_t = 0.8, allow_hyphen_values = true)]
    pub rho_plus: f64,
    /// Mode coefficients of the target deviation; defaults to the first mode.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AllArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<String>,
}

/// Why a command stopped before completing its checks.
#[derive(Debug)]
pub enum Failure {
    Io { path: PathBuf, source: std::io::Error },
    BadParameter(String),
    Lib(Error),
}

impl Failure {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Failure::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Io { .. } => 2,
            Failure::BadParameter(_) => 3,
            Failure::Lib(e) => error_exit_code(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Failure::BadParameter(msg) => write!(f, "bad parameter: {msg}"),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    use Error::*;
    match e {
        Parse(_) => 2,
        NotStable { .. }
        | NotDiagonalizable { .. }
        | NotCoercive { .. }
        | RankDeficient { .. }
        | NotCommutingModel
        | NotSpectral => 4,
        NotReachable | NotInH | NotInRangeQ | NotReachableFromH => 5,
        BadBoundary(_) | OutOfDomain(_) => 6,
        _ => 3,
    }
}

/// Parses arguments from the process, runs, and returns the exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("min-energy: contract check failed; see the report");
            1
        }
        Err(f) => {
            eprintln!("min-energy: {f}");
            f.exit_code()
        }
    }
}

/// Runs one command; `Ok(passed)` when it completed.
pub fn run(cli: &Cli) -> Result<bool, Failure> {
    match &cli.command {
        Command::Gramian(a) => cmd_gramian(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Auxiliary(a) => cmd_auxiliary(a),
        Command::Landau(a) => cmd_landau(a),
        Command::All(a) => cmd_all(a),
    }
}

struct LoadedModel {
    problem: ControlProblem,
    hash: String,
}

fn load_model(path: &Path) -> Result<LoadedModel, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Failure::Lib(Error::Parse("model document is not UTF-8".into())))?;
    let problem = ModelDocument::from_json(&text)?.build()?;
    Ok(LoadedModel {
        problem,
        hash: sha256_hex(&bytes),
    })
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::BadParameter(format!("--{name} must be positive, got {v}")))
    }
}

fn parse_seed(s: Option<&str>) -> Result<u64, Failure> {
    let Some(s) = s else { return Ok(DEFAULT_SEED) };
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u64::from_str_radix(digits, 16)
        .map_err(|_| Failure::BadParameter(format!("--seed must be hexadecimal, got {s:?}")))
}

fn parse_vector(s: &str) -> Result<Vector, Failure> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Failure::BadParameter(format!("--target must be comma-separated numbers, got {s:?}")))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Failure::BadParameter("--target entries must be finite".into()));
    }
    Ok(Vector::from_vec(values))
}

fn check_target(p: &ControlProblem, x: &Vector) -> Result<(), Failure> {
    if x.len() != p.n() {
        return Err(Failure::BadParameter(format!(
            "--target has {} entries, the model has dimension {}",
            x.len(),
            p.n()
        )));
    }
    Ok(())
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

fn gramian_section(p: &ControlProblem, t: Option<f64>, tol: f64) -> Result<(Value, bool, crate::Matrix), Failure> {
    match t {
        None => {
            let g = gramian_infinite(p)?;
            let report = GramianReport::new(p, &g);
            let ok = report.lyapunov_residual.is_some_and(|r| r <= tol);
            Ok((json!({ "gramian": report, "passed": ok }), ok, g.matrix))
        }
        Some(t) => {
            let g = gramian_finite(p, t, GramianMethod::Quadrature)?;
            let ode = gramian_finite(p, t, GramianMethod::MatrixOde)?;
            let agreement = rel((&g.matrix - &ode.matrix).norm(), g.matrix.norm());
            let nc = null_controllability_check(p, t)?;
            let ok = agreement <= tol;
            let value = json!({
                "gramian": GramianReport::new(p, &g),
                "quadrature_vs_ode": num(agreement),
                "null_controllability": nc,
                "passed": ok,
            });
            Ok((value, ok, g.matrix))
        }
    }
}

fn cmd_gramian(a: &GramianArgs) -> Result<bool, Failure> {
    let tol = positive("tol", a.tol)?;
    let model = load_model(&a.io.model)?;
    let (section, ok, matrix) = gramian_section(&model.problem, a.t, tol)?;
    let out = OutDir::create(&a.io.out)?;
    out.matrix_csv("gramian.csv", &matrix)?;
    out.json(
        "gramian_report.json",
        &json!({ "provenance": provenance(&model.hash, None), "result": section }),
    )?;
    Ok(ok)
}

fn certificate_options(samples: usize, seed: u64, tol: f64, comparison: bool) -> CertificateOptions {
    CertificateOptions {
        samples,
        seed,
        threshold: tol,
        require_comparison: comparison,
        ..CertificateOptions::default()
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool, Failure> {
    let tol = positive("tol", a.tol)?;
    let seed = parse_seed(a.seed.as_deref())?;
    let model = load_model(&a.io.model)?;
    let cert = certificate(&model.problem, &certificate_options(a.samples, seed, tol, a.comparison))?;
    let out = OutDir::create(&a.io.out)?;
    out.json(
        "certificate.json",
        &json!({
            "provenance": provenance(&model.hash, Some(seed)),
            "solution_count": cert.solutions.len(),
            "certificate": cert,
        }),
    )?;
    Ok(cert.passed)
}

/// Synthesis checks for a target already known to lie in the range of `Q_∞`.
struct Synthesis {
    report: Value,
    passed: bool,
    grid: Vec<f64>,
    control: Vec<Vector>,
    states: Vec<Vector>,
}

fn synthesize(p: &ControlProblem, x: &Vector, tol: f64) -> crate::Result<Synthesis> {
    let v_inf = value_infinite(p, x)?;
    let x_norm = x.norm();
    let grid = default_grid(p, x_norm);
    let u = optimal_control_infinite(p, x, &grid)?;
    let y = optimal_trajectory_infinite(p, x, &grid)?;
    let sim = simulate_mild(p, &Vector::zeros(p.n()), &u, grid[0], 0.0)?;
    let endpoint = rel((sim.last() - x).norm(), x_norm);
    let energy = energy_of(&u);
    let energy_err = rel((energy - v_inf).abs(), v_inf);
    let feedback = crate::energy::feedback_residual(p, &y, &u)?;
    let bcle = if h_space(p)?.is_full_rank() {
        let fine = uniform_grid(-1.0, 0.0, 1001);
        Some(bcle_residual(p, &optimal_trajectory_infinite(p, x, &fine)?)?)
    } else {
        None
    };
    let passed = endpoint <= tol
        && energy_err <= tol
        && feedback <= 1e-8 * (1.0 + x_norm)
        && bcle.is_none_or(|r| r <= 1e-4 * (1.0 + x_norm));
    let report = json!({
        "v_inf": num(v_inf),
        "t_max": -grid[0],
        "grid_points": grid.len(),
        "energy": num(energy),
        "energy_rel_err": num(energy_err),
        "endpoint_rel_err": num(endpoint),
        "feedback_residual": num(feedback),
        "bcle_residual": bcle.map(num),
        "passed": passed,
    });
    Ok(Synthesis {
        report,
        passed,
        grid,
        control: u.values,
        states: y.states,
    })
}

fn is_unreachable(e: &Error) -> bool {
    error_exit_code(e) == 5
}

fn cmd_synthesize(a: &SynthesizeArgs) -> Result<bool, Failure> {
    let tol = positive("tol", a.tol)?;
    let model = load_model(&a.io.model)?;
    let p = &model.problem;
    let x = parse_vector(&a.target)?;
    check_target(p, &x)?;
    if let Some(t) = a.t {
        positive("t", t)?;
    }
    let out = OutDir::create(&a.io.out)?;
    let v_t = a
        .t
        .map(|t| match value_finite(p, t, &x) {
            Ok(v) => Ok(num(v)),
            Err(e) if is_unreachable(&e) => Ok(num(f64::INFINITY)),
            Err(e) => Err(e),
        })
        .transpose()?;
    let write_report = |result: Value| {
        out.json(
            "synthesis_report.json",
            &json!({
                "provenance": provenance(&model.hash, None),
                "target": x.as_slice(),
                "t": a.t,
                "v_t": v_t,
                "result": result,
            }),
        )
    };
    match synthesize(p, &x, tol) {
        Ok(s) => {
            let r_col = |r: f64, v: &Vector| std::iter::once(r).chain(v.iter().copied()).collect();
            let mut header = vec!["r".to_string()];
            header.extend(indexed("y", p.n()));
            out.csv(
                "trajectory.csv",
                &header,
                s.grid.iter().zip(&s.states).map(|(r, y)| r_col(*r, y)),
            )?;
            let mut header = vec!["r".to_string()];
            header.extend(indexed("u", p.m()));
            out.csv(
                "control.csv",
                &header,
                s.grid.iter().zip(&s.control).map(|(r, u)| r_col(*r, u)),
            )?;
            write_report(s.report)?;
            Ok(s.passed)
        }
        Err(e) if is_unreachable(&e) => {
            write_report(json!({ "v_inf": num(f64::INFINITY), "error": e.to_string() }))?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn auxiliary_section(p: &ControlProblem, t: f64, x: &Vector, c: f64, tol: f64) -> crate::Result<(Value, bool)> {
    let h = h_space(p)?;
    let cost = AuxiliaryCost::new(&h, crate::Matrix::identity(p.n(), p.n()) * c)?;
    let aux = value_auxiliary(p, &cost, t, x)?;
    let v_t = match value_finite(p, t, x) {
        Ok(v) => v,
        Err(e) if is_unreachable(&e) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    // With N = I_H the penalized problem recovers the infinite-horizon value.
    let (v_inf, passed) = if c == 1.0 {
        let v_inf = value_infinite(p, x)?;
        (Some(v_inf), (aux.value - v_inf).abs() <= tol * (1.0 + v_inf))
    } else {
        (None, aux.value <= v_t * (1.0 + tol) + tol)
    };
    let report = json!({
        "t": t,
        "n_scale": c,
        "value": num(aux.value),
        "argmin_z": aux.argmin_z,
        "v_t": num(v_t),
        "v_inf": v_inf.map(num),
        "passed": passed,
    });
    Ok((report, passed))
}

fn cmd_auxiliary(a: &AuxiliaryArgs) -> Result<bool, Failure> {
    let tol = positive("tol", a.tol)?;
    let t = positive("t", a.t)?;
    if !(a.n_scale >= 0.0 && a.n_scale.is_finite()) {
        return Err(Failure::BadParameter(format!("--n-scale must be nonnegative, got {}", a.n_scale)));
    }
    let model = load_model(&a.io.model)?;
    let x = parse_vector(&a.target)?;
    check_target(&model.problem, &x)?;
    let (report, passed) = auxiliary_section(&model.problem, t, &x, a.n_scale, tol)?;
    let out = OutDir::create(&a.io.out)?;
    out.json(
        "auxiliary_report.json",
        &json!({ "provenance": provenance(&model.hash, None), "target": x.as_slice(), "result": report }),
    )?;
    Ok(passed)
}

fn landau_profiles(model: &LGModel, y0: &Vector, out: &OutDir) -> Result<(), Failure> {
    let xi = profile_grid();
    let p = model.problem();
    let times = [-1.0, -0.1, -0.01, 0.0];
    let path = optimal_trajectory_infinite(p, y0, &times)?;
    let mut rows = Vec::with_capacity(xi.len());
    for &s in &xi {
        let mut row = vec![
            s,
            lg_equilibrium(model.rho_minus(), model.rho_plus(), s)?,
        ];
        for y in &path.states {
            row.push(profile_at(model, y, s)?);
        }
        rows.push(row);
    }
    let mut header = vec!["xi".to_string(), "equilibrium".to_string()];
    header.extend(times.iter().map(|r| format!("rho_at_r={r}")));
    out.csv("profiles.csv", &header, rows)?;
    Ok(())
}

fn cmd_landau(a: &LandauArgs) -> Result<bool, Failure> {
    let tol = positive("tol", a.tol)?;
    if a.n_modes == 0 {
        return Err(Failure::BadParameter("--n-modes must be at least 1".into()));
    }
    let model = build_lg_model(a.n_modes, a.rho_minus, a.rho_plus)?;
    let y0 = match &a.target {
        Some(s) => parse_vector(s)?,
        None => Vector::from_fn(a.n_modes, |i, _| if i == 0 { 1.0 } else { 0.0 }),
    };
    check_target(model.problem(), &y0)?;
    let doc = ModelDocument {
        kind: ModelKind::Landau {
            n_modes: a.n_modes,
            rho_minus: a.rho_minus,
            rho_plus: a.rho_plus,
        },
        weight_c: None,
    };
    let hash = sha256_hex(serde_json::to_string(&doc).expect("model documents serialize").as_bytes());
    let check = lg_value_check(&model, &y0)?;
    let (form, d_minus, d_plus) = inverse_gramian_form(&model)?;
    let passed = check.rel_err <= tol;
    let out = OutDir::create(&a.out)?;
    landau_profiles(&model, &y0, &out)?;
    out.json(
        "landau_report.json",
        &json!({
            "provenance": provenance(&hash, None),
            "n_modes": a.n_modes,
            "rho_minus": a.rho_minus,
            "rho_plus": a.rho_plus,
            "target": y0.as_slice(),
            "value_check": check,
            "inverse_gramian": { "form": form, "dist_minus_2a": d_minus, "dist_plus_2a": d_plus },
            "passed": passed,
        }),
    )?;
    Ok(passed)
}

fn cmd_all(a: &AllArgs) -> Result<bool, Failure> {
    let seed = parse_seed(a.seed.as_deref())?;
    let model = load_model(&a.io.model)?;
    let p = &model.problem;

    let (gramian, gramian_ok, _) = gramian_section(p, None, 1e-10)?;
    let (finite, finite_ok, _) = gramian_section(p, Some(1.0), 1e-8)?;
    let cert = certificate(p, &certificate_options(a.samples, seed, crate::riccati::SOLUTION_THRESHOLD, false))?;

    // A target in H: x = Q_∞^{1/2} g with Gaussian g.
    let h = h_space(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = &h.sqrt_q * gaussian_vector(&mut rng, p.n());
    let synthesis = synthesize(p, &x, 1e-6)?;
    let (aux, aux_ok) = auxiliary_section(p, 1.0, &x, 1.0, 1e-8)?;

    let passed = gramian_ok && finite_ok && cert.passed && synthesis.passed && aux_ok;
    let out = OutDir::create(&a.io.out)?;
    out.json(
        "all_report.json",
        &json!({
            "provenance": provenance(&model.hash, Some(seed)),
            "gramian_infinite": gramian,
            "gramian_finite": finite,
            "certificate": { "passed": cert.passed, "solution_count": cert.solutions.len(), "detail": cert },
            "synthesis": { "target": x.as_slice(), "result": synthesis.report },
            "auxiliary": aux,
            "passed": passed,
        }),
    )?;
    Ok(passed)
}

//! Command-line front end.
//!
//! Every numeric flag may also come from a `key = value` config file given by
//! `--config`; flags win over the file, the file over environment and
//! built-in defaults.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::biortho::{build_biorthogonal, BiorthogonalFamily, DEFAULT_PRECISION_BITS};
use crate::control::{monte_carlo_expectation, simulate_terminal, synthesize_control, InitialDatum};
use crate::design::{
    certify_domain, j_trunc, solve_truncated, stationarity_scan, DesignProblem, DesignResult,
    ScanConfig, SolverConfig, TruncationPolicy, DEFAULT_M_OFFSET,
};
use crate::error::Error;
use crate::geometry::IntervalUnion;
use crate::lumped::{solve_lumped, summability_diagnostic, verify_equalization};
use crate::spectrum::{mode_mass, SpectralFamily};

pub const PRECISION_ENV: &str = "ACTUATOR_FORGE_PRECISION_BITS";
pub const DEFAULT_FAMILY: &str = "sine-fractional:alpha=1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "actuator-forge", version, about = "Optimal actuator shapes for 1D parabolic control")]
struct Cli {
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral weights γ_j(T) and biorthogonal norms.
    Weights(WeightsArgs),
    /// Solve the truncated design problem.
    Optimize(OptimizeArgs),
    /// Solve a range of truncations and detect stationarity.
    Stationarity(StationarityArgs),
    /// Synthesize and check the null control for a domain and datum.
    Control(ControlArgs),
    /// Closed-form optimal lumped profile.
    Lumped(LumpedArgs),
    /// Evaluate a given domain.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct SpectralArgs {
    /// Eigenvalue family, e.g. `sine-fractional:alpha=1` (heat).
    #[arg(long)]
    family: Option<String>,
    /// Control horizon T.
    #[arg(long = "T")]
    t: Option<f64>,
    /// Working precision of the Gram inversion in bits.
    #[arg(long = "precision-bits")]
    precision_bits: Option<u32>,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    #[command(flatten)]
    spectral: SpectralArgs,
    /// Number of modes in the biorthogonal family.
    #[arg(long = "M")]
    m: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    spectral: SpectralArgs,
    /// Measure fraction of the actuator domain, in (0, 1).
    #[arg(long = "L")]
    l: Option<f64>,
    /// Number of modes in the design criterion.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Biorthogonal family size; defaults to `N + 8`.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Iteration cap of the saddle-point solver.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Relative equalization-gap tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Subgradient step constant.
    #[arg(long = "step-c")]
    step_c: Option<f64>,
    /// Optimal domain as CSV `a,b` rows.
    #[arg(long = "out-intervals")]
    out_intervals: Option<PathBuf>,
    /// JSON report; stdout when omitted.
    #[arg(long = "out-report")]
    out_report: Option<PathBuf>,
    /// SVG strips of the domain.
    #[arg(long = "out-svg")]
    out_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StationarityArgs {
    #[command(flatten)]
    spectral: SpectralArgs,
    /// Measure fraction of the actuator domain, in (0, 1).
    #[arg(long = "L")]
    l: Option<f64>,
    /// First truncation level.
    #[arg(long = "N-min")]
    n_min: Option<usize>,
    /// Last truncation level.
    #[arg(long = "N-max")]
    n_max: Option<usize>,
    /// Shared family size; defaults to `N_max + 8`.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Build a separate family with `M = N + 8` for every `N`.
    #[arg(long = "per-n")]
    per_n: bool,
    /// Symmetric-difference tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap of the saddle-point solver.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// JSON report; stdout when omitted.
    #[arg(long = "out-report")]
    out_report: Option<PathBuf>,
    /// SVG with one strip per truncation level.
    #[arg(long = "out-svg")]
    out_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ControlArgs {
    #[command(flatten)]
    spectral: SpectralArgs,
    /// Actuator domain as CSV `a,b` rows.
    #[arg(long)]
    intervals: Option<PathBuf>,
    /// Initial datum as CSV `j,a_j` rows.
    #[arg(long)]
    datum: Option<PathBuf>,
    /// Number of controlled modes; defaults to the datum length.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Modes checked at the terminal time, at least M.
    #[arg(long = "K-check")]
    k_check: Option<usize>,
    /// Monte Carlo samples of the randomized cost.
    #[arg(long)]
    samples: Option<usize>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report; stdout when omitted.
    #[arg(long = "out-report")]
    out_report: Option<PathBuf>,
    /// Terminal coefficients as CSV `k,y_k`.
    #[arg(long = "out-terminal")]
    out_terminal: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LumpedArgs {
    #[command(flatten)]
    spectral: SpectralArgs,
    /// Number of modes.
    #[arg(long = "M")]
    m: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    spectral: SpectralArgs,
    /// Domain to evaluate, CSV `a,b` rows.
    #[arg(long)]
    intervals: Option<PathBuf>,
    /// Number of modes in the design criterion.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Biorthogonal family size; defaults to `N + 8`.
    #[arg(long = "M")]
    m: Option<usize>,
    /// JSON report; stdout when omitted.
    #[arg(long = "out-report")]
    out_report: Option<PathBuf>,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type CmdResult<T = ()> = std::result::Result<T, Failure>;

fn invalid<T>(msg: impl Into<String>) -> CmdResult<T> {
    Err(Failure::Input(msg.into()))
}

/// `key = value` pairs with `#` comments. Keys may carry leading dashes.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().trim_start_matches('-').to_string();
            if key.is_empty() {
                return Err(Error::Parse(format!("config line {}: empty key", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

struct Resolver {
    config: ConfigFile,
}

impl Resolver {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> CmdResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.config.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Failure::Input(format!("config key `{key}` = `{v}`: {e}"))),
        }
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> CmdResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(flag, key)?
            .ok_or_else(|| Failure::Input(format!("missing required value --{key}")))
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CmdResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.config.get(key).map(PathBuf::from))
    }

    fn family(&self, args: &SpectralArgs) -> CmdResult<SpectralFamily> {
        let spec: String = self.or(args.family.clone(), "family", DEFAULT_FAMILY.to_string())?;
        spec.parse().map_err(|e: Error| Failure::Input(format!("--family: {e}")))
    }

    fn horizon(&self, args: &SpectralArgs) -> CmdResult<f64> {
        let t: f64 = self.require(args.t, "T")?;
        if !(t > 0.0 && t.is_finite()) {
            return invalid(format!("--T must be positive, got {t}"));
        }
        Ok(t)
    }

    fn precision(&self, args: &SpectralArgs) -> CmdResult<u32> {
        let bits = match self.get(args.precision_bits, "precision-bits")? {
            Some(b) => b,
            None => match std::env::var(PRECISION_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|e| Failure::Input(format!("{PRECISION_ENV} = `{v}`: {e}")))?,
                Err(_) => DEFAULT_PRECISION_BITS,
            },
        };
        if bits < 64 {
            return invalid(format!("--precision-bits must be at least 64, got {bits}"));
        }
        Ok(bits)
    }

    fn fraction(&self, flag: Option<f64>) -> CmdResult<f64> {
        let l: f64 = self.require(flag, "L")?;
        if !(l > 0.0 && l < 1.0) {
            return invalid(format!("--L must lie in (0, 1), got {l}"));
        }
        Ok(l)
    }
}

fn positive(value: usize, key: &str) -> CmdResult<usize> {
    if value == 0 {
        return invalid(format!("--{key} must be at least 1"));
    }
    Ok(value)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            EXIT_NUMERICAL
        }
    }
}

fn execute(cli: Cli) -> CmdResult {
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    let r = Resolver { config };
    match cli.command {
        Command::Weights(a) => weights(&r, a),
        Command::Optimize(a) => optimize(&r, a),
        Command::Stationarity(a) => stationarity(&r, a),
        Command::Control(a) => control(&r, a),
        Command::Lumped(a) => lumped(&r, a),
        Command::Verify(a) => verify(&r, a),
    }
}

/// Seventeen significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(path: Option<&Path>, value: &Value) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    emit(path, &text)
}

fn read(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn family_for(r: &Resolver, args: &SpectralArgs, m: usize) -> CmdResult<(BiorthogonalFamily, f64)> {
    let family = r.family(args)?;
    let t = r.horizon(args)?;
    let bits = r.precision(args)?;
    Ok((build_biorthogonal(&family, m, t, bits)?, t))
}

fn weights(r: &Resolver, a: WeightsArgs) -> CmdResult {
    let m = positive(r.require(a.m, "M")?, "M")?;
    let (bio, _) = family_for(r, &a.spectral, m)?;
    let mut out = String::from("j,lambda_j,theta_norm_sq,gamma_j\n");
    for j in 1..=m {
        let _ = writeln!(
            out,
            "{j},{},{},{}",
            num(bio.lambda(j)),
            num(bio.norm_sq(j)),
            num(bio.gamma_weight(j)?)
        );
    }
    emit(r.path(a.out, "out").as_deref(), &out)
}

fn report_json(result: &DesignResult) -> Value {
    json!({
        "alpha": result.alpha,
        "J_N": result.value,
        "mode_values": result.mode_values,
        "active_set": result.active_set,
        "iterations": result.iterations,
        "equalization_gap": result.equalization_gap,
        "certificate": result.certificate,
        "converged": result.converged,
        "intervals": result.omega,
    })
}

fn solver_config(r: &Resolver, max_iter: Option<usize>, tol: Option<f64>, step_c: Option<f64>) -> CmdResult<SolverConfig> {
    let d = SolverConfig::default();
    let config = SolverConfig {
        max_iter: r.or(max_iter, "max-iter", d.max_iter)?,
        tol: r.or(tol, "tol", d.tol)?,
        step_c: r.or(step_c, "step-c", d.step_c)?,
    };
    if config.max_iter == 0 || !(config.tol > 0.0) || !(config.step_c > 0.0) {
        return invalid("--max-iter, --tol and --step-c must be positive");
    }
    Ok(config)
}

fn optimize(r: &Resolver, a: OptimizeArgs) -> CmdResult {
    let l = r.fraction(a.l)?;
    let n = positive(r.require(a.n, "N")?, "N")?;
    let m = r.or(a.m, "M", n + DEFAULT_M_OFFSET)?;
    if m < n {
        return invalid(format!("--M = {m} must be at least --N = {n}"));
    }
    let solver = solver_config(r, a.max_iter, a.tol, a.step_c)?;
    let (bio, _) = family_for(r, &a.spectral, m)?;
    let problem = DesignProblem::from_biorthogonal(&bio, l, n)?;
    let result = solve_truncated(&problem, &solver)?;

    if let Some(path) = r.path(a.out_intervals, "out-intervals") {
        emit(Some(&path), &result.omega.to_csv())?;
    }
    if let Some(path) = r.path(a.out_svg, "out-svg") {
        let strips = (1..n)
            .into_par_iter()
            .map(|k| Ok((k, solve_truncated(&problem.with_n(k)?, &solver)?.omega)))
            .collect::<Result<Vec<_>, Error>>()?;
        let mut strips = strips;
        strips.push((n, result.omega.clone()));
        write_strips(&strips, &path)?;
    }
    emit_json(r.path(a.out_report, "out-report").as_deref(), &report_json(&result))?;
    if !result.converged {
        return Err(Failure::Numerical(format!(
            "equalization gap {:e} not within tol after {} iterations",
            result.equalization_gap, result.iterations
        )));
    }
    Ok(())
}

fn stationarity(r: &Resolver, a: StationarityArgs) -> CmdResult {
    let family = r.family(&a.spectral)?;
    let t = r.horizon(&a.spectral)?;
    let bits = r.precision(&a.spectral)?;
    let l = r.fraction(a.l)?;
    let n_min = positive(r.or(a.n_min, "N-min", 1)?, "N-min")?;
    let n_max: usize = r.require(a.n_max, "N-max")?;
    if n_max < n_min {
        return invalid(format!("--N-max = {n_max} is below --N-min = {n_min}"));
    }
    let policy = match (r.get(a.m, "M")?, a.per_n) {
        (Some(_), true) => return invalid("--M and --per-n are exclusive"),
        (Some(m), false) => TruncationPolicy::Fixed(m),
        (None, true) => TruncationPolicy::PerN(DEFAULT_M_OFFSET),
        (None, false) => TruncationPolicy::Offset(DEFAULT_M_OFFSET),
    };
    let scan = ScanConfig {
        tol: r.or(a.tol, "tol", ScanConfig::default().tol)?,
        policy,
        precision_bits: bits,
        solver: solver_config(r, a.max_iter, None, None)?,
    };
    let report = stationarity_scan(&family, t, l, n_min, n_max, &scan)?;
    if let Some(path) = r.path(a.out_svg, "out-svg") {
        let strips: Vec<_> = (n_min..=n_max)
            .map(|n| (n, report.result(n).omega.clone()))
            .collect();
        write_strips(&strips, &path)?;
    }
    let per_n: Vec<Value> = (n_min..=n_max)
        .map(|n| {
            let res = report.result(n);
            json!({"N": n, "J_N": res.value, "converged": res.converged, "intervals": res.omega})
        })
        .collect();
    let value = json!({
        "N_stat": report.n_stat,
        "verified": report.verified,
        "symdiffs": report.symdiffs,
        "results": per_n,
    });
    emit_json(r.path(a.out_report, "out-report").as_deref(), &value)?;
    if !report.verified {
        eprintln!("warning: no stationarity detected before N_max = {n_max}");
    }
    Ok(())
}

fn control(r: &Resolver, a: ControlArgs) -> CmdResult {
    let intervals = r
        .path(a.intervals, "intervals")
        .ok_or_else(|| Failure::Input("missing required value --intervals".into()))?;
    let datum = r
        .path(a.datum, "datum")
        .ok_or_else(|| Failure::Input("missing required value --datum".into()))?;
    let omega = IntervalUnion::from_csv(&read(&intervals)?)?;
    let y0 = InitialDatum::from_csv(&read(&datum)?)?;
    let m = positive(r.or(a.m, "M", y0.coeffs().len().max(1))?, "M")?;
    let k_check = r.or(a.k_check, "K-check", m)?;
    if k_check < m {
        return invalid(format!("--K-check = {k_check} must be at least --M = {m}"));
    }
    let (bio, _) = family_for(r, &a.spectral, m)?;
    let ctrl = synthesize_control(&omega, &y0, &bio)?;
    let report = simulate_terminal(&omega, &y0, &ctrl, k_check)?;
    let monte_carlo = match r.get(a.samples, "samples")? {
        Some(samples) => {
            let seed = r.or(a.seed, "seed", 0)?;
            Some(monte_carlo_expectation(&omega, &y0, &bio, samples, seed)?)
        }
        None => None,
    };
    if let Some(path) = r.path(a.out_terminal, "out-terminal") {
        let mut csv = String::from("k,y_k\n");
        for (k, y) in report.terminal.iter().enumerate() {
            let _ = writeln!(csv, "{},{}", k + 1, num(*y));
        }
        emit(Some(&path), &csv)?;
    }
    let value = json!({
        "coefficients": ctrl.coeffs(),
        "energy": report.energy,
        "max_residual": report.max_residual,
        "moment_residual": report.moment_residual,
        "spillover": report.spillover,
        "datum_norm": report.datum_norm,
        "terminal": report.terminal,
        "monte_carlo": monte_carlo,
    });
    emit_json(r.path(a.out_report, "out-report").as_deref(), &value)
}

fn lumped(r: &Resolver, a: LumpedArgs) -> CmdResult {
    let m = positive(r.require(a.m, "M")?, "M")?;
    let (bio, _) = family_for(r, &a.spectral, m)?;
    let gamma = (1..=m)
        .map(|j| bio.gamma_weight(j))
        .collect::<Result<Vec<_>, _>>()?;
    let profile = solve_lumped(&gamma)?;
    let mut out = format!("# value = {}\n", num(profile.value));
    let _ = writeln!(out, "# equalization_gap = {}", num(verify_equalization(&profile, &gamma)));
    if let Ok(s) = summability_diagnostic(&gamma) {
        let _ = writeln!(out, "# tail_ratio = {}", num(s.tail_ratio));
    }
    out.push_str("j,gamma_j,g_j,gamma_g_sq\n");
    for (j, (g, gj)) in gamma.iter().zip(&profile.g).enumerate() {
        let _ = writeln!(out, "{},{},{},{}", j + 1, num(*g), num(*gj), num(g * gj * gj));
    }
    emit(r.path(a.out, "out").as_deref(), &out)
}

fn verify(r: &Resolver, a: VerifyArgs) -> CmdResult {
    let intervals = r
        .path(a.intervals, "intervals")
        .ok_or_else(|| Failure::Input("missing required value --intervals".into()))?;
    let omega = IntervalUnion::from_csv(&read(&intervals)?)?;
    let n = positive(r.require(a.n, "N")?, "N")?;
    let m = r.or(a.m, "M", n + DEFAULT_M_OFFSET)?;
    if m < n {
        return invalid(format!("--M = {m} must be at least --N = {n}"));
    }
    let fraction = omega.measure() / std::f64::consts::PI;
    if !(fraction > 0.0 && fraction < 1.0) {
        return invalid(format!("domain measure fraction {fraction} must lie in (0, 1)"));
    }
    let (bio, _) = family_for(r, &a.spectral, m)?;
    let problem = DesignProblem::from_biorthogonal(&bio, fraction, n)?;
    let certificate = if m > n {
        Some(certify_domain(&problem, &omega, m)?)
    } else {
        None
    };
    let cost = crate::control::randomized_cost(&omega, &bio)?;
    let value = json!({
        "measure": omega.measure(),
        "fraction": fraction,
        "components": omega.component_count(),
        "J_N": j_trunc(&problem, &omega),
        "mode_values": (1..=n).map(|j| (problem.ln_gamma(j) + mode_mass(j, &omega).ln()).exp()).collect::<Vec<_>>(),
        "certificate": certificate,
        "randomized_cost": cost,
    });
    emit_json(r.path(a.out_report, "out-report").as_deref(), &value)
}

const SVG_WIDTH: f64 = 600.0;
const SVG_LABEL: f64 = 48.0;
const STRIP_HEIGHT: f64 = 20.0;
const STRIP_GAP: f64 = 10.0;

/// SVG with one horizontal strip per `(N, ω^N)`: the axis `(0, π)` maps to
/// the strip width and each interval is a filled rectangle.
pub fn render_strips(strips: &[(usize, IntervalUnion)]) -> Result<String, Error> {
    if strips.is_empty() {
        return Err(Error::Domain("strip diagram needs at least one domain".into()));
    }
    let plot = SVG_WIDTH - SVG_LABEL - 10.0;
    let height = STRIP_GAP + strips.len() as f64 * (STRIP_HEIGHT + STRIP_GAP);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH:.0}" height="{height:.0}" viewBox="0 0 {SVG_WIDTH:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (n, omega)) in strips.iter().enumerate() {
        let y = STRIP_GAP + i as f64 * (STRIP_HEIGHT + STRIP_GAP);
        let _ = writeln!(
            svg,
            r#"<text x="6" y="{:.6}" font-family="sans-serif" font-size="12">N={n}</text>"#,
            y + STRIP_HEIGHT * 0.7
        );
        let _ = writeln!(
            svg,
            r#"<rect class="axis" x="{SVG_LABEL:.6}" y="{y:.6}" width="{plot:.6}" height="{STRIP_HEIGHT:.6}" fill="none" stroke="black" stroke-width="1"/>"#
        );
        for &(a, b) in omega.intervals() {
            let x0 = SVG_LABEL + plot * a / std::f64::consts::PI;
            let w = plot * (b - a) / std::f64::consts::PI;
            let _ = writeln!(
                svg,
                r#"<rect class="omega" x="{x0:.6}" y="{y:.6}" width="{w:.6}" height="{STRIP_HEIGHT:.6}" fill="black"/>"#
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_strips(strips: &[(usize, IntervalUnion)], path: &Path) -> Result<(), Error> {
    fs::write(path, render_strips(strips)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let c = ConfigFile::parse("# comment\nT = 0.05\n--L=0.2 # trailing\n\nfamily = sine-fractional:alpha=1\n").unwrap();
        assert_eq!(c.get("T"), Some("0.05"));
        assert_eq!(c.get("L"), Some("0.2"));
        assert_eq!(c.get("family"), Some("sine-fractional:alpha=1"));
        assert!(ConfigFile::parse("just text\n").is_err());
    }

    #[test]
    fn strip_coordinates() {
        let omega = IntervalUnion::new(vec![(1.0, 2.0)]).unwrap();
        let svg = render_strips(&[(1, omega)]).unwrap();
        let plot = SVG_WIDTH - SVG_LABEL - 10.0;
        let x0 = format!(r#"x="{:.6}""#, SVG_LABEL + plot / std::f64::consts::PI);
        let w = format!(r#"width="{:.6}""#, plot / std::f64::consts::PI);
        assert!(svg.contains(&x0) && svg.contains(&w), "{svg}");
        assert_eq!(svg.matches(r#"class="omega""#).count(), 1);

        let empty = render_strips(&[(3, IntervalUnion::empty())]).unwrap();
        assert_eq!(empty.matches(r#"class="omega""#).count(), 0);
        assert!(empty.contains("N=3"));
        assert!(render_strips(&[]).is_err());
    }
}

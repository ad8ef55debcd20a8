//! `inls` command-line front end.
//!
//! Every subcommand writes into its own run directory: the verbatim
//! configuration (`config.json`), a `schema_version` file, its artifacts,
//! and a `manifest.json` listing all of them.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use inls_core::diagnostics::{
    default_panel_thetas, scattering_state, virial_consistency, DiagnosticsError, Direction,
    ScatterConfig,
};
use inls_core::dynamics::{evolve, EvolveConfig, EvolveError, Termination};
use inls_core::exponents::{
    check_admissible, format_rational, parse_rational, theta_range, to_f64, working_exponents,
    ExponentError, InlsParams,
};
use inls_core::ground_state::{
    gn_constant, solve_petviashvili, GroundStateError, GroundStateProfile,
};
use inls_core::invariants::{
    classify, coercivity_check, report, GroundStateSettings, ThresholdCache,
};
use inls_core::io::{read_trace, write_field, write_trace, IoError};
use inls_core::radial::{GridError, RadialGrid};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

pub mod init;
pub mod output;
pub mod sweep;

pub use init::InitSpec;
use output::RunDir;
pub use sweep::{run_sweep, sweep_csv, SweepConfig, SweepPlan, SweepPoint};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "INLS_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "inls-runs";
/// Mass fraction in the outer tenth of the grid above which `evolve` warns.
pub const BOUNDARY_WARNING: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Mismatch(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<ExponentError> for CliError {
    fn from(e: ExponentError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EvolveError> for CliError {
    fn from(e: EvolveError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GroundStateError> for CliError {
    fn from(e: GroundStateError) -> Self {
        match e {
            GroundStateError::GridMismatch { .. } | GroundStateError::Grid(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::NotConverged { .. } => CliError::Mismatch(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn input_error(e: IoError) -> CliError {
    CliError::Validation(e.to_string())
}

fn output_error(e: IoError) -> CliError {
    CliError::Internal(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "inls", version, about = "Radial focusing INLS laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Working exponents and the feasible theta interval.
    Admissible(AdmissibleArgs),
    /// Solve for the ground state Q and report its identities.
    #[command(after_help = "Writes report.json and profile.csv (columns: r,re_u,im_u).")]
    GroundState(GroundStateArgs),
    /// Place initial data relative to the ground-state thresholds.
    #[command(after_help = "Writes verdict.json.")]
    Classify(ClassifyArgs),
    /// Split-step evolution with monitors and snapshots.
    #[command(after_help = "Writes monitors.csv (columns: t,mass,energy,grad_sq,potential,\
grad_product,sup_u,boundary_frac), snapshots/snap_<step>.csv (columns: r,re_u,im_u), \
trace.json and summary.json.")]
    Evolve(EvolveArgs),
    /// Check the localized virial identity along a stored trace.
    #[command(after_help = "Writes virial.json and virial.csv (columns: t,z,fd_second,identity,remainder).")]
    Virial(VirialArgs),
    /// Build the scattering state from a stored trace.
    #[command(after_help = "Writes scatter.json, phi.csv (columns: r,re_u,im_u) and scatter.csv \
(columns: t,h1_distance, then one cumulative Strichartz column per panel pair).")]
    Scatter(ScatterArgs),
    /// Classify and evolve a grid of Gaussian amplitudes concurrently.
    #[command(after_help = "Writes sweep.csv (columns: b,amplitude,me_ratio,grad_ratio,verdict,\
termination,t_final) and points/point-<k>/{summary.json,monitors.csv}.")]
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// Output directory (default: $INLS_OUTPUT_ROOT/<subcommand>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed recorded with the run; all builtin data are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GroundStateGrid {
    /// Domain length for the ground-state solve.
    #[arg(long, default_value_t = GroundStateSettings::default().r_max)]
    gs_r_max: f64,
    /// Node count for the ground-state solve.
    #[arg(long, default_value_t = GroundStateSettings::default().n)]
    gs_n: usize,
}

impl GroundStateGrid {
    fn settings(&self) -> GroundStateSettings {
        GroundStateSettings {
            r_max: self.gs_r_max,
            n: self.gs_n,
            ..GroundStateSettings::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct AdmissibleArgs {
    /// Weight exponent as an exact rational, e.g. 1/4.
    #[arg(long)]
    b: String,
    /// Theta as an exact rational (default: midpoint of the feasible range).
    #[arg(long)]
    theta: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GroundStateArgs {
    #[arg(long)]
    b: String,
    #[arg(long, default_value_t = GroundStateSettings::default().r_max)]
    r_max: f64,
    #[arg(long, default_value_t = GroundStateSettings::default().n)]
    n: usize,
    #[arg(long, default_value_t = GroundStateSettings::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = GroundStateSettings::default().max_iter)]
    max_iter: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ClassifyArgs {
    #[arg(long)]
    b: String,
    /// gaussian:A | gaussian:A:w | groundstate | groundstate:c | file:<path>
    #[arg(long)]
    init: String,
    /// Grid for the data (default: the ground-state grid).
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    gs: GroundStateGrid,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum Expect {
    /// terminates ReachedT
    Reach,
    /// terminates ReachedT and the Duhamel integral settles
    Scatter,
    /// terminates BlowupDetected
    Blowup,
    /// terminates BoundaryContaminated
    Boundary,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EvolveArgs {
    #[arg(long)]
    b: String,
    #[arg(long)]
    init: String,
    /// Final time.
    #[arg(long = "T")]
    t_final: f64,
    #[arg(long)]
    dt: f64,
    #[arg(long, default_value_t = 256.0)]
    r_max: f64,
    #[arg(long, default_value_t = 4095)]
    n: usize,
    #[arg(long, default_value_t = EvolveConfig::default().snap_stride)]
    snap_stride: usize,
    #[arg(long, default_value_t = EvolveConfig::default().blowup_factor)]
    blowup_factor: f64,
    #[arg(long, default_value_t = EvolveConfig::default().boundary_limit)]
    boundary_limit: f64,
    #[arg(long, default_value_t = EvolveConfig::default().phase_limit)]
    phase_limit: f64,
    #[arg(long, default_value_t = EvolveConfig::default().spectral_limit)]
    spectral_limit: f64,
    /// Drop the nonlinear term (free evolution).
    #[arg(long)]
    linear: bool,
    /// Run toward negative times.
    #[arg(long)]
    backward: bool,
    /// Required outcome; a different one exits with status 3.
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[command(flatten)]
    gs: GroundStateGrid,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct VirialArgs {
    /// Trace directory written by `evolve`.
    #[arg(long)]
    trace: PathBuf,
    /// Truncation radius of the weight.
    #[arg(long = "R")]
    radius: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum DirectionArg {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ScatterArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Defaults to the direction the trace was run in.
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Largest accepted final Duhamel increment relative to ‖φ‖_{H¹}.
    #[arg(long = "T-tail", alias = "tail-tol", default_value_t = ScatterConfig::default().tail_tol)]
    tail_tol: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SweepArgs {
    /// Comma-separated exact rationals.
    #[arg(long, default_value = "1/4")]
    b: String,
    /// Comma-separated amplitudes; empty for an empty sweep.
    #[arg(long, allow_hyphen_values = true)]
    amplitudes: String,
    /// Gaussian width w in A·e^{−(r/w)²}.
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Concurrent points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long = "T", default_value_t = SweepPlan::dispersive().t_final)]
    t_final: f64,
    #[arg(long, default_value_t = SweepPlan::dispersive().dt)]
    dt: f64,
    #[arg(long, default_value_t = SweepPlan::dispersive().r_max)]
    r_max: f64,
    #[arg(long, default_value_t = SweepPlan::dispersive().n)]
    n: usize,
    #[arg(long = "collapse-T", default_value_t = SweepPlan::collapse().t_final)]
    collapse_t_final: f64,
    #[arg(long, default_value_t = SweepPlan::collapse().dt)]
    collapse_dt: f64,
    #[arg(long, default_value_t = SweepPlan::collapse().r_max)]
    collapse_r_max: f64,
    #[arg(long, default_value_t = SweepPlan::collapse().n)]
    collapse_n: usize,
    #[command(flatten)]
    gs: GroundStateGrid,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct RunConfig<'a, T: Serialize> {
    subcommand: &'a str,
    argv: &'a [String],
    args: &'a T,
}

fn output_root(common: &Common, subcommand: &str) -> PathBuf {
    match &common.out {
        Some(p) => p.clone(),
        None => {
            let root = std::env::var_os(OUTPUT_ROOT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
            root.join(subcommand)
        }
    }
}

fn open_run<T: Serialize>(
    subcommand: &str,
    argv: &[String],
    args: &T,
    common: &Common,
) -> Result<RunDir, CliError> {
    let config = RunConfig {
        subcommand,
        argv,
        args,
    };
    RunDir::create(&output_root(common, subcommand), &config)
}

fn parse_params(b: &str) -> Result<InlsParams, CliError> {
    b.parse::<InlsParams>().map_err(CliError::from)
}

fn parse_init(s: &str) -> Result<InitSpec, CliError> {
    s.parse::<InitSpec>().map_err(CliError::Validation)
}

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    emit(&format!("{text}\n"));
    Ok(())
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// Parses `argv` (program name first), runs the subcommand, and returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let recorded: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match dispatch(cli.command, &recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, argv: &[String]) -> Result<(), CliError> {
    match command {
        Command::Admissible(a) => cmd_admissible(&a, argv),
        Command::GroundState(a) => cmd_ground_state(&a, argv),
        Command::Classify(a) => cmd_classify(&a, argv),
        Command::Evolve(a) => cmd_evolve(&a, argv),
        Command::Virial(a) => cmd_virial(&a, argv),
        Command::Scatter(a) => cmd_scatter(&a, argv),
        Command::Sweep(a) => cmd_sweep(&a, argv),
    }
}

fn cmd_admissible(args: &AdmissibleArgs, argv: &[String]) -> Result<(), CliError> {
    let params = parse_params(&args.b)?;
    let range = theta_range(params.b())?;
    let theta = match &args.theta {
        Some(t) => parse_rational(t)?,
        None => range.midpoint(),
    };
    let w = working_exponents(&params, &theta)?;
    let rows = [
        ("theta", &w.theta),
        ("q_hat", &w.q_hat),
        ("r_hat", &w.r_hat),
        ("a_tilde", &w.a_tilde),
        ("a_hat", &w.a_hat),
    ];
    let mut text = String::new();
    text.push_str(&format!("b        {}\n", format_rational(params.b())));
    text.push_str(&format!("s_c      {}\n", format_rational(params.s_c())));
    for (name, x) in rows {
        text.push_str(&format!("{name:<8} {:<12} {:.12}\n", format_rational(x), to_f64(x)));
    }
    for (label, pair) in ["L2", "HsDot", "HsDotDual"].iter().zip(w.pairs()) {
        text.push_str(&format!("{label:<9} admissible = {}\n", check_admissible(&pair, &params)));
    }
    text.push_str(&format!(
        "theta range ({}, {}) bound by {:?}; theta inside: {}\n",
        format_rational(&range.lower),
        format_rational(&range.upper),
        range.binding,
        range.contains(&theta)
    ));

    emit(&text);
    let mut dir = open_run("admissible", argv, args, &args.common)?;
    let table = json!({
        "b": format_rational(params.b()),
        "s_c": format_rational(params.s_c()),
        "theta": format_rational(&w.theta),
        "q_hat": format_rational(&w.q_hat),
        "r_hat": format_rational(&w.r_hat),
        "a_tilde": format_rational(&w.a_tilde),
        "a_hat": format_rational(&w.a_hat),
        "theta_range": {
            "lower": format_rational(&range.lower),
            "upper": format_rational(&range.upper),
            "binding": range.binding,
            "contains_theta": range.contains(&theta),
        },
    });
    dir.json("admissible.json", &table)?;
    dir.finish()?;
    Ok(())
}

fn solve_ground_state(
    params: &InlsParams,
    settings: GroundStateSettings,
) -> Result<GroundStateProfile, CliError> {
    let grid = Arc::new(RadialGrid::for_params(settings.r_max, settings.n, params)?);
    Ok(solve_petviashvili(params, grid, settings.tol, settings.max_iter)?)
}

fn cmd_ground_state(args: &GroundStateArgs, argv: &[String]) -> Result<(), CliError> {
    let params = parse_params(&args.b)?;
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(CliError::Validation("tol must be positive".into()));
    }
    let settings = GroundStateSettings {
        r_max: args.r_max,
        n: args.n,
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let q = solve_ground_state(&params, settings)?;
    let gn = gn_constant(&q);
    let out = json!({
        "report": q.report(),
        "s_c": params.s_c_f64(),
        "grad_mass_ratio": q.grad_q_sq / q.mass_q,
        "pohozaev_residuals": q.pohozaev_residuals(),
        "c_gn_direct": gn.direct,
        "c_gn_closed": gn.closed,
        "grid": { "r_max": args.r_max, "n": args.n },
    });
    let mut dir = open_run("ground-state", argv, args, &args.common)?;
    dir.json("report.json", &out)?;
    write_field(&dir.path("profile.csv"), &q.field()).map_err(output_error)?;
    dir.record("profile.csv");
    dir.finish()?;
    print_json(&out)
}

fn cmd_classify(args: &ClassifyArgs, argv: &[String]) -> Result<(), CliError> {
    let params = parse_params(&args.b)?;
    let init = parse_init(&args.init)?;
    let settings = args.gs.settings();
    let grid = Arc::new(RadialGrid::for_params(
        args.r_max.unwrap_or(settings.r_max),
        args.n.unwrap_or(settings.n),
        &params,
    )?);
    let profile = ThresholdCache::new(settings).profile(&params)?;
    let field = init.build(grid, Some(&profile))?;
    let verdict = classify(&field, &profile).map_err(|e| CliError::Validation(e.to_string()))?;
    let coercivity = coercivity_check(&field, &profile).ok();
    let out = json!({
        "verdict": verdict,
        "invariants": report(&field, &params),
        "threshold_me": profile.threshold_me,
        "threshold_grad": profile.threshold_grad,
        "coercivity": coercivity,
        "init": init.to_string(),
    });
    let mut dir = open_run("classify", argv, args, &args.common)?;
    dir.json("verdict.json", &out)?;
    dir.finish()?;
    print_json(&out)
}

fn cmd_evolve(args: &EvolveArgs, argv: &[String]) -> Result<(), CliError> {
    let params = parse_params(&args.b)?;
    let init = parse_init(&args.init)?;
    if !(args.dt.is_finite() && args.dt > 0.0) {
        return Err(CliError::Validation("dt must be positive".into()));
    }
    let grid = Arc::new(RadialGrid::for_params(args.r_max, args.n, &params)?);
    let profile = ThresholdCache::new(args.gs.settings()).profile(&params)?;
    let u0 = init.build(grid, Some(&profile))?;
    let config = EvolveConfig {
        snap_stride: args.snap_stride,
        blowup_factor: args.blowup_factor,
        boundary_limit: args.boundary_limit,
        threshold_grad: Some(profile.threshold_grad),
        phase_limit: args.phase_limit,
        spectral_limit: args.spectral_limit,
        nonlinear: !args.linear,
    };
    let dt = if args.backward { -args.dt } else { args.dt };
    let trace = evolve(&u0, args.t_final, dt, &params, &config)?;
    let outer = trace.monitors.iter().map(|m| m.boundary_frac).fold(0.0, f64::max);
    if outer > BOUNDARY_WARNING {
        eprintln!("warning: outer tenth of the grid held {outer:.2e} of the mass");
    }

    let mut dir = open_run("evolve", argv, args, &args.common)?;
    for rel in write_trace(dir.root(), &trace).map_err(output_error)? {
        dir.record(&rel);
    }
    let scatter = if args.expect == Some(Expect::Scatter) && trace.termination == Termination::ReachedT {
        let direction = if args.backward {
            Direction::Backward
        } else {
            Direction::Forward
        };
        Some(scattering_state(&trace, direction, &ScatterConfig::default()).map(|r| r.duhamel_tail))
    } else {
        None
    };
    let summary = json!({
        "termination": trace.termination,
        "blowup_cause": trace.blowup_cause,
        "t_final": trace.t_final(),
        "steps": trace.monitors.len() - 1,
        "max_mass_drift": trace.max_mass_drift(),
        "max_energy_drift": trace.max_energy_drift(),
        "max_grad_ratio": trace
            .monitors
            .iter()
            .map(|m| m.grad_product / profile.threshold_grad)
            .fold(0.0, f64::max),
        "threshold_grad": profile.threshold_grad,
        "duhamel_tail": scatter.as_ref().and_then(|r| r.as_ref().ok()),
    });
    dir.json("summary.json", &summary)?;
    dir.finish()?;
    print_json(&summary)?;

    let Some(expect) = args.expect else {
        return Ok(());
    };
    let ok = match expect {
        Expect::Reach => trace.termination == Termination::ReachedT,
        Expect::Scatter => matches!(scatter, Some(Ok(_))),
        Expect::Blowup => trace.termination == Termination::BlowupDetected,
        Expect::Boundary => trace.termination == Termination::BoundaryContaminated,
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "expected {expect:?}, run ended with {:?}",
            trace.termination
        )))
    }
}

fn load_trace(path: &Path) -> Result<inls_core::dynamics::EvolutionTrace, CliError> {
    read_trace(path).map_err(input_error)
}

fn cmd_virial(args: &VirialArgs, argv: &[String]) -> Result<(), CliError> {
    let trace = load_trace(&args.trace)?;
    let vc = virial_consistency(&trace, args.radius)?;
    let mut csv = String::from("t,z,fd_second,identity,remainder\n");
    for i in 0..vc.times.len() {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            vc.times[i], vc.z[i], vc.fd_second[i], vc.identity[i], vc.remainder[i]
        ));
    }
    let out = json!({
        "R": vc.radius,
        "max_residual": vc.max_residual,
        "samples": vc.times.len(),
        "max_abs_identity": vc.identity.iter().fold(0.0f64, |m, x| m.max(x.abs())),
    });
    let mut dir = open_run("virial", argv, args, &args.common)?;
    dir.json("virial.json", &out)?;
    dir.text("virial.csv", &csv)?;
    dir.finish()?;
    print_json(&out)
}

fn cmd_scatter(args: &ScatterArgs, argv: &[String]) -> Result<(), CliError> {
    let trace = load_trace(&args.trace)?;
    let direction = match args.direction {
        Some(DirectionArg::Forward) => Direction::Forward,
        Some(DirectionArg::Backward) => Direction::Backward,
        None if trace.dt < 0.0 => Direction::Backward,
        None => Direction::Forward,
    };
    if !(args.tail_tol.is_finite() && args.tail_tol > 0.0) {
        return Err(CliError::Validation("tail tolerance must be positive".into()));
    }
    let rep = scattering_state(&trace, direction, &ScatterConfig { tail_tol: args.tail_tol })?;
    let mut csv = String::from("t,h1_distance");
    for s in &rep.strichartz {
        csv.push_str(&format!(",strichartz q={} r={}", s.q, s.r));
    }
    csv.push('\n');
    for (i, t) in rep.times.iter().enumerate() {
        csv.push_str(&format!("{:.16e},{:.16e}", t, rep.h1_distance[i]));
        for s in &rep.strichartz {
            csv.push_str(&format!(",{:.16e}", s.partials[i]));
        }
        csv.push('\n');
    }
    let out = json!({
        "direction": rep.direction,
        "phi_h1": rep.phi_h1,
        "duhamel_tail": rep.duhamel_tail,
        "final_h1_distance": rep.h1_distance.last(),
        "panel": rep.strichartz.iter().map(|s| &s.pair).collect::<Vec<_>>(),
        "panel_thetas": default_panel_thetas(&trace.params)?,
        "strichartz_totals": rep.strichartz.iter().map(|s| s.partials.last()).collect::<Vec<_>>(),
    });
    let mut dir = open_run("scatter", argv, args, &args.common)?;
    dir.json("scatter.json", &out)?;
    dir.text("scatter.csv", &csv)?;
    write_field(&dir.path("phi.csv"), &rep.phi).map_err(output_error)?;
    dir.record("phi.csv");
    dir.finish()?;
    print_json(&out)
}

fn parse_list<T>(s: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| parse(x).map_err(CliError::Validation))
        .collect()
}

fn cmd_sweep(args: &SweepArgs, argv: &[String]) -> Result<(), CliError> {
    let bs = parse_list(&args.b, |x| {
        x.parse::<InlsParams>()
            .map(|p| format_rational(p.b()))
            .map_err(|e| e.to_string())
    })?;
    let amplitudes = parse_list(&args.amplitudes, |x| {
        x.parse::<f64>().map_err(|_| format!("amplitude `{x}` is not a number"))
    })?;
    if args.jobs == 0 {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    for dt in [args.dt, args.collapse_dt] {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CliError::Validation("time steps must be positive".into()));
        }
    }
    let config = SweepConfig {
        bs,
        amplitudes,
        width: args.width,
        dispersive: SweepPlan {
            r_max: args.r_max,
            n: args.n,
            t_final: args.t_final,
            dt: args.dt,
            snap_stride: SweepPlan::dispersive().snap_stride,
        },
        collapse: SweepPlan {
            r_max: args.collapse_r_max,
            n: args.collapse_n,
            t_final: args.collapse_t_final,
            dt: args.collapse_dt,
            snap_stride: SweepPlan::collapse().snap_stride,
        },
        ground_state: args.gs.settings(),
        evolve: EvolveConfig::default(),
        jobs: args.jobs,
    };
    let points = run_sweep(&config)?;
    let mut dir = open_run("sweep", argv, args, &args.common)?;
    let csv = sweep_csv(&points);
    dir.text("sweep.csv", &csv)?;
    for (k, p) in points.iter().enumerate() {
        let sub = format!("points/point-{k:04}");
        dir.json(&format!("{sub}/summary.json"), p)?;
        if let Some(trace) = &p.trace {
            let rel = format!("{sub}/monitors.csv");
            inls_core::io::write_monitors(&dir.path(&rel), &trace.monitors).map_err(output_error)?;
            dir.record(&rel);
        }
    }
    dir.finish()?;
    emit(&csv);
    Ok(())
}

//! `hitchin`: command-line front end for the numerical kernels.
//!
//! Every subcommand writes its output file plus `<out>.manifest.json`. Exit
//! codes: 0 success, 1 domain or input error, 2 solver error, 64 usage error.

mod commands;
mod error;
mod output;
mod report;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use error::{CliError, EXIT_USAGE};
use hitchin_core::disksolver::Scheme;
use hitchin_core::gluing::ZeroType;
use hitchin_core::{localmodel, painleve};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(
    name = "hitchin",
    version,
    about = "Large-t limits of SU(1,2) Hitchin equations"
)]
struct Cli {
    /// Worker threads for sweeps (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Painlevé III boundary value problem.
    Painleve(PainleveArgs),
    /// Solve one local model and tabulate its profiles.
    LocalModel(LocalModelArgs),
    /// Tabulate c_λ over a λ range.
    Clambda(ClambdaArgs),
    /// Sample a glued metric and its residual on the transition annulus.
    Glue(GlueArgs),
    /// Maximum glued residual over a list of t with a decay fit.
    ResidualSweep(SweepArgs),
    /// Stability, face polytope and t-compatible weights of a partition.
    Weights(WeightsArgs),
    /// Neumann eigenvalue of the disk well operator over a list of t.
    Eigen(EigenArgs),
    /// Newton or Picard solve of the Hitchin equation on a model disk.
    SolveDisk(SolveDiskArgs),
    /// Decay fits and verdicts for residual and drift tables.
    ConvergenceReport(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
struct PainleveArgs {
    #[arg(long, default_value_t = painleve::DEFAULT_X_MIN)]
    x_min: f64,
    #[arg(long, default_value_t = painleve::DEFAULT_X_MAX)]
    x_max: f64,
    #[arg(long, default_value_t = painleve::DEFAULT_NODES)]
    nodes: usize,
    #[arg(long, default_value_t = painleve::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct LocalModelArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = localmodel::DEFAULT_RHO_MAX)]
    rho_max: f64,
    #[arg(long, default_value_t = localmodel::DEFAULT_NODES)]
    nodes: usize,
    #[arg(long, default_value_t = localmodel::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ClambdaArgs {
    #[arg(long)]
    lambda_min: f64,
    #[arg(long)]
    lambda_max: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = localmodel::DEFAULT_RHO_MAX)]
    rho_max: f64,
    #[arg(long, default_value_t = localmodel::DEFAULT_NODES)]
    nodes: usize,
    #[arg(long, default_value_t = localmodel::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct GlueArgs {
    #[arg(long, value_parser = parse_zero_type)]
    zero_type: ZeroType,
    #[arg(long)]
    t: f64,
    #[arg(long = "R", default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, value_parser = parse_grid, default_value = "256x128")]
    grid: (usize, usize),
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_parser = parse_zero_type)]
    zero_type: ZeroType,
    #[arg(long, value_delimiter = ',', required = true)]
    t_list: Vec<f64>,
    #[arg(long = "R", default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, value_parser = parse_grid, default_value = "256x128")]
    grid: (usize, usize),
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct WeightsArgs {
    #[arg(long)]
    genus: i64,
    #[arg(long)]
    deg_l: i64,
    #[arg(long)]
    dbeta: i64,
    #[arg(long)]
    dgamma: i64,
    /// One or more values of t for the t-compatible weights.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    /// Affine ψ data as JSON; defaults to ψ ≡ 0.
    #[arg(long)]
    psi_file: Option<PathBuf>,
    /// c_λ table as written by `clambda`.
    #[arg(long)]
    clambda_file: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EigenArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    t_list: Vec<f64>,
    #[arg(long = "A", default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 4096)]
    n_radial: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SolveDiskArgs {
    #[arg(long, value_parser = parse_zero_type)]
    zero_type: ZeroType,
    #[arg(long)]
    t: f64,
    #[arg(long = "R", default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, value_parser = parse_grid, default_value = "128x128")]
    grid: (usize, usize),
    #[arg(long, value_parser = parse_scheme, default_value = "newton")]
    scheme: Scheme,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    /// Residual-sweep or drift CSV; repeatable.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Abscissa for every series: t23, t, invlogt or tpow.
    #[arg(long)]
    tag: Option<report::Abscissa>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_zero_type(s: &str) -> Result<ZeroType, String> {
    s.parse().map_err(|e: hitchin_core::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: hitchin_core::Error| e.to_string())
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid '{s}' is not of the form NRxNA"))?;
    let n = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|e| format!("grid '{s}': {e}"))
    };
    Ok((n(a)?, n(b)?))
}

/// Output path and inputs of a finished command.
struct Outcome {
    out: PathBuf,
    inputs: Vec<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Argument("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Argument(e.to_string()))?;
    }
    let start = Instant::now();
    let seed = cli.seed;
    let (name, params, outcome) = match &cli.command {
        Command::Painleve(a) => ("painleve", to_params(a), commands::painleve(a)?),
        Command::LocalModel(a) => ("local-model", to_params(a), commands::local_model(a)?),
        Command::Clambda(a) => ("clambda", to_params(a), commands::clambda(a)?),
        Command::Glue(a) => ("glue", to_params(a), commands::glue(a)?),
        Command::ResidualSweep(a) => ("residual-sweep", to_params(a), commands::residual_sweep(a)?),
        Command::Weights(a) => ("weights", to_params(a), commands::weights(a, seed)?),
        Command::Eigen(a) => ("eigen", to_params(a), commands::eigen(a)?),
        Command::SolveDisk(a) => ("solve-disk", to_params(a), commands::solve_disk(a)?),
        Command::ConvergenceReport(a) => (
            "convergence-report",
            to_params(a),
            commands::convergence_report(a)?,
        ),
    };
    let mut params = params;
    if let serde_json::Value::Object(map) = &mut params {
        map.insert("jobs".into(), serde_json::json!(cli.jobs));
        map.insert("seed".into(), serde_json::json!(seed));
    }
    let manifest =
        output::RunManifest::new(name, params, &outcome.inputs, start.elapsed().as_secs_f64())?;
    manifest.write_for(&outcome.out)?;
    Ok(())
}

fn to_params<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
}

fn main() -> ExitCode {
    let cmd = Cli::command().mut_subcommands(|s| s.allow_negative_numbers(true));
    let cli = match cmd
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

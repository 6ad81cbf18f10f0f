mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::RunConfig;

/// Berwald and Landsberg checks for Finsler surfaces F = |y1| f(x1, x2, eps y2/y1).
#[derive(Debug, Parser)]
#[command(name = "landsberg", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every pipeline quantity at one tangent vector.
    Eval,
    /// Grid sweep with a Berwald / Landsberg verdict.
    Classify,
    /// Admissibility, closed form and verdict of a family member.
    Family,
    /// Run a verification suite: paper, A, B, C, D, jets or roundtrip.
    Verify { suite: Option<String> },
}

#[derive(Debug, Args)]
struct Options {
    /// Chart function f in x1, x2, u (u = eps y2/y1).
    #[arg(
        short = 'f',
        long = "metric",
        global = true,
        allow_hyphen_values = true
    )]
    metric: Option<String>,
    /// Built-in family instead of an expression.
    #[arg(long, global = true, value_parser = ["phi1", "phi2", "phi-special"])]
    family: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    c1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    c2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    c3: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Position function rho(x1, x2) > 0 (default 1).
    #[arg(long, global = true, allow_hyphen_values = true)]
    rho: Option<String>,
    /// Conformal factor sigma(x1, x2) > 0 (default 1).
    #[arg(long, global = true, allow_hyphen_values = true)]
    sigma: Option<String>,
    /// Base point of the phi quadrature (default 0 when admissible).
    #[arg(long, global = true, allow_hyphen_values = true)]
    t0: Option<f64>,
    /// Use the printed closed form of phi instead of quadrature.
    #[arg(long, global = true)]
    closed_form: bool,
    /// Tangent vector x1,x2,y1,y2.
    #[arg(short = 'p', long, global = true, allow_hyphen_values = true)]
    point: Option<String>,
    /// Grid counts NX,NY,ND.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Position box x1min,x1max,x2min,x2max.
    #[arg(long, global = true, allow_hyphen_values = true)]
    xbox: Option<String>,
    /// Half-angle (radians) of the excluded wedge around y1 = 0.
    #[arg(long, global = true)]
    wedge: Option<f64>,
    /// Sample slopes u = y2/y1 in LO,HI instead of the circle.
    #[arg(long, global = true, allow_hyphen_values = true)]
    slopes: Option<String>,
    #[arg(long, global = true)]
    tol_berwald: Option<f64>,
    #[arg(long, global = true)]
    tol_landsberg: Option<f64>,
    #[arg(long, global = true)]
    tol_degeneracy: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Per-sample residual dump (classify).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Write the full JSON report here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Flat key = value file with the same keys as the long flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
    /// A verification ran and failed; the report is already printed.
    #[error("verification failed")]
    Failed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed => 1,
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 3,
        }
    }
}

fn path_string(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn effective_config(opts: &Options, suite: Option<String>) -> Result<RunConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let num = |v: Option<f64>| v.map(|x| x.to_string());
    let on = |b: bool| b.then(|| "true".to_string());
    cfg.set("metric", opts.metric.clone());
    cfg.set("family", opts.family.clone());
    cfg.set("c1", num(opts.c1));
    cfg.set("c2", num(opts.c2));
    cfg.set("c3", num(opts.c3));
    cfg.set("a", num(opts.a));
    cfg.set("b", num(opts.b));
    cfg.set("rho", opts.rho.clone());
    cfg.set("sigma", opts.sigma.clone());
    cfg.set("t0", num(opts.t0));
    cfg.set("closed-form", on(opts.closed_form));
    cfg.set("point", opts.point.clone());
    cfg.set("grid", opts.grid.clone());
    cfg.set("xbox", opts.xbox.clone());
    cfg.set("wedge", num(opts.wedge));
    cfg.set("slopes", opts.slopes.clone());
    cfg.set("tol-berwald", num(opts.tol_berwald));
    cfg.set("tol-landsberg", num(opts.tol_landsberg));
    cfg.set("tol-degeneracy", num(opts.tol_degeneracy));
    cfg.set("seed", opts.seed.map(|s| s.to_string()));
    cfg.set("json", on(opts.json));
    cfg.set("csv", path_string(&opts.csv));
    cfg.set("report", path_string(&opts.report));
    cfg.set("suite", suite);
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let suite = match &cli.command {
        Command::Verify { suite } => suite.clone(),
        _ => None,
    };
    let cfg = effective_config(&cli.opts, suite)?;
    match cli.command {
        Command::Eval => commands::eval(cfg),
        Command::Classify => commands::classify(cfg),
        Command::Family => commands::family(cfg),
        Command::Verify { .. } => commands::verify(cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Failed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

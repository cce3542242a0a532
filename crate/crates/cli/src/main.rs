//! `torsion-lab <experiment> --config path.json [--out dir] [--quiet]`
//!
//! Exit status: 0 when every check passes, 1 on the first failed check or a
//! runtime failure, 2 on invalid arguments or configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod eval;
mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use torsion_core::fem::SolverKind;
use torsion_core::report::{version_string, SweepReport};

use config::{Config, ConfigError};

const THREADS_ENV: &str = "TORSION_LAB_THREADS";
const DEFAULT_OUT: &str = "torsion-lab-out";

#[derive(Parser)]
#[command(
    name = "torsion-lab",
    version,
    about = "Boundary-mean-zero torsion energy experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
    /// Krylov tolerance (overrides `tol`).
    #[arg(long)]
    tol: Option<f64>,
    /// Largest refinement level any mesh may use (overrides `max_level`).
    #[arg(long)]
    max_level: Option<usize>,
    /// Linear solver (overrides `solver`).
    #[arg(long, value_parser = ["krylov", "direct"])]
    solver: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form energies of regular polygons.
    ClosedForm(RunArgs),
    /// FEM solves on one domain over several levels.
    Solve(RunArgs),
    /// Regular polygons: closed form against FEM with convergence orders.
    PolygonSweep(RunArgs),
    /// Finite-difference second variation of the normalized energy at the disk.
    Stability(RunArgs),
    /// Disk against annulus of equal area.
    AnnulusCompare(RunArgs),
    /// Oscillation of the box minimizer as the box degenerates.
    BoxOsc(RunArgs),
    /// The identity between the mean-zero and plain Robin energies.
    RobinIdentity(RunArgs),
    /// Boxes with small boundary oscillation far from a ball.
    SerrinGap(RunArgs),
    /// Print one closed-form value, e.g. `eval "E_PN N=4"`.
    Eval { expr: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    ClosedForm,
    Solve,
    PolygonSweep,
    Stability,
    AnnulusCompare,
    BoxOsc,
    RobinIdentity,
    SerrinGap,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ClosedForm => "closed-form",
            Experiment::Solve => "solve",
            Experiment::PolygonSweep => "polygon-sweep",
            Experiment::Stability => "stability",
            Experiment::AnnulusCompare => "annulus-compare",
            Experiment::BoxOsc => "box-osc",
            Experiment::RobinIdentity => "robin-identity",
            Experiment::SerrinGap => "serrin-gap",
        }
    }
}

enum Failure {
    Usage(String),
    Run(String),
    Check(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

fn init_threads() -> Result<usize, Failure> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a non-negative integer, got '{s}'")))?,
        Err(_) => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Run(format!("thread pool: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

fn load_config(experiment: Experiment, args: &RunArgs) -> Result<Config, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = Config::parse(experiment, &text)?;
    let common = &mut config.common;
    if args.tol.is_some() {
        common.tol = args.tol;
    }
    if args.max_level.is_some() {
        common.max_level = args.max_level;
    }
    if let Some(s) = &args.solver {
        common.solver = Some(s.parse::<SolverKind>().map_err(|e| Failure::Usage(e.to_string()))?);
    }
    config.validate()?;
    Ok(config)
}

fn describe_row(report: &SweepReport, row: usize) -> String {
    report
        .columns()
        .iter()
        .zip(&report.rows()[row])
        .map(|(c, v)| format!("{c}={}", serde_json::to_string(v).unwrap_or_default()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let threads = init_threads()?;
    let config = load_config(experiment, args)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.common.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&out).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", out.display())))?;

    let (report, extra) = experiments::run(&config, &out, args.quiet).map_err(|e| {
        use torsion_core::Error::*;
        match e {
            Validation(_) | Domain(_) | Precondition(_) | Parse(_) => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    })?;
    let io = |e: torsion_core::Error| Failure::Run(e.to_string());
    let (csv, json) = report.save(&out, experiment.name()).map_err(io)?;

    let mut files: Vec<PathBuf> = vec![csv, json];
    files.extend(extra);
    let manifest = json!({
        "experiment": experiment.name(),
        "version": version_string(),
        "config_path": args.config.display().to_string(),
        "config": config.raw,
        "effective": {
            "solver": config.common.solve_options(),
            "max_level": config.common.max_level(),
            "threads": threads,
        },
        "files": files.iter().map(|p| file_name(p)).collect::<Vec<_>>(),
        "passed": report.passed(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(out.join("run_manifest.json"), text + "\n").map_err(|e| Failure::Run(e.to_string()))?;

    if !args.quiet {
        for c in report.checks() {
            println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
        println!("{} rows written to {}", report.rows().len(), out.display());
    }
    if let Some(c) = report.first_failure() {
        let mut msg = format!("check '{}' failed: {}", c.name, c.detail);
        if let Some(row) = c.first_failing_row {
            msg.push_str(&format!("\n  row {row}: {}", describe_row(&report, row)));
        }
        return Err(Failure::Check(msg));
    }
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Eval { expr } => {
            return match eval::evaluate(&expr) {
                Ok((v, tag)) => {
                    println!("{}\t{tag}", eval::format_sig12(v));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
        Command::ClosedForm(a) => (Experiment::ClosedForm, a),
        Command::Solve(a) => (Experiment::Solve, a),
        Command::PolygonSweep(a) => (Experiment::PolygonSweep, a),
        Command::Stability(a) => (Experiment::Stability, a),
        Command::AnnulusCompare(a) => (Experiment::AnnulusCompare, a),
        Command::BoxOsc(a) => (Experiment::BoxOsc, a),
        Command::RobinIdentity(a) => (Experiment::RobinIdentity, a),
        Command::SerrinGap(a) => (Experiment::SerrinGap, a),
    };
    match run(experiment, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}

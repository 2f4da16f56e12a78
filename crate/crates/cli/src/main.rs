//! `blochlab` — config-driven analyses of periodic lattice Schrödinger
//! operators at large coupling: band surfaces, exact perturbation
//! series, velocity sweeps, propagator evolution, light-cone fronts,
//! and the built-in invariant suite.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical or
//! certification failure.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RawConfig;
use output::OutputWriter;

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Numerical(blochlab_core::Error),
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "{m}"),
            AppError::Numerical(e) => write!(f, "{e}"),
        }
    }
}

impl From<blochlab_core::Error> for AppError {
    fn from(e: blochlab_core::Error) -> Self {
        AppError::Numerical(e)
    }
}

impl AppError {
    fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Config(_) => ExitCode::from(2),
            AppError::Numerical(_) => ExitCode::from(3),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "blochlab",
    version,
    about = "Band structure, perturbation series, and transport velocities of periodic lattice Schrödinger operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output].dir from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Band surfaces over the Brillouin torus (CSV).
    Bands(RunArgs),
    /// Exact perturbation series with oracle and low-order checks.
    Perturb(RunArgs),
    /// Velocity functionals at one coupling.
    Velocity(RunArgs),
    /// Coupling sweep with power-law fits.
    Sweep(RunArgs),
    /// Certified finite-box evolution (amplitude CSV).
    Evolve(RunArgs),
    /// Light-cone front scans and the front-velocity exponent.
    Lightcone(RunArgs),
    /// Envelope constants of the exponential propagation bound.
    Lrcheck(RunArgs),
    /// Run the built-in invariant suite on the fixture models.
    Verify {
        /// Optional directory for verify.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run_with_config(
    args: &RunArgs,
    f: impl FnOnce(&RawConfig, &mut OutputWriter) -> Result<(), AppError>,
) -> Result<(), AppError> {
    let started = chrono::Utc::now().to_rfc3339();
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = RawConfig::parse(&text)?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.dir.clone()))
        .ok_or_else(|| {
            AppError::Config("no output directory: pass --out or set [output].dir".into())
        })?;
    let mut writer = OutputWriter::create(dir)?;
    f(&cfg, &mut writer)?;
    writer.finalize(&text, &started)
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Bands(a) => run_with_config(&a, commands::cmd_bands),
        Command::Perturb(a) => run_with_config(&a, commands::cmd_perturb),
        Command::Velocity(a) => run_with_config(&a, commands::cmd_velocity),
        Command::Sweep(a) => run_with_config(&a, commands::cmd_sweep),
        Command::Evolve(a) => run_with_config(&a, commands::cmd_evolve),
        Command::Lightcone(a) => run_with_config(&a, commands::cmd_lightcone),
        Command::Lrcheck(a) => run_with_config(&a, commands::cmd_lrcheck),
        Command::Verify { out } => {
            let passed = match out {
                Some(dir) => {
                    let started = chrono::Utc::now().to_rfc3339();
                    let mut writer = OutputWriter::create(dir)?;
                    let passed = commands::cmd_verify(Some(&mut writer))?;
                    writer.finalize("", &started)?;
                    passed
                }
                None => commands::cmd_verify(None)?,
            };
            if passed {
                Ok(())
            } else {
                Err(AppError::Numerical(blochlab_core::Error::InvariantViolation {
                    n: 0,
                    r: 0,
                    j: 0,
                    detail: "invariant suite failed".into(),
                }))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

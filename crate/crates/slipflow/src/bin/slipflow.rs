//! Command-line entry point: scenario files in, fields and reports out.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver nonconvergence,
//! 4 diagnostic failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use slipflow::config::RunConfig;
use slipflow::driver::{self, RunContext};
use slipflow::Error;

#[derive(Parser)]
#[command(
    name = "slipflow",
    about = "Steady Navier-Stokes with Navier-slip walls in pipe-like domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized starts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Parallel scenario count for flux sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the cross-sectional Poiseuille problem and export the profile.
    Poiseuille,
    /// Solve the nonlinear problem on the strip.
    Solve,
    /// Fit the exponential decay of the deficit in the outlets.
    DecayStudy,
    /// Run the full diagnostics suite against the configuration.
    Verify,
}

fn main() -> ExitCode {
    slipflow::init_deterministic();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::InvalidSpec(_) | Error::Io(_) => 2u8,
                Error::Nonconvergence { .. } => 3,
                Error::Diagnostic { .. } => 4,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("missing --config <path>".into()))?;
    let (config, config_hash) = RunConfig::load(config_path)?;
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| config.output.directory.clone());
    let ctx = RunContext {
        config,
        config_hash,
        out_dir,
        seed: cli.seed,
        jobs: cli.jobs.max(1),
    };
    match cli.command {
        Command::Poiseuille => driver::run_poiseuille(&ctx)?,
        Command::Solve => driver::run_solve(&ctx)?,
        Command::DecayStudy => driver::run_decay_study(&ctx)?,
        Command::Verify => {
            let report = driver::run_verify(&ctx)?;
            print!("{}", report.to_text());
            if !report.all_pass {
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

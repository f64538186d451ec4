//! `hk` — command-line front end for the noisy Hegselmann-Krause laboratory.
//!
//! Subcommands: `sde` (agent simulation), `pde` (mean-field solver),
//! `stability` (dispersion tables, critical curves, classification),
//! `steady-state` (kernel slices, cluster profiles, residual decay),
//! `sweep` (phase diagrams) and `plot` (static SVG rendering).
//!
//! Every run is deterministic given its configuration and seed; all file
//! outputs land under `--out` together with a manifest naming each file and
//! the configuration hash. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

mod cmd_pde;
mod cmd_plot;
mod cmd_sde;
mod cmd_stability;
mod cmd_steady;
mod cmd_sweep;
mod config;
mod outputs;
mod plot;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "hk", version, about = "Noisy Hegselmann-Krause laboratory", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the finite-N agent system and export the trajectory
    Sde(cmd_sde::SdeArgs),
    /// Integrate the mean-field density equation and export snapshots
    Pde(cmd_pde::PdeArgs),
    /// Dispersion tables, critical curves, mode and phase queries
    Stability(cmd_stability::StabilityArgs),
    /// Steady-state kernel, cluster profiles and fixed-point residuals
    #[command(name = "steady-state")]
    SteadyState(cmd_steady::SteadyArgs),
    /// Phase-diagram scans over the (R, sigma) plane
    Sweep(cmd_sweep::SweepArgs),
    /// Render a CSV produced by the other commands as a static SVG
    Plot(cmd_plot::PlotArgs),
}

/// Failure modes, separated so exit codes stay a stable contract.
pub enum CliError {
    /// Bad flags or configuration: exit code 2.
    Usage(String),
    /// Failure while running or writing: exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sde(args) => cmd_sde::run(args),
        Command::Pde(args) => cmd_pde::run(args),
        Command::Stability(args) => cmd_stability::run(args),
        Command::SteadyState(args) => cmd_steady::run(args),
        Command::Sweep(args) => cmd_sweep::run(args),
        Command::Plot(args) => cmd_plot::run(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}

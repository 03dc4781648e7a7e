//! Command-line driver: parse the run configuration, dispatch one of the
//! six commands, and write CSV/JSON (and optional SVG) output.
//!
//! Exit codes: 0 on success (including flagged degeneracies), 2 on
//! configuration or input errors, 3 on numerical failures.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::CommandOutput;
use config::FileConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cohmeter",
    version,
    about = "Simulate and reconstruct two-state superpositions probed through a pulsed three-level coupling"
)]
struct Cli {
    /// JSON configuration file ({state, probe, integrator, command}).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the probe noise seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Concurrent grid points for `sweep`.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Write an SVG chart (`simulate` and `scan` only).
    #[arg(long, global = true, value_name = "PATH")]
    plot: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Propagate the configured state through one pulse pair and emit the
    /// population time series as CSV.
    Simulate,
    /// Run the four-setting fluorescence protocol and emit the records.
    Measure,
    /// Invert a four-record CSV (`theta,beta,signal`) into the density
    /// matrix, its coherent/incoherent split and the state parameters.
    Reconstruct {
        /// Records file; may also come from command.reconstruct.records.
        records: Option<PathBuf>,
    },
    /// Scan the preparation phase and report signals plus contrast.
    Scan,
    /// Search for the polarization setting that nulls the fluorescence.
    Darksearch,
    /// Re-run measure+reconstruct across detunings, envelopes and rms
    /// scalings, and report the parameter spread.
    Sweep,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = FileConfig::load(cli.config.as_deref())?;
    cfg.apply_overrides(cli.seed);

    let plot_supported = matches!(cli.command, Cmd::Simulate | Cmd::Scan);
    if cli.plot.is_some() && !plot_supported {
        return Err(CliError::Config(
            "--plot is only supported for `simulate` and `scan`".into(),
        ));
    }

    let out: CommandOutput = match &cli.command {
        Cmd::Simulate => commands::cmd_simulate(&cfg, cli.plot.is_some())?,
        Cmd::Measure => commands::cmd_measure(&cfg)?,
        Cmd::Reconstruct { records } => commands::cmd_reconstruct(&cfg, records.as_deref())?,
        Cmd::Scan => commands::cmd_scan(&cfg, cli.plot.is_some())?,
        Cmd::Darksearch => commands::cmd_darksearch(&cfg)?,
        Cmd::Sweep => commands::cmd_sweep(&cfg, cli.jobs.unwrap_or(1))?,
    };

    match &cli.output {
        Some(path) => std::fs::write(path, &out.text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", out.text),
    }
    if let (Some(path), Some(svg)) = (&cli.plot, &out.plot) {
        std::fs::write(path, svg)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

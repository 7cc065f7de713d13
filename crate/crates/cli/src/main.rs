mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Parser, Debug)]
#[command(name = "iongate", version, about = "Magnetic-gradient gate design for surface-electrode ion traps")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for output files; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Accepted for interface compatibility; no command draws random numbers.
    #[allow(dead_code)]
    #[arg(long, global = true)]
    seedless: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Hyperfine Zeeman levels over a field grid.
    Levels,
    /// Field-independent point of the qubit transition.
    Clockpoint,
    /// Field map of the electrode layout.
    Fields,
    /// Five-wire electrode design at the configured height.
    Design,
    /// Normal modes of the ion chain.
    Modes,
    /// Analytic gate, drive current and error budget.
    Gate,
    /// Residual-field error budget of the gate.
    Errors,
    /// Numerical evolution of the gate Hamiltonian.
    Evolve,
    /// Run the acceptance criteria and print a pass/fail table.
    Reproduce,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = commands::Output::new(cli.out.clone(), cli.format)?;
    commands::dispatch(cli.command, &cfg, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `qcbtafqmc`: exact diagonalization, tomography, AFQMC, composite energies
//! and basis-set extrapolation driven by one TOML configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qcbtafqmc::cbt::Shots;
use qcbtafqmc::error::ErrorKind;

use config::{Loaded, Overrides};

/// Environment variable capping the worker thread count.
const THREADS_ENV: &str = "QCBTAFQMC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "qcbtafqmc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Shots per tomography stage (`inf` for exact probabilities).
    #[arg(long)]
    shots: Option<Shots>,
    /// Directory for all outputs, overriding the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact ground state of the (active-space) Hamiltonian.
    Exact(Common),
    /// Tomograph a state file into a trial wavefunction, or run a shot sweep.
    Tomograph {
        #[command(flatten)]
        common: Common,
        /// State file, overriding `state_file` in the config.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Composite active-space energy corrected by two AFQMC runs.
    Energy(Common),
    /// A single AFQMC run.
    Afqmc {
        #[command(flatten)]
        common: Common,
        /// Trial file, overriding `trial_file` in the config.
        #[arg(long)]
        trial: Option<PathBuf>,
    },
    /// Basis-set extrapolation of a `species,cardinal,e_ref,e_corr` table.
    Cbs(Common),
}

/// An error with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: String) -> Self {
        Failure { code: 2, message }
    }

    pub fn numerical(message: String) -> Self {
        Failure { code: 3, message }
    }
}

impl From<qcbtafqmc::Error> for Failure {
    fn from(e: qcbtafqmc::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Input => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Capacity => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::input(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::input(format!("cannot configure {n} threads: {e}")))
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let overrides = Overrides {
        seed: common.seed,
        shots: common.shots,
        output_dir: common.output_dir.clone(),
    };
    let loaded = Loaded::load(&common.config, &overrides)?;
    std::fs::create_dir_all(&loaded.output_dir).map_err(|e| {
        Failure::input(format!("cannot create output directory {}: {e}", loaded.output_dir.display()))
    })?;
    Ok(loaded)
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Exact(c) => commands::exact(&load(&c)?),
        Command::Tomograph { common, state } => commands::tomograph(&load(&common)?, state),
        Command::Energy(c) => commands::energy(&load(&c)?),
        Command::Afqmc { common, trial } => commands::afqmc(&load(&common)?, trial),
        Command::Cbs(c) => commands::cbs(&load(&c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! Command-line front end for the ancilla measurement protocol simulator.
//!
//! Subcommands: `sweep`, `trajectory`, `ensemble`, `asymptotic` and
//! `analytic-check`. Outputs are pure functions of the config file and flags.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod schema;

use clap::{Parser, Subcommand};

pub use commands::Report;
pub use config::{CommonArgs, Settings};
pub use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "ancilla-bell",
    version,
    about = "Bell states from repeated ancilla measurements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Trace distance to the asymptotic state over a grid of measurement intervals
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Spacing of the time axis in sweep.csv
        #[arg(long)]
        time_step: Option<f64>,
    },
    /// One selective run with feedback
    Trajectory {
        #[command(flatten)]
        common: CommonArgs,
        /// Seed used directly
        #[arg(long, conflicts_with = "index")]
        seed: Option<u64>,
        /// Reproduce ensemble member k of the master seed
        #[arg(long)]
        index: Option<u64>,
    },
    /// Seeded batch of trajectories
    Ensemble {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Asymptotic states of all eight basis starts
    Asymptotic {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Closed-form oracle table
    AnalyticCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Sweep { common, time_step } => {
            commands::cmd_sweep(&Settings::resolve(common)?, *time_step)
        }
        Command::Trajectory {
            common,
            seed,
            index,
        } => {
            let settings = Settings::resolve(common)?;
            settings.require_schedule()?;
            let seed = commands::trajectory_seed(&settings, *seed, *index);
            commands::cmd_trajectory(&settings, seed)
        }
        Command::Ensemble { common } => {
            let settings = Settings::resolve(common)?;
            settings.require_schedule()?;
            commands::cmd_ensemble(&settings)
        }
        Command::Asymptotic { common } => commands::cmd_asymptotic(&Settings::resolve(common)?),
        Command::AnalyticCheck { common } => {
            commands::cmd_analytic_check(&Settings::resolve(common)?)
        }
    }
}

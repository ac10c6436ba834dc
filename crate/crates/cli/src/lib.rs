//! Batch driver: simulate panels, fit either model, and summarize the draws.
//!
//! Exit codes: 0 success, 1 invalid configuration or input, 2 I/O failure,
//! 3 numerical abort or incomplete draw store.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "fssm", version, about = "Dynamic Lorenz curves with functional state-space models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a panel from the three-beta scenario.
    Simulate(commands::SimulateArgs),
    /// Run MCMC chains as described by a TOML configuration.
    Fit(commands::FitArgs),
    /// Parameter summaries, predictive loss and, given the truth, interval scores.
    Summarize(commands::SummarizeArgs),
    /// Per-time Gini intervals next to the nonparametric bounds.
    Gini(commands::GiniArgs),
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a).map(|_| ()),
        Command::Summarize(a) => commands::summarize(a),
        Command::Gini(a) => commands::gini(a),
    }
}

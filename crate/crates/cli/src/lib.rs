//! Command-line front end: CSV ingestion, JSON and CSV reports, and the
//! `decompose`, `forecast`, `simulate` and `benchmark` commands.

pub mod args;
pub mod commands;
pub mod csvio;
pub mod error;

use std::io::Write;

pub use args::Cli;
pub use error::{CliError, CliResult};

use args::Command;

/// Runs one parsed invocation, writing its primary output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Decompose(a) => commands::cmd_decompose(a, out).map(drop),
        Command::Forecast(a) => commands::cmd_forecast(a, out).map(drop),
        Command::Simulate(a) => commands::cmd_simulate(a, out).map(drop),
        Command::Benchmark(a) => commands::cmd_benchmark(a, out).map(drop),
    }
}

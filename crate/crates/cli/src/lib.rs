//! Command-line front end: simulation, fitting, evaluation and reports.

pub mod args;
pub mod commands;
pub mod error;
pub mod format;
pub mod manifest;

use args::Command;
use error::{CliError, CliResult};

/// Caps rayon's worker pool from `JUMPMEANS_THREADS` (0 or unset = one
/// worker per core).
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("JUMPMEANS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("JUMPMEANS_THREADS must be a count, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Report(a) => commands::report(a),
    }
}

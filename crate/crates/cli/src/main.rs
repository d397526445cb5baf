//! `flect` — command-line surface of the inflection toolkit.
//!
//! Subcommands: `ingest` (corpus stats), `augment` (emit augmented TSV),
//! `induce` (write templates), `train` (run the configured steps),
//! `finetune` (run later steps from an existing run), `predict` (inflect
//! one lemma), `evaluate` (score a dev file), `ablate` (exclusion
//! matrix), `search` (random hyperparameter search).
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

mod commands;

use std::process::ExitCode;

use clap::Parser;

use commands::{Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

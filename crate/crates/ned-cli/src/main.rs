//! `ned` — batch workflows over embedding files.
//!
//! Exit codes: 0 success, 2 input validation, 3 tuning precondition,
//! 4 label-space mismatch, 1 unexpected internal error.

use clap::Parser;
use std::process::ExitCode;

mod args;
mod commands;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            if let Some(hint) = &failure.hint {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(failure.code.clamp(0, 255) as u8)
        }
    }
}

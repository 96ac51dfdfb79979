//! `oscillab`: command-line front end of the toolkit.
//!
//! Exit status 0 when every asserted check passes, 1 when one fails, 2 on
//! input, output or argument errors.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("oscillab: {e}");
            ExitCode::from(2)
        }
    }
}

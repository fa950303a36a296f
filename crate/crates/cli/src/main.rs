//! `rpq`: generate features, train K-means/PQ/RPQ models, encode corpora,
//! post-process token streams and run the theory checks.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O or format error,
//! 64 usage error.

mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use commands::{Cli, Failure};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => commands::EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("rpq: {error:#}");
            ExitCode::from(code)
        }
    }
}

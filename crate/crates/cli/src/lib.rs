//! Command-line front end: dataset conversion, localization runs,
//! evaluation and synthetic data generation.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command};
pub use config::RunConfig;
pub use error::{CliError, Result};

/// Runs one subcommand and returns its printed output.
pub fn dispatch(cmd: &Command) -> Result<String> {
    match cmd {
        Command::Convert(a) => commands::convert(a),
        Command::Localize { config } => commands::localize(config),
        Command::Eval(a) => commands::eval(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Similarity(a) => commands::similarity(a),
        Command::Icp(a) => commands::icp(a),
    }
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(&cli.command) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

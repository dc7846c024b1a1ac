//! `penlevel` command-line interface. Every subcommand wraps one library
//! entry point; JSON results go to stdout and diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

/// Collapses a clap error to a single diagnostic line.
fn one_line(err: &clap::Error) -> String {
    let text = err.render().to_string();
    let body: Vec<&str> = text
        .lines()
        .take_while(|l| !l.trim().is_empty())
        .map(str::trim)
        .collect();
    body.join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = err.print();
                    ExitCode::SUCCESS
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = err.print();
                    ExitCode::from(2)
                }
                _ => {
                    eprintln!("{}", one_line(&err));
                    ExitCode::from(2)
                }
            };
        }
    };

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: could not start thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let outcome = match &cli.command {
        Command::Estimate(a) => commands::estimate(a).map(|()| true),
        Command::Fit(a) => commands::fit_cmd(a),
        Command::Cv(a) => commands::cv_cmd(a).map(|()| true),
        Command::Simulate(a) => commands::simulate(a).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
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

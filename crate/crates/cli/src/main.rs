use std::process::ExitCode;

use clap::Parser;
use wclt_cli::{configure_threads, emit, execute, Cli, CliError};

fn run() -> Result<(), CliError> {
    configure_threads(std::env::var("WCLT_THREADS").ok().as_deref())?;
    let cli = Cli::parse();
    let outcome = execute(&cli.command)?;
    emit(&outcome.artifacts)?;
    match outcome.failure {
        Some(failed) => Err(CliError::ChecksFailed(failed)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wclt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

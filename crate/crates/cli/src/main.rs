use std::process::ExitCode;

use clap::Parser;
use sqlforecast_cli::args::Cli;

fn main() -> ExitCode {
    match sqlforecast_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

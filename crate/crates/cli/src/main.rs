use std::process::ExitCode;

use clap::Parser;
use eigenkit_cli::{run, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(outcome) => {
            for w in outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

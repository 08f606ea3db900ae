#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

/// Exit code 1 for analysis-level failures, 2 for usage and IO problems.
#[derive(Debug)]
pub enum Failure {
    Analysis(String),
    Usage(String),
}

impl From<pfc_core::Error> for Failure {
    fn from(e: pfc_core::Error) -> Self {
        use pfc_core::Error as E;
        match e {
            E::InvalidTimeStep { .. } | E::InvalidArgument(_) | E::WrongLength { .. } | E::Dimension(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Analysis(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Analysis(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

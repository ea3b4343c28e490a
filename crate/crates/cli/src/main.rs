//! `linalign`: generate with linear alignment, verify the closed-form update,
//! evaluate on the personal-preference benchmark.
//!
//! Exit status: 0 success, 1 failed check, 2 configuration error,
//! 3 backend error.

mod args;
mod backend;
mod eval;
mod exit;
mod generate;
mod manifest;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::exit::{CmdResult, Failure};
use crate::manifest::RunManifest;

fn dispatch(cli: Cli, argv: &[String]) -> CmdResult {
    match cli.command {
        Command::Generate(a) => generate::run(&a, argv),
        Command::Verify(a) => verify::run(&a, argv),
        Command::Eval(a) => eval::run(&a, argv),
        Command::Replay(a) => {
            let recorded = RunManifest::read(&a.manifest)?;
            let full = std::iter::once("linalign".to_string()).chain(recorded.args.iter().cloned());
            let cli = Cli::try_parse_from(full).map_err(|e| Failure::Config(format!("manifest arguments: {e}")))?;
            if matches!(cli.command, Command::Replay(_)) {
                return Err(Failure::Config("a manifest cannot replay another replay".into()));
            }
            dispatch(cli, &recorded.args)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("linalign: {failure}");
            failure.exit_code()
        }
    }
}

//! `ramol`: retrieval-augmented online learning experiments.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure (non-finite values detected).

mod args;
mod commands;
mod manifest;
mod source;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use ramol::Error;

use args::{Cli, Command};

fn dispatch(cli: Cli) -> ramol::Result<()> {
    match cli.command {
        Command::Run(a) => commands::run::cmd_run(a),
        Command::Ablate(a) => commands::ablate::cmd_ablate(a),
        Command::Bench(a) => commands::bench::cmd_bench(a),
        Command::Gen(a) => commands::gen::cmd_gen(a),
        Command::Tune(a) => commands::tune::cmd_tune(a),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::DimMismatch { .. } => 1,
        Error::Io(_)
        | Error::MalformedRow { .. }
        | Error::Data(_)
        | Error::SpecFile(_)
        | Error::LabelOutOfRange { .. } => 2,
        Error::NonFinite(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

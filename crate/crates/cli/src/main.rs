//! `latticepose`: generate, fit and evaluate lattice-deformed pose data.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 runtime or numerical failure.

mod commands;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use latticepose::Error;

use commands::{DeformArgs, EvalArgs, FitArgs, GenArgs, PnpArgs};

#[derive(Debug, Parser)]
#[command(name = "latticepose", version = settings::version_line(), about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Deform an OBJ mesh with 24 lattice corner offsets.
    Deform(DeformArgs),
    /// Generate a synthetic annotation dataset (JSONL).
    Gen(GenArgs),
    /// Recover pose and deformation for every sample of a dataset.
    Fit(FitArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Solve PnP for 3D-2D correspondences.
    Pnp(PnpArgs),
}

/// Failure of a subcommand with its exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Unplaceable { .. } | Error::NoConvergence { .. } | Error::BehindCamera { .. } => 3,
        _ => 2,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Deform(a) => commands::deform(a),
        Command::Gen(a) => commands::generate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Eval(a) => commands::eval(a),
        Command::Pnp(a) => commands::pnp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

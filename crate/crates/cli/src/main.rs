//! Command-line harness: dataset building, candidate generation, metric
//! evaluation, error analysis, and the few-shot sweep.

mod commands;
mod report;

use clap::{Parser, Subcommand};

/// Exit codes: 0 success, 1 internal error, 2 input error.
#[derive(Debug)]
pub enum AppError {
    Input(String),
    Internal(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Input(_) => 2,
            AppError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Input(m) | AppError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Internal(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "peepeval",
    version,
    about = "Peephole-optimization evaluation harness for AArch64 basic blocks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset from paired .s listings or the synthetic generator.
    Extract(commands::extract::ExtractArgs),
    /// Run a candidate optimizer over every dataset pair.
    Optimize(commands::optimize::OptimizeArgs),
    /// Score candidates against references with the four metrics.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Classify failing candidates into the four error categories.
    Errors(commands::errors::ErrorsArgs),
    /// Measure EMR/BLEU as the number of prompt shots varies.
    ShotsSweep(commands::sweep::SweepArgs),
    /// Optimize a single block with the reference engine.
    Peephole(commands::peephole::PeepholeArgs),
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(args) => commands::extract::run(args),
        Command::Optimize(args) => commands::optimize::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Errors(args) => commands::errors::run(args),
        Command::ShotsSweep(args) => commands::sweep::run(args),
        Command::Peephole(args) => commands::peephole::run(args),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(e.code())
        }
    }
}

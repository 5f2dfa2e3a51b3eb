//! `dexp` — distortion exponents of layered joint source-channel coding
//! over MIMO block-fading channels: closed forms, Monte Carlo estimates,
//! and finite-SNR allocation search.

mod commands;
mod output;
mod scenario;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{ExponentArgs, OptimizeArgs, SimulateArgs, SweepArgs};

#[derive(Parser)]
#[command(
    name = "dexp",
    version,
    about = "Distortion exponents of layered source-channel coding over block-fading MIMO channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form distortion exponent of one scheme at one bandwidth ratio
    Exponent(ExponentArgs),
    /// Exponent table over a bandwidth-ratio grid and several schemes
    Sweep(SweepArgs),
    /// Seeded Monte Carlo estimate of expected distortion over an SNR grid
    Simulate(SimulateArgs),
    /// Exhaustive finite-SNR search for the best layer allocation
    Optimize(OptimizeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Exponent(args) => commands::cmd_exponent(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Optimize(args) => commands::cmd_optimize(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {}", error.message());
            ExitCode::from(error.code())
        }
    }
}

//! `absorber`: optimal pulses, simulations, sweeps and figure data for a
//! resonant absorber.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod input;
mod output;

use clap::{Parser, Subcommand};

use config::{Opts, RunConfig};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "absorber", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit the optimal input pulse and its normalisation.
    OptimalPulse,
    /// Propagate an input through the medium and report all metrics.
    Simulate,
    /// One metrics row per optical depth.
    Sweep,
    /// Data behind a figure: fig2 (input/output pulses) or fig3 (excitation profiles).
    Figure { name: String },
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cli.opts)?;
    log::debug!("effective config: {cfg:?}");
    match &cli.command {
        Command::OptimalPulse => commands::optimal_pulse(&cfg),
        Command::Simulate => commands::simulate_cmd(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Figure { name } => commands::figure(name, &cfg),
    }
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

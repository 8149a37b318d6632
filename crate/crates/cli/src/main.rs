//! `nonlocal`: command-line front end for the box, signaling, ABL and
//! jamming experiments.
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid physical object
//! (signalling table, non-unitary operator, ...), 4 undefined conditional
//! probability (impossible post-selection).

mod commands;
mod error;
mod output;
mod parse;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{abl, chsh, jam, signal, sweep};

#[derive(Parser, Debug)]
#[command(
    name = "nonlocal",
    version,
    about = "Nonlocal boxes, block signaling, ABL probabilities and GHZ jamming"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    Chsh(chsh::ChshArgs),
    Signal(signal::SignalArgs),
    Abl(abl::AblArgs),
    Jam(jam::JamArgs),
    Sweep(sweep::SweepArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Chsh(a) => chsh::run(a),
        Command::Signal(a) => signal::run(a),
        Command::Abl(a) => abl::run(a),
        Command::Jam(a) => jam::run(a),
        Command::Sweep(a) => sweep::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

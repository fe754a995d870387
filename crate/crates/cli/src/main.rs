//! `vibrobench`: headless access to rendering, export, playback, the ranking
//! experiment, aggregation and the control service.
//!
//! Exit codes: 0 success, 1 domain error (printed as a structured
//! `{code, path, message}` line on stderr), 2 usage error.

mod args;
mod commands;
mod error;
mod experiment;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{BatteryCommand, Cli, Command, ExperimentCommand};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(args) => commands::render(args),
        Command::Battery {
            command: BatteryCommand::Export(args),
        } => commands::export_battery(args),
        Command::Devices(args) => commands::devices(args),
        Command::Play(args) => commands::play(args),
        Command::Experiment {
            command: ExperimentCommand::Run(args),
        } => experiment::run(args),
        Command::Aggregate(args) => commands::aggregate(args),
        Command::Serve(args) => commands::serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.to_json());
            ExitCode::from(1)
        }
    }
}

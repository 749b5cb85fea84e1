//! `thermpeps`: thermal states of the 2D transverse-field Ising model.

mod commands;
mod config;
mod error;
mod run;

use std::process::ExitCode;

use clap::Parser;

use commands::Command;

#[derive(Parser)]
#[command(
    name = "thermpeps",
    version,
    about = "Thermal states of the 2D transverse-field Ising model via purified PEPS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(cli.command.log_level())
        .format_timestamp_secs()
        .init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("thermpeps: {e}");
            e.exit_code()
        }
    }
}

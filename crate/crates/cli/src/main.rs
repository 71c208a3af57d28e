mod args;
mod cache;
mod commands;
mod output;

use clap::Parser;

use args::{Cli, Command};
use output::{emit, CliError};

fn run(cli: &Cli) -> Result<i32, CliError> {
    let outcome = match &cli.command {
        Command::Constants(a) => commands::run_constants(a)?,
        Command::Sweep(a) => commands::run_sweep(a)?,
        Command::Simulate(a) => commands::run_simulate(a)?,
        Command::Truncation(a) => commands::run_truncation(a)?,
        Command::Moments(a) => commands::run_moments(a)?,
    };
    emit(&outcome, cli.out.as_deref(), cli.json)?;
    Ok(outcome.exit_code)
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    };
    std::process::exit(code);
}

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod config;
mod elicit;
mod error;
mod experiment;
mod fit;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;
use error::CliResult;

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Elicit(args) => {
            let c = config::elicit(&args)?;
            elicit::run(&c, &RunConfig::Elicit(c.clone()))
        }
        Command::Fit(args) => {
            let c = config::fit(&args)?;
            fit::run(&c, &RunConfig::Fit(c.clone()))
        }
        Command::Experiment(args) => {
            let c = config::experiment(&args)?;
            experiment::run(&c, &RunConfig::Experiment(c.clone()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

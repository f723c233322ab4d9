mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command, ExperimentCommand};
use config::{FileConfig, RunConfig};
use error::CliError;

fn version() -> String {
    format!(
        "{} (mapping format {})",
        env!("CARGO_PKG_VERSION"),
        unipos::tagset::MAPPING_FORMAT_VERSION
    )
}

fn parse() -> Result<Cli, clap::Error> {
    let mut matches = Cli::command().version(version()).try_get_matches()?;
    Cli::from_arg_matches_mut(&mut matches)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let config = RunConfig::merge(file, cli.jobs, cli.map_dir)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;

    match &cli.command {
        Command::Map(a) => commands::map(a, &config),
        Command::Validate(a) => commands::validate(a, &config),
        Command::Train(a) => commands::train(a, &config),
        Command::Tag(a) => commands::tag(a),
        Command::Eval(a) => commands::eval(a, &config),
        Command::Experiment(ExperimentCommand::Matrix(a)) => commands::matrix(a, &config),
        Command::Experiment(ExperimentCommand::Variance(a)) => commands::variance(a),
        Command::Induce(a) => commands::induce(a, &config),
    }
}

fn main() -> ExitCode {
    let cli = match parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("unipos: {e}");
            e.exit_code()
        }
    }
}

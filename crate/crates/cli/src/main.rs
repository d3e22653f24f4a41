//! `mlevy`: configuration-driven experiments for Lévy processes on manifolds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Experiment;
use crate::output::Output;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Invariance(String),
    Runtime(anyhow::Error),
}

impl CliError {
    /// Maps a library error raised while running an experiment.
    pub fn from_core(e: manifold_levy::Error) -> Self {
        use manifold_levy::Error as E;
        match e {
            E::Invariance(m) => CliError::Invariance(m),
            E::UnknownManifold(_) | E::Parse(_) | E::InvalidParameter(_) | E::UnsupportedMeasure(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Runtime(other.into()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Invariance(_) => 3,
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Invariance(m) => write!(f, "invariance error: {m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "mlevy", version, about = "Simulate and verify Lévy processes on manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write paths as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and write the X/U/Y layers.
    Simulate(RunArgs),
    /// Loop transports and the declared holonomy classification.
    Holonomy(RunArgs),
    /// Lift and anti-development of simulated paths against their driver.
    Roundtrip(RunArgs),
    /// Weak error of the generator at small times.
    GeneratorTest(RunArgs),
    /// Invariance of the triplet under group elements.
    Invariance(RunArgs),
}

type Handler = fn(&Experiment, &Output) -> Result<bool, CliError>;

fn run(cmd: Command) -> Result<bool, CliError> {
    let (args, f): (RunArgs, Handler) = match cmd {
        Command::Simulate(a) => (a, commands::simulate::run),
        Command::Holonomy(a) => (a, commands::holonomy::run),
        Command::Roundtrip(a) => (a, commands::roundtrip::run),
        Command::GeneratorTest(a) => (a, commands::generator_test::run),
        Command::Invariance(a) => (a, commands::invariance::run),
    };
    let exp = Experiment::load(&args.config, args.seed)?;
    let out = Output::create(&args.out, args.csv, exp.config.outputs.paths)?;
    f(&exp, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("mlevy: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

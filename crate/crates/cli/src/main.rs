//! `treatclf`: ingest → describe → run → explain → report on a clinical table.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Overrides};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "treatclf", version, about = "Treatment classification experiments on clinical tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Raw clinical table (CSV).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Bootstrap iterations.
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Cross-validation folds.
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Comma-separated model families.
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, label, impute, recode and encode the input table.
    Ingest(Common),
    /// Compare features between treatment groups.
    Describe(Common),
    /// Bootstrap cross-validation of every configured model.
    Run(Common),
    /// Shapley attributions for the best or a named model.
    Explain(Common),
    /// Summary table and figures from a finished run.
    Report(Common),
    /// Write a synthetic cohort to `<out>/synthetic.csv`.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Labels independent of the features.
        #[arg(long)]
        null: bool,
    },
}

fn resolve(c: &Common) -> Result<ExperimentConfig, CliError> {
    let overrides = Overrides {
        input: c.input.clone(),
        out: c.out.clone(),
        seed: c.seed,
        iterations: c.iterations,
        folds: c.folds,
        models: c.models.clone(),
        jobs: c.jobs,
    };
    ExperimentConfig::load(c.config.as_deref())?.apply(&overrides)
}

fn dispatch(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Ingest(c) => commands::cmd_ingest(&resolve(c)?),
        Command::Describe(c) => commands::cmd_describe(&resolve(c)?),
        Command::Run(c) => commands::cmd_run(&resolve(c)?),
        Command::Explain(c) => commands::cmd_explain(&resolve(c)?),
        Command::Report(c) => commands::cmd_report(&resolve(c)?),
        Command::Synth { common, null } => commands::cmd_synth(&resolve(common)?, *null),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

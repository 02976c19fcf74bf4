//! Command-line harness: dataset generation, classification, evaluation,
//! invariant checking, and report rendering.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable holding the default dataset root.
pub const DATASET_ROOT_ENV: &str = "TOPOBENCH_DATASET_ROOT";

// Exit codes: 0 success, 1 usage/validation, 2 data error, 3 invariant
// violation.
pub enum CliError {
    Usage(String),
    Data(String),
    Invariant(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Invariant(m) => m,
        }
    }
}

impl From<topobench_core::Error> for CliError {
    fn from(e: topobench_core::Error) -> Self {
        use topobench_core::Error as E;
        match e {
            E::Io(_) | E::Json(_) | E::Format(_) | E::ManifestInvalid(_) => {
                CliError::Data(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "topobench",
    about = "Benchmark toolkit for topological mapping and localization under perceptual aliasing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset from a suite spec file.
    Generate(commands::generate::GenerateArgs),
    /// Classify every case of a dataset and rewrite its manifest labels.
    Classify(commands::classify::ClassifyArgs),
    /// Run localizer baselines over a dataset: sweeps, operating points,
    /// results table, and per-map consistency reports.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Grow a map over a synthetic world with ground-truth decisions and
    /// check edge precision and recall after every step.
    Invariants(commands::invariants::InvariantsArgs),
    /// Render results tables from an evaluation report or the published
    /// reference constants.
    Report(commands::report::ReportArgs),
}

/// Shared dataset argument with the environment-variable fallback.
#[derive(Args)]
pub struct DatasetArg {
    /// Dataset directory; defaults to $TOPOBENCH_DATASET_ROOT.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

impl DatasetArg {
    pub fn resolve(&self) -> CliResult<PathBuf> {
        match &self.dataset {
            Some(p) => Ok(p.clone()),
            None => std::env::var_os(DATASET_ROOT_ENV)
                .map(PathBuf::from)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "no --dataset given and {DATASET_ROOT_ENV} is not set"
                    ))
                }),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit 0.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Generate(args) => commands::generate::run(args),
        Command::Classify(args) => commands::classify::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Invariants(args) => commands::invariants::run(args),
        Command::Report(args) => commands::report::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

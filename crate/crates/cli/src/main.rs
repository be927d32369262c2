mod commands;
mod input;
mod report;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::commands::{AssignArgs, BinarizeArgs, EvalArgs, LearnArgs, OracleArgs, TopicsArgs, ValidateArgs, VocabArgs};

#[derive(Debug, Parser)]
#[command(name = "hlta", version, about = "Hierarchical latent tree analysis for topic detection")]
struct Cli {
    /// Worker threads (defaults to one per core). Output does not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select a vocabulary by average TF-IDF.
    Vocab(VocabArgs),
    /// Write a corpus as a binary dataset file.
    Binarize(BinarizeArgs),
    /// Learn a hierarchical latent tree model.
    Learn(LearnArgs),
    /// Print the topic hierarchy of a model.
    Topics(TopicsArgs),
    /// Topic coherence and held-out likelihood of a model.
    Eval(EvalArgs),
    /// Hard-assign documents to latent states.
    Assign(AssignArgs),
    /// Check a model file.
    Validate(ValidateArgs),
    /// Enumerate the full joint distribution of a small model.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] hlta::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }
}

/// Write `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.into())
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::Vocab(args) => commands::vocab(args),
        Command::Binarize(args) => commands::binarize(args),
        Command::Learn(args) => commands::learn(args),
        Command::Topics(args) => commands::topics(args),
        Command::Eval(args) => commands::eval(args),
        Command::Assign(args) => commands::assign(args),
        Command::Validate(args) => commands::validate(args),
        Command::Oracle(args) => commands::oracle(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}

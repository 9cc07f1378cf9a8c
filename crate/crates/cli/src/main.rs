//! `transproj`: project NER-annotated corpora into another language.

mod config;
mod stats_cmd;
mod translate;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::TranslateArgs;

#[derive(Debug, Parser)]
#[command(
    name = "transproj",
    version,
    about = "Translate NER corpora with placeholder-masked entities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project annotated splits into the target language
    Translate(Box<TranslateArgs>),
    /// Print sentence counts and average lengths, with deltas against the first corpus
    Stats {
        /// Corpus directories (holding train/dev/test .conll files) or single files
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
        /// Display name per corpus, in order (defaults to the path's file name)
        #[arg(long = "name")]
        names: Vec<String>,
        /// Also write the statistics as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check that files are well-formed IOB2
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

/// A failure mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Parse(String),
    Aborted(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Aborted(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Parse(m) | CliError::Aborted(m) | CliError::Io(m) => m,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Translate(args) => translate::run(*args).map(|()| 0),
        Command::Stats { corpora, names, json } => stats_cmd::run(&corpora, &names, json.as_deref()).map(|()| 0),
        Command::Validate { files } => validate::run(&files),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

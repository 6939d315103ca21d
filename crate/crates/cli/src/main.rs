//! `lexrag`: build retrieval indexes, translate, and score translations.
//!
//! Exit codes: 0 success, 1 I/O or format, 2 backend, 64 usage, 65 data
//! validation.

mod commands;
mod config;
mod exit;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{evaluate, index, report, translate};
use config::AppConfig;
use exit::{CliResult, Exit};

#[derive(Debug, Parser)]
#[command(name = "lexrag", version, about = "Keyword-first retrieval-augmented translation")]
struct Cli {
    /// Config file (default ./lexrag.json if present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More logging (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Manage index directories.
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
    /// Translate a sentence or a batch file.
    Translate(translate::TranslateArgs),
    /// Score hypotheses against references.
    Evaluate(evaluate::EvaluateArgs),
    /// Normalize expert fluency/grammaticality/faithfulness ratings.
    Humaneval(evaluate::HumanevalArgs),
    /// Merge metric reports into one table.
    Report(report::ReportArgs),
}

#[derive(Debug, Subcommand)]
enum IndexCommand {
    /// Build keyword and vector indexes from a dictionary and/or examples.
    Build(index::BuildArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let config = AppConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Index {
            command: IndexCommand::Build(args),
        } => index::build(args, &config),
        Command::Translate(args) => translate::run(args, &config),
        Command::Evaluate(args) => evaluate::evaluate(args, &config),
        Command::Humaneval(args) => evaluate::humaneval(args, &config),
        Command::Report(args) => report::run(args, &config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Exit::Usage as u8),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}

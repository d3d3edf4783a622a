//! `hintscan` — batch auditing of HTTP Client Hint usage.
//!
//! Subcommands cover the full pipeline: `discover` login pages, `scan`
//! targets into crawl records, `ingest` foreign response archives, `analyze`
//! records into a report directory, `emulate` a browser build interactively,
//! and `report` to re-render a stored analysis. Stages communicate only
//! through files, so runs can be resumed, audited, and partially re-run.

mod commands;
mod config;
mod output;
mod resources;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;

/// Failure modes with distinct exit codes: usage problems (bad flags,
/// missing inputs, unknown names) exit 2 before any output is written;
/// runtime failures (I/O mid-run, refused datasets) exit 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    /// Mid-run failures are runtime errors even when the underlying cause
    /// looks like a bad path: partial output may already exist.
    pub fn runtime(e: impl std::fmt::Display) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Aligned human-readable columns.
    Table,
    /// Comma-separated values with a header row.
    Csv,
    /// One JSON object per line.
    Jsonl,
}

#[derive(Debug, Parser)]
#[command(
    name = "hintscan",
    version,
    about = "Audit HTTP Client Hint usage: discover login pages, crawl them \
             with cache-isolated sessions, classify the requested hints, and \
             reproduce the statistical analyses as machine-readable reports.",
    after_help = "Every config key can also be set via the HINTSCAN_ \
                  environment prefix (HINTSCAN_SEED, HINTSCAN_ALPHA, ...). \
                  Flags override environment variables, which override the \
                  config file."
)]
struct Cli {
    /// TOML config file with defaults for every subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output format for printed tables.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Seed for randomized orderings; identical seeds reproduce runs.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Discover(commands::discover::DiscoverArgs),
    Scan(commands::scan::ScanArgs),
    Ingest(commands::ingest::IngestArgs),
    Analyze(commands::analyze::AnalyzeArgs),
    Emulate(commands::emulate::EmulateArgs),
    Report(commands::report::ReportArgs),
}

/// Context shared by every subcommand: layered config plus the global flags.
pub struct Ctx {
    pub config: RunConfig,
    pub format: OutputFormat,
    pub seed: u64,
}

impl Ctx {
    pub fn timeout(&self) -> std::time::Duration {
        std::time::Duration::from_secs(self.config.timeout_secs.unwrap_or(30))
    }

    pub fn redirect_cap(&self) -> usize {
        self.config.redirect_cap.unwrap_or(10)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let format = cli.format.unwrap_or_else(|| {
        match config.format.as_deref() {
            Some("csv") => OutputFormat::Csv,
            Some("jsonl") => OutputFormat::Jsonl,
            _ => OutputFormat::Table,
        }
    });
    if let Some(name) = config.format.as_deref() {
        if !["table", "csv", "jsonl"].contains(&name) {
            return Err(CliError::Usage(format!(
                "unknown format `{name}`; expected table, csv, or jsonl"
            )));
        }
    }
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let ctx = Ctx {
        config,
        format,
        seed,
    };
    match cli.command {
        Command::Discover(args) => commands::discover::run(&ctx, args),
        Command::Scan(args) => commands::scan::run(&ctx, args),
        Command::Ingest(args) => commands::ingest::run(&ctx, args),
        Command::Analyze(args) => commands::analyze::run(&ctx, args),
        Command::Emulate(args) => commands::emulate::run(&ctx, args),
        Command::Report(args) => commands::report::run(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

mod commands;
mod config;
mod events;
mod exit;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conjecture_core::reportkit::ExportFilter;
use tracing_subscriber::EnvFilter;

use crate::exit::Failure;

/// Conjecture generation, checking and proof evaluation for Lean 4.
#[derive(Debug, Parser)]
#[command(name = "conj", version)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a structural summary of a Lean file.
    Parse { path: PathBuf },
    /// Run the generate/check loop on seed files or directories of them.
    Run(RunArgs),
    /// Sample proofs for a dataset and verify them.
    Prove(ProveArgs),
    /// Recompute the report of finished run directories.
    Stats(StatsArgs),
    /// Export the records of run directories as a dataset.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(required = true)]
    pub seeds: Vec<PathBuf>,
    #[arg(long)]
    pub max_iterations: Option<u32>,
    /// Ask for a single conjecture per round.
    #[arg(long)]
    pub no_directive_many: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed for every random choice of the run.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Keep Lean sources and outputs under each seed directory.
    #[arg(long)]
    pub keep_logs: bool,
    /// Continue seed directories that already hold a snapshot.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, hide = true)]
    pub stop_after: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    pub dataset: PathBuf,
    /// Samples per statement.
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Keep the cells already in the output directory.
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, hide = true)]
    pub max_cells: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Seed run directories, or batch directories containing them.
    #[arg(required = true)]
    pub run_dirs: Vec<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FilterArg {
    All,
    Novel,
    Nontrivial,
}

impl From<FilterArg> for ExportFilter {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::All => ExportFilter::All,
            FilterArg::Novel => ExportFilter::NovelOnly,
            FilterArg::Nontrivial => ExportFilter::NontrivialOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(required = true)]
    pub run_dirs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub filter: FilterArg,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_target(false)
        .with_ansi(std::io::stderr().is_terminal())
        .with_env_filter(EnvFilter::new(level))
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let result = match cli.command {
        Command::Parse { path } => commands::parse::run(&path),
        Command::Run(args) => commands::run::run(cli.config.as_deref(), &args),
        Command::Prove(args) => commands::prove::run(cli.config.as_deref(), &args),
        Command::Stats(args) => commands::stats::run(&args),
        Command::Export(args) => commands::export::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code.as_u8())
        }
    }
}

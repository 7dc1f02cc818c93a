//! `credscore` — classify financial social-media forecasts, verify them
//! against market prices, rank advisor credibility, and explain every
//! decision.

mod commands;
mod config;
mod manifest;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use workspace::Workspace;

#[derive(Parser)]
#[command(name = "credscore", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Pipeline configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate inputs and emit a normalized post collection.
    Ingest(CommonArgs),
    /// Induce lexica, cross-validate the hybrid classifier, persist artifacts.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Hyperparameter grid file; runs an exhaustive search before the
        /// final fit.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Hybrid-classify the posts with the trained artifacts.
    Classify(CommonArgs),
    /// Check classified forecasts against price data.
    Verify(CommonArgs),
    /// Compute per-advisor credibility ranks from verification outcomes.
    Rank(CommonArgs),
    /// Correlate credibility ranks with social metrics.
    Correlate(CommonArgs),
    /// Render natural-language explanations for classified posts.
    Explain {
        #[command(flatten)]
        common: CommonArgs,
        /// Print a single post's explanation to stdout instead of writing
        /// the report.
        #[arg(long = "explain-only", value_name = "POST_ID")]
        explain_only: Option<String>,
    },
    /// Bundle the reports in the output directory into one document.
    Report(CommonArgs),
    /// classify + verify + rank + correlate + explain in one run.
    Assess(CommonArgs),
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let open = |common: &CommonArgs| {
        Workspace::open(&common.config, common.seed, common.out.clone())
    };
    match &cli.command {
        Command::Ingest(common) => commands::cmd_ingest(&open(common)?),
        Command::Train { common, grid } => {
            commands::cmd_train(&open(common)?, grid.as_deref())
        }
        Command::Classify(common) => commands::cmd_classify(&open(common)?),
        Command::Verify(common) => commands::cmd_verify(&open(common)?),
        Command::Rank(common) => commands::cmd_rank(&open(common)?),
        Command::Correlate(common) => commands::cmd_correlate(&open(common)?),
        Command::Explain {
            common,
            explain_only,
        } => commands::cmd_explain(&open(common)?, explain_only.as_deref()),
        Command::Report(common) => commands::cmd_report(&open(common)?),
        Command::Assess(common) => commands::cmd_assess(&open(common)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use screener_service::commands;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "screener", version, about = "Conversational PHQ-9 screening service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Chunk, embed and store documents.
    Ingest {
        /// File or directory of .txt / .jsonl documents.
        #[arg(long)]
        source: PathBuf,
        /// Target store: guide, emotional or helpline.
        #[arg(long)]
        store: String,
        /// Service config supplying store_dir and the embedder.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        store_dir: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Analyses of paired self / chatbot scores.
    Stats {
        #[command(subcommand)]
        command: StatsCommand,
    },
    /// Rebuild a session's state from its log file.
    Replay {
        #[arg(long)]
        session: PathBuf,
        /// Session id; defaults to the file stem.
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        instrument: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Agreement between the two administrations.
    Concordance {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Compare a rating across demographic groups.
    Groups {
        #[arg(long)]
        pairs: PathBuf,
        /// q17, q18, q19 or q20.
        #[arg(long)]
        rating: String,
        #[arg(long)]
        by: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// 2x2 tests of a binary endpoint against participant factors.
    Contingency {
        #[arg(long)]
        pairs: PathBuf,
        /// Repeatable; comma-separated lists and `all` are accepted.
        #[arg(long = "factor", required = true)]
        factors: Vec<String>,
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
}

fn run(cli: Cli) -> commands::CmdResult<()> {
    match cli.command {
        Command::Serve { config } => commands::serve(&config),
        Command::Ingest { source, store, config, store_dir, sequential } => {
            let report = commands::ingest(&source, &store, config.as_deref(), store_dir.as_deref(), sequential)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            commands::emit(&report, None)
        }
        Command::Stats { command } => match command {
            StatsCommand::Concordance { pairs, out, sequential } => {
                commands::stats_concordance(&pairs, out.as_deref(), sequential)
            }
            StatsCommand::Groups { pairs, rating, by, out } => commands::stats_groups(&pairs, &rating, &by, out.as_deref()),
            StatsCommand::Contingency { pairs, factors, endpoint, out, sequential } => {
                commands::stats_contingency(&pairs, &factors, &endpoint, out.as_deref(), sequential)
            }
        },
        Command::Replay { session, id, instrument } => {
            commands::emit(&commands::replay(&session, id.as_deref(), instrument.as_deref())?, None)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

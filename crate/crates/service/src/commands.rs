//! Implementations behind the `screener` subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use screener_core::engine::{parse_log, replay as replay_log, SessionState};
use screener_core::exec::Execution;
use screener_core::protocol::Instrument;
use screener_core::retrieval::{ingest as ingest_docs, Chunker, ChunkerConfig, IngestReport, MixedTokenizer};
use screener_stats::{
    concordance_report, contingency_report, groups_report, read_pairs, Endpoint, Factor, Grouping, Rating,
};
use serde::{Deserialize, Serialize};

use crate::app::{build_conversation, build_embedder, load_safety};
use crate::config::{EmbedderConfig, ServiceConfig};
use crate::http::{serve as serve_http, AppState};

pub type CmdResult<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

/// Pretty JSON plus a trailing newline, to `out` or stdout.
pub fn emit(value: &impl Serialize, out: Option<&Path>) -> CmdResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

pub fn stats_concordance(pairs: &Path, out: Option<&Path>, sequential: bool) -> CmdResult<()> {
    let recs = read_pairs(pairs)?;
    emit(&concordance_report(&recs, exec(sequential))?, out)
}

pub fn stats_groups(pairs: &Path, rating: &str, by: &str, out: Option<&Path>) -> CmdResult<()> {
    let recs = read_pairs(pairs)?;
    emit(&groups_report(&recs, rating.parse::<Rating>()?, by.parse::<Grouping>()?), out)
}

/// `factors` may hold comma-separated names or `all`.
pub fn stats_contingency(
    pairs: &Path,
    factors: &[String],
    endpoint: &str,
    out: Option<&Path>,
    sequential: bool,
) -> CmdResult<()> {
    let recs = read_pairs(pairs)?;
    let mut parsed = Vec::new();
    for name in factors.iter().flat_map(|f| f.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        if name == "all" {
            parsed.extend(Factor::ALL);
        } else {
            parsed.push(name.parse::<Factor>()?);
        }
    }
    if parsed.is_empty() {
        return Err("at least one --factor is required".into());
    }
    emit(&contingency_report(&recs, &parsed, endpoint.parse::<Endpoint>()?, exec(sequential))?, out)
}

pub fn ingest(
    source: &Path,
    store: &str,
    config: Option<&Path>,
    store_dir: Option<&Path>,
    sequential: bool,
) -> CmdResult<IngestReport> {
    let cfg = config.map(ServiceConfig::load).transpose()?;
    let dir: PathBuf = match (store_dir, &cfg) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(c)) => c.store_dir.clone(),
        (None, None) => return Err("give --config or --store-dir".into()),
    };
    let embedder = build_embedder(cfg.as_ref().map(|c| &c.embedder).unwrap_or(&EmbedderConfig::default()))?;
    std::fs::create_dir_all(&dir)?;
    let chunker = Chunker::new(ChunkerConfig::default(), Arc::new(MixedTokenizer))?;
    Ok(ingest_docs(source, store, &dir, embedder.as_ref(), &chunker, exec(sequential))?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReplayOutput {
    pub session_id: String,
    pub digest: String,
    /// Bytes of a torn final line that a resume would discard.
    pub torn: bool,
    /// Records after the last acknowledged turn.
    pub unacked: usize,
    pub state: SessionState,
}

/// Rebuilds a session from its log file without modifying it.
pub fn replay(session_file: &Path, id: Option<&str>, instrument: Option<&Path>) -> CmdResult<ReplayOutput> {
    let id = match id {
        Some(id) => id.to_string(),
        None => session_file
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or("session file name is not valid UTF-8")?
            .to_string(),
    };
    let bytes = std::fs::read(session_file)?;
    let contents = parse_log(&id, &bytes)?;
    let instrument = match instrument {
        Some(p) => Instrument::load(p)?,
        None => Instrument::builtin().clone(),
    };
    let r = replay_log(&id, &contents.records, &instrument)?;
    Ok(ReplayOutput { session_id: id, digest: r.state.digest(), torn: contents.torn, unacked: r.unacked, state: r.state })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down; draining in-flight turns");
}

#[cfg(unix)]
fn spawn_reload_on_hangup(state: Arc<AppState>, cfg: ServiceConfig) {
    tokio::spawn(async move {
        let Ok(mut hup) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::hangup()) else {
            return;
        };
        while hup.recv().await.is_some() {
            match load_safety(&cfg) {
                Ok(guard) => {
                    state.reload_safety(guard);
                    tracing::info!("reloaded crisis lexicon and helplines");
                }
                Err(e) => tracing::error!(error = %e, "safety reload failed; keeping the previous data"),
            }
        }
    });
}

fn spawn_idle_sweeper(state: Arc<AppState>, cfg: &ServiceConfig) {
    let max_idle = cfg.idle_timeout();
    let every = (max_idle / 24).clamp(std::time::Duration::from_secs(1), std::time::Duration::from_secs(300));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let s = state.clone();
            if let Ok(closed) = tokio::task::spawn_blocking(move || s.sweep_idle(max_idle)).await {
                if !closed.is_empty() {
                    tracing::info!(count = closed.len(), "closed idle sessions");
                }
            }
        }
    });
}

pub fn serve(config: &Path) -> CmdResult<()> {
    let cfg = ServiceConfig::load(config)?;
    let conv = Arc::new(build_conversation(&cfg)?);
    let state = Arc::new(AppState::new(conv, &cfg.default_lang, &cfg.default_country));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(cfg.bind_addr()?).await?;
        let addr = listener.local_addr()?;
        println!("listening on {addr}");
        std::io::stdout().flush()?;
        tracing::info!(%addr, "serving");
        #[cfg(unix)]
        spawn_reload_on_hangup(state.clone(), cfg.clone());
        spawn_idle_sweeper(state.clone(), &cfg);
        serve_http(listener, state, shutdown_signal()).await?;
        Ok(())
    })
}

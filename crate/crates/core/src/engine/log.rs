use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::machine::{advance, Decisions};
use super::state::{EngineEvent, Phase, Role, SessionState, TurnRecord};
use crate::lang::{Country, Language};
use crate::protocol::Instrument;
use crate::safety::MatchInfo;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("no session log for {0}")]
    NotFound(String),
    #[error("invalid session id {0:?}")]
    InvalidId(String),
    #[error("session log {id} already exists")]
    Exists { id: String },
    #[error("session log {id} corrupt at line {line}: {message}")]
    Integrity { id: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Ids double as file names, so only `[A-Za-z0-9_-]` is allowed.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogContents {
    pub records: Vec<TurnRecord>,
    /// Byte length of the intact prefix; shorter than the file when the
    /// last write was torn.
    pub valid_len: u64,
    pub torn: bool,
}

/// Append-only JSONL log, one `<session_id>.jsonl` per session.
#[derive(Debug, Clone)]
pub struct JsonlSessionLog {
    dir: PathBuf,
}

impl JsonlSessionLog {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(JsonlSessionLog { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, id: &str) -> Result<PathBuf, LogError> {
        if !valid_session_id(id) {
            return Err(LogError::InvalidId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.jsonl")))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).is_ok_and(|p| p.is_file())
    }

    /// Creates the log with its first record.
    pub fn create(&self, id: &str, first: &TurnRecord) -> Result<(), LogError> {
        let path = self.path(id)?;
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::AlreadyExists {
                LogError::Exists { id: id.to_string() }
            } else {
                LogError::Io(e)
            }
        })?;
        write_records(&mut file, std::slice::from_ref(first))?;
        if let Ok(dir) = File::open(&self.dir) {
            let _ = dir.sync_all();
        }
        Ok(())
    }

    /// Appends records in one write and syncs before returning.
    pub fn append(&self, id: &str, records: &[TurnRecord]) -> Result<(), LogError> {
        let path = self.path(id)?;
        if !path.is_file() {
            return Err(LogError::NotFound(id.to_string()));
        }
        let mut file = OpenOptions::new().append(true).open(&path)?;
        write_records(&mut file, records)
    }

    pub fn read(&self, id: &str) -> Result<LogContents, LogError> {
        let path = self.path(id)?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(LogError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        parse_log(id, &bytes)
    }

    /// Cuts the file back to `len` bytes, dropping a torn or unacknowledged tail.
    pub fn truncate(&self, id: &str, len: u64) -> Result<(), LogError> {
        let file = OpenOptions::new().write(true).open(self.path(id)?)?;
        file.set_len(len)?;
        file.sync_all()?;
        Ok(())
    }

    pub fn session_ids(&self) -> io::Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    if valid_session_id(stem) {
                        ids.push(stem.to_string());
                    }
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

fn write_records(file: &mut File, records: &[TurnRecord]) -> Result<(), LogError> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(io::Error::other)?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    file.sync_data()?;
    Ok(())
}

/// Parses a log body. A final line without a newline that does not parse is
/// a torn write and is reported rather than rejected.
pub fn parse_log(id: &str, bytes: &[u8]) -> Result<LogContents, LogError> {
    let mut records: Vec<TurnRecord> = Vec::new();
    let mut offset = 0usize;
    let mut torn = false;
    for (n, raw) in bytes.split_inclusive(|b| *b == b'\n').enumerate() {
        let complete = raw.ends_with(b"\n");
        let body = raw.strip_suffix(b"\n").unwrap_or(raw);
        if body.iter().all(u8::is_ascii_whitespace) {
            offset += raw.len();
            continue;
        }
        let integrity = |message: String| LogError::Integrity { id: id.to_string(), line: n + 1, message };
        let record: TurnRecord = match serde_json::from_slice(body) {
            Ok(r) => r,
            Err(_) if !complete => {
                torn = true;
                break;
            }
            Err(e) => return Err(integrity(e.to_string())),
        };
        if let Some(prev) = records.last() {
            if record.turn_index <= prev.turn_index {
                return Err(integrity(format!(
                    "turn_index {} does not follow {}",
                    record.turn_index, prev.turn_index
                )));
            }
        }
        records.push(record);
        offset += raw.len();
    }
    Ok(LogContents { records, valid_len: offset as u64, torn })
}

/// Replays decisions recorded in a user turn's logged events.
struct Logged<'a>(&'a [EngineEvent]);

impl Decisions for Logged<'_> {
    fn crisis(&self, _: &str, _: Language) -> Option<MatchInfo> {
        self.0.iter().find_map(|e| match e {
            EngineEvent::CrisisTriggered { matched } => Some(matched.clone()),
            _ => None,
        })
    }

    fn ready_for_screening(&self, _: &SessionState, _: &str) -> bool {
        self.0.iter().any(|e| {
            matches!(e, EngineEvent::PhaseTransition { from: Phase::Rapport, to: Phase::Screening { .. } })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replayed {
    pub state: SessionState,
    /// Records after the last complete user/bot pair, never acknowledged.
    pub unacked: usize,
}

/// Rebuilds state by re-running the engine over the logged user turns and
/// checking every produced event list against the log.
pub fn replay(id: &str, records: &[TurnRecord], instrument: &Instrument) -> Result<Replayed, LogError> {
    let integrity =
        |line: usize, message: String| LogError::Integrity { id: id.to_string(), line: line + 1, message };
    let Some(first) = records.first() else {
        return Ok(Replayed { state: SessionState::new(id, Language::En, Country::new("UK")), unacked: 0 });
    };
    let meta = match (&first.role, &first.meta) {
        (Role::System, Some(meta)) => meta.clone(),
        _ => return Err(integrity(0, "first record must be a system record with session meta".into())),
    };
    let mut state = SessionState::new(id, meta.lang, meta.country);
    state.transcript.push(first.clone());

    let mut i = 1;
    while i < records.len() {
        let rec = &records[i];
        match rec.role {
            Role::System => {
                for event in &rec.events {
                    match event {
                        EngineEvent::SessionClosed { .. } => state.closed = true,
                        other => return Err(integrity(i, format!("unexpected system event {other:?}"))),
                    }
                }
                state.transcript.push(rec.clone());
                i += 1;
            }
            Role::Bot => return Err(integrity(i, "bot record without a user turn".into())),
            Role::User => {
                let Some(bot) = records.get(i + 1) else {
                    return Ok(Replayed { state, unacked: 1 });
                };
                if bot.role != Role::Bot {
                    return Err(integrity(i + 1, "user turn not followed by a bot reply".into()));
                }
                if rec.phase_at_turn != state.phase.tag() {
                    return Err(integrity(i, format!("logged phase {} but state is {}", rec.phase_at_turn, state.phase.tag())));
                }
                let step = advance(&state, &rec.text, &Logged(&rec.events), instrument)
                    .map_err(|e| integrity(i, e.to_string()))?;
                if step.events != rec.events {
                    return Err(integrity(i, "replayed events differ from the log".into()));
                }
                if bot.phase_at_turn != step.state.phase.tag() {
                    return Err(integrity(i + 1, "bot phase differs from replayed phase".into()));
                }
                state = step.state;
                state.transcript.push(rec.clone());
                state.transcript.push(bot.clone());
                i += 2;
            }
        }
    }
    Ok(Replayed { state, unacked: 0 })
}

/// Loads a session from its log, trimming a torn or unacknowledged tail.
pub fn resume(log: &JsonlSessionLog, id: &str, instrument: &Instrument) -> Result<SessionState, LogError> {
    let contents = log.read(id)?;
    let replayed = replay(id, &contents.records, instrument)?;
    if contents.torn || replayed.unacked > 0 {
        let keep = contents.records.len() - replayed.unacked;
        let len = if replayed.unacked > 0 {
            let bytes = fs::read(log.path(id)?)?;
            line_offset(&bytes, keep)
        } else {
            contents.valid_len
        };
        tracing::warn!(session = id, "dropping unacknowledged log tail");
        log.truncate(id, len)?;
    }
    Ok(replayed.state)
}

/// Byte offset just past the `keep`-th non-blank line.
fn line_offset(bytes: &[u8], keep: usize) -> u64 {
    let mut seen = 0;
    let mut offset = 0usize;
    for raw in bytes.split_inclusive(|b| *b == b'\n') {
        if seen == keep {
            break;
        }
        offset += raw.len();
        if !raw.iter().all(u8::is_ascii_whitespace) {
            seen += 1;
        }
    }
    offset as u64
}

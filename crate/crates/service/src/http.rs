use std::collections::HashMap;
use std::convert::Infallible;
use std::future::Future;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Body;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use screener_core::engine::{Conversation, ConversationError, TurnOutcome};
use screener_core::gateway::AudioBlob;
use screener_core::safety::SafetyGuard;
use tokio::sync::mpsc;
use tokio_stream::wrappers::UnboundedReceiverStream;

use crate::wire::{
    CreateSession, ErrorBody, HelplinePayload, SessionCreated, SessionView, TurnDone, TurnRequest, WireTurn,
};

/// Longest accepted user turn, in characters.
pub const MAX_TURN_CHARS: usize = 4000;

struct AudioHandle {
    token: String,
    blob: AudioBlob,
}

pub struct AppState {
    conv: Arc<Conversation>,
    default_lang: String,
    default_country: String,
    /// Latest reply audio per session; fetching it consumes it.
    audio: Mutex<HashMap<String, AudioHandle>>,
}

impl AppState {
    pub fn new(conv: Arc<Conversation>, default_lang: &str, default_country: &str) -> Self {
        AppState {
            conv,
            default_lang: default_lang.to_string(),
            default_country: default_country.to_string(),
            audio: Mutex::new(HashMap::new()),
        }
    }

    pub fn conversation(&self) -> &Arc<Conversation> {
        &self.conv
    }

    pub fn reload_safety(&self, guard: SafetyGuard) {
        self.conv.reload_safety(guard);
    }

    /// Closes sessions idle for longer than `max_idle`; returns their ids.
    pub fn sweep_idle(&self, max_idle: Duration) -> Vec<String> {
        let max = chrono::Duration::from_std(max_idle).unwrap_or(chrono::Duration::MAX);
        let closed = self.conv.close_idle(chrono::Utc::now(), max);
        let mut audio = self.audio.lock().unwrap();
        for id in &closed {
            audio.remove(id);
        }
        closed
    }
}

fn status_of(e: &ConversationError) -> StatusCode {
    match e {
        ConversationError::NotFound(_) => StatusCode::NOT_FOUND,
        ConversationError::Closed(_) => StatusCode::GONE,
        ConversationError::Busy(_) | ConversationError::Incomplete { .. } => StatusCode::CONFLICT,
        ConversationError::UnsupportedLanguage(_) => StatusCode::UNPROCESSABLE_ENTITY,
        ConversationError::Generation(_) => StatusCode::BAD_GATEWAY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn error_body(e: &ConversationError) -> ErrorBody {
    let remaining = match e {
        ConversationError::Incomplete { remaining } => Some(*remaining),
        _ => None,
    };
    ErrorBody { error: e.to_string(), remaining }
}

fn error_response(e: ConversationError) -> Response {
    let status = status_of(&e);
    if status.is_server_error() {
        tracing::error!(error = %e, "request failed");
    }
    (status, Json(error_body(&e))).into_response()
}

/// Runs blocking conversation work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ConversationError> + Send + 'static,
) -> Result<T, Response> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(error_response),
        Err(e) => Err((StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response()),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/turns", post(post_turn))
        .route("/sessions/{id}/result", get(get_result))
        .route("/sessions/{id}/audio/{token}", get(get_audio))
        .with_state(state)
}

async fn create_session(State(app): State<Arc<AppState>>, Json(body): Json<CreateSession>) -> Response {
    let lang = body.lang.unwrap_or_else(|| app.default_lang.clone());
    let country = body.country.unwrap_or_else(|| app.default_country.clone());
    let conv = app.conv.clone();
    match blocking(move || conv.open_session(&lang, &country)).await {
        Ok(s) => {
            (StatusCode::CREATED, Json(SessionCreated { session_id: s.session_id, greeting: s.greeting }))
                .into_response()
        }
        Err(r) => r,
    }
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let conv = app.conv.clone();
    match blocking(move || conv.state(&id)).await {
        Ok(s) => Json(SessionView::new(&s)).into_response(),
        Err(r) => r,
    }
}

async fn get_result(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let conv = app.conv.clone();
    match blocking(move || conv.summary(&id)).await {
        Ok(doc) => Json(doc).into_response(),
        Err(r) => r,
    }
}

async fn get_audio(State(app): State<Arc<AppState>>, Path((id, token)): Path<(String, String)>) -> Response {
    let mut audio = app.audio.lock().unwrap();
    match audio.get(&id) {
        Some(h) if h.token == token => {
            let h = audio.remove(&id).unwrap();
            ([(header::CONTENT_TYPE, h.blob.mime)], Body::from(h.blob.bytes)).into_response()
        }
        _ => (StatusCode::NOT_FOUND, Json(ErrorBody { error: "no such audio".into(), remaining: None })).into_response(),
    }
}

enum Progress {
    Token(String),
    Finished(Box<Result<TurnOutcome, ConversationError>>),
}

fn json_event(name: &str, value: &impl serde::Serialize) -> Event {
    Event::default().event(name).data(serde_json::to_string(value).expect("wire types serialize"))
}

/// Stream entries after the tokens: engine events, any helplines, then done.
fn closing_events(app: &AppState, id: &str, out: TurnOutcome) -> Vec<Event> {
    let mut events: Vec<Event> = out.events().iter().map(|e| json_event("event", e)).collect();
    if let Some(entries) = &out.helplines {
        events.push(json_event("event", &HelplinePayload { kind: "helplines".into(), entries: entries.clone() }));
    }
    let mut audio = app.audio.lock().unwrap();
    // Only the newest reply's audio stays fetchable.
    audio.remove(id);
    let audio_url = out.audio.clone().map(|blob| {
        let token = uuid::Uuid::new_v4().simple().to_string();
        let url = format!("/sessions/{id}/audio/{token}");
        audio.insert(id.to_string(), AudioHandle { token, blob });
        url
    });
    let done = TurnDone {
        user: WireTurn::new(id, &out.user),
        bot: WireTurn::new(id, &out.bot),
        latency: out.latency(),
        phase: out.phase.clone(),
        closed: out.closed,
        audio_url,
        speech_degraded: out.speech_degraded,
    };
    events.push(json_event("done", &done));
    events
}

async fn post_turn(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<TurnRequest>,
) -> Response {
    if body.text.chars().count() > MAX_TURN_CHARS {
        let msg = format!("turn longer than {MAX_TURN_CHARS} characters");
        return (StatusCode::PAYLOAD_TOO_LARGE, Json(ErrorBody { error: msg, remaining: None })).into_response();
    }
    let (tx, mut rx) = mpsc::unbounded_channel();
    let conv = app.conv.clone();
    let turn_id = id.clone();
    tokio::task::spawn_blocking(move || {
        let tokens = tx.clone();
        let result = conv.take_turn(&turn_id, &body.text, &mut |chunk| {
            let _ = tokens.send(Progress::Token(chunk.to_string()));
        });
        let _ = tx.send(Progress::Finished(Box::new(result)));
    });

    // Errors raised before any output keep their HTTP status.
    let first = match rx.recv().await {
        Some(Progress::Finished(r)) => match *r {
            Err(e) => return error_response(e),
            ok => Progress::Finished(Box::new(ok)),
        },
        Some(p) => p,
        None => return StatusCode::INTERNAL_SERVER_ERROR.into_response(),
    };

    let (etx, erx) = mpsc::unbounded_channel::<Result<Event, Infallible>>();
    tokio::spawn(async move {
        let mut next = Some(first);
        while let Some(p) = next.take() {
            let batch = match p {
                Progress::Token(text) => vec![json_event("token", &serde_json::json!({ "text": text }))],
                Progress::Finished(r) => match *r {
                    Ok(out) => closing_events(&app, &id, out),
                    Err(e) => vec![json_event("error", &error_body(&e))],
                },
            };
            for ev in batch {
                if etx.send(Ok(ev)).is_err() {
                    // client went away; the turn still completes and persists
                    break;
                }
            }
            next = rx.recv().await;
        }
    });
    Sse::new(UnboundedReceiverStream::new(erx)).keep_alive(KeepAlive::default()).into_response()
}

/// Serves until `shutdown` resolves, then waits for turns still running.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state.clone())).with_graceful_shutdown(shutdown).await?;
    let deadline = tokio::time::Instant::now() + Duration::from_secs(30);
    while state.conv.has_turn_in_flight() && tokio::time::Instant::now() < deadline {
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    Ok(())
}

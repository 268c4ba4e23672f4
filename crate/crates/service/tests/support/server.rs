//! In-process server on an ephemeral port plus a minimal SSE reader.

#![allow(dead_code)]

use std::sync::Arc;
use std::thread::JoinHandle;

use screener_core::engine::Conversation;
use screener_service::http::{serve, AppState};
use serde_json::Value;
use tokio::sync::oneshot;

pub struct TestServer {
    pub base: String,
    pub state: Arc<AppState>,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(conv: Conversation) -> Self {
        let state = Arc::new(AppState::new(Arc::new(conv), "en", "UK"));
        let (stop, stopped) = oneshot::channel::<()>();
        let (ready_tx, ready_rx) = std::sync::mpsc::channel();
        let s = state.clone();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                ready_tx.send(listener.local_addr().unwrap()).unwrap();
                serve(listener, s, async {
                    let _ = stopped.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = ready_rx.recv().unwrap();
        TestServer { base: format!("http://{addr}"), state, stop: Some(stop), thread: Some(thread) }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn client(&self) -> reqwest::blocking::Client {
        reqwest::blocking::Client::new()
    }

    /// Stops accepting connections and waits for in-flight turns.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SseEvent {
    pub event: String,
    pub data: Value,
}

/// Parses a complete `text/event-stream` body, skipping keep-alive comments.
pub fn parse_sse(body: &str) -> Vec<SseEvent> {
    body.split("\n\n")
        .filter_map(|block| {
            let mut event = None;
            let mut data = Vec::new();
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("event:") {
                    event = Some(v.trim().to_string());
                } else if let Some(v) = line.strip_prefix("data:") {
                    data.push(v.strip_prefix(' ').unwrap_or(v).to_string());
                }
            }
            let event = event?;
            Some(SseEvent { event, data: serde_json::from_str(&data.join("\n")).unwrap_or(Value::Null) })
        })
        .collect()
}

pub struct TurnResponse {
    pub status: u16,
    pub events: Vec<SseEvent>,
    pub body: Value,
}

impl TurnResponse {
    pub fn tokens(&self) -> String {
        self.events.iter().filter(|e| e.event == "token").map(|e| e.data["text"].as_str().unwrap()).collect()
    }

    pub fn done(&self) -> &Value {
        &self.events.iter().find(|e| e.event == "done").expect("done event").data
    }

    pub fn engine_events(&self) -> Vec<&Value> {
        self.events.iter().filter(|e| e.event == "event").map(|e| &e.data).collect()
    }
}

pub fn open(client: &reqwest::blocking::Client, base: &str, lang: &str, country: &str) -> (u16, Value) {
    let r = client
        .post(format!("{base}/sessions"))
        .json(&serde_json::json!({ "lang": lang, "country": country }))
        .send()
        .unwrap();
    let status = r.status().as_u16();
    (status, r.json().unwrap_or(Value::Null))
}

pub fn turn(client: &reqwest::blocking::Client, base: &str, id: &str, text: &str) -> TurnResponse {
    let r = client
        .post(format!("{base}/sessions/{id}/turns"))
        .json(&serde_json::json!({ "text": text }))
        .send()
        .unwrap();
    let status = r.status().as_u16();
    let is_sse = r
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap_or("").starts_with("text/event-stream"))
        .unwrap_or(false);
    let text = r.text().unwrap();
    if is_sse {
        TurnResponse { status, events: parse_sse(&text), body: Value::Null }
    } else {
        TurnResponse { status, events: Vec::new(), body: serde_json::from_str(&text).unwrap_or(Value::Null) }
    }
}

//! HTTP service and command-line tooling around `screener-core`.
//!
//! Endpoints:
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | open a session, 201 `{session_id, greeting}` |
//! | POST | `/sessions/{id}/turns` | one turn, streamed as `token`, `event`, `done` |
//! | GET | `/sessions/{id}` | state, transcript and digest |
//! | GET | `/sessions/{id}/result` | the screening summary, 409 until complete |
//! | GET | `/sessions/{id}/audio/{token}` | latest reply audio, fetchable once |
//! | GET | `/health` | `ok` |

pub mod app;
pub mod commands;
pub mod config;
pub mod http;
pub mod wire;

//! Conversational PHQ-9 screening engine.
//!
//! The crate is organised by subsystem:
//!
//! - [`protocol`]: instrument data, answer parsing, scoring, severity bands, summaries
//! - [`safety`]: crisis lexicon matching and helpline directories
//! - [`retrieval`]: chunking, embedding, vector stores and multi-store queries
//! - [`gateway`]: prompt assembly, streaming generation backends, speech synthesis
//! - [`engine`]: the three-phase dialogue state machine, session log and replay
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled and
//! fall back to plain iterators otherwise; see [`exec::Execution`].

pub mod clock;
pub mod engine;
pub mod exec;
pub mod gateway;
pub mod lang;
pub mod messages;
pub mod protocol;
pub mod retrieval;
pub mod safety;

pub use lang::{Country, Language};

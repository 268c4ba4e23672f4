//! PHQ-9 instrument data, answer parsing, scoring and result summaries.

mod answer;
mod instrument;
mod severity;
mod summary;

pub use answer::{normalize_answer, parse_answer, AnswerParse, ItemScore};
pub(crate) use instrument::hex;
pub use instrument::{Instrument, InstrumentError, Phq9Item, ITEM_COUNT, SELF_HARM_ITEM};
pub use severity::{classify_severity, score_total, Phq9Result, SeverityBand};
pub use summary::{build_summary, HelplineSection, SummaryBuilder, SummaryDocument, SummaryItem};

use thiserror::Error;

use crate::lang::Language;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("incomplete result: expected 9 item scores, got {got}")]
    Incomplete { got: usize },
    #[error("total {0} outside 0..=27")]
    TotalOutOfRange(i64),
    #[error("item score {0} outside 0..=3")]
    ScoreOutOfRange(i64),
    #[error("unsupported language: {0}")]
    UnsupportedLanguage(String),
    #[error("instrument has no text for language {0}")]
    MissingTranslation(Language),
}

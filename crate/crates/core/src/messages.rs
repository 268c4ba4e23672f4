//! Scripted, localized bot text: templates the engine emits without the model.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Language;

const BUILTIN: &str = include_str!("../data/messages.json");

#[derive(Debug, Error)]
pub enum MessagesError {
    #[error("reading messages file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing messages file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("messages missing language {0}")]
    MissingLanguage(Language),
    #[error("{lang}: expected 5 entries in `{field}`")]
    BandCount { lang: Language, field: &'static str },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LocaleMessages {
    pub greeting: String,
    pub screening_intro: String,
    /// `{n}` and `{text}` are substituted.
    pub item_header: String,
    pub options_header: String,
    pub clarify_soft: String,
    pub clarify_hard: String,
    pub crisis_message: String,
    pub crisis_choice: String,
    pub resume_message: String,
    pub goodbye: String,
    pub summary_title: String,
    pub total_label: String,
    pub severity_label: String,
    pub helplines_title: String,
    pub bands: Vec<String>,
    pub interpretations: Vec<String>,
    pub recommendations: Vec<Vec<String>>,
    pub item_score_word: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Messages {
    by_lang: BTreeMap<Language, LocaleMessages>,
}

impl Messages {
    pub fn from_json(text: &str) -> Result<Self, MessagesError> {
        let by_lang: BTreeMap<Language, LocaleMessages> = serde_json::from_str(text)?;
        for lang in Language::ALL {
            let m = by_lang.get(&lang).ok_or(MessagesError::MissingLanguage(lang))?;
            if m.bands.len() != 5 {
                return Err(MessagesError::BandCount { lang, field: "bands" });
            }
            if m.interpretations.len() != 5 {
                return Err(MessagesError::BandCount { lang, field: "interpretations" });
            }
            if m.recommendations.len() != 5 {
                return Err(MessagesError::BandCount { lang, field: "recommendations" });
            }
        }
        Ok(Messages { by_lang })
    }

    pub fn load(path: &Path) -> Result<Self, MessagesError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn builtin() -> &'static Messages {
        static CELL: OnceLock<Messages> = OnceLock::new();
        CELL.get_or_init(|| Messages::from_json(BUILTIN).expect("builtin messages are valid"))
    }

    pub fn get(&self, lang: Language) -> &LocaleMessages {
        // Presence of every language is checked at load.
        &self.by_lang[&lang]
    }
}

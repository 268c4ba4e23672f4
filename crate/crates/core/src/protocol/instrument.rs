use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lang::Language;

pub const ITEM_COUNT: usize = 9;
/// "Thoughts that you would be better off dead, or of hurting yourself".
pub const SELF_HARM_ITEM: u8 = 9;

const BUILTIN: &str = include_str!("../../data/instrument.json");

#[derive(Debug, Error)]
pub enum InstrumentError {
    #[error("reading instrument file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing instrument file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("expected 9 items, found {0}")]
    ItemCount(usize),
    #[error("item indices must be exactly 1..=9, found {0:?}")]
    Indices(Vec<u8>),
    #[error("item {index}: missing or empty text for {lang}")]
    MissingText { index: u8, lang: Language },
    #[error("item {index}: expected 4 non-empty options for {lang}")]
    Options { index: u8, lang: Language },
}

/// One PHQ-9 item as stored in the instrument file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phq9Item {
    pub index: u8,
    pub prompts: BTreeMap<Language, String>,
    /// Anchor labels for scores 0..=3, per language.
    pub options: BTreeMap<Language, Vec<String>>,
}

impl Phq9Item {
    pub fn prompt(&self, lang: Language) -> &str {
        &self.prompts[&lang]
    }

    pub fn option_labels(&self, lang: Language) -> &[String] {
        &self.options[&lang]
    }
}

/// The validated nine-item instrument plus the checksum of its source bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instrument {
    items: Vec<Phq9Item>,
    checksum: String,
}

impl Instrument {
    pub fn from_json(text: &str) -> Result<Self, InstrumentError> {
        let mut items: Vec<Phq9Item> = serde_json::from_str(text)?;
        if items.len() != ITEM_COUNT {
            return Err(InstrumentError::ItemCount(items.len()));
        }
        items.sort_by_key(|i| i.index);
        let indices: Vec<u8> = items.iter().map(|i| i.index).collect();
        if indices != (1..=ITEM_COUNT as u8).collect::<Vec<_>>() {
            return Err(InstrumentError::Indices(indices));
        }
        for item in &items {
            for lang in Language::ALL {
                match item.prompts.get(&lang) {
                    Some(p) if !p.trim().is_empty() => {}
                    _ => return Err(InstrumentError::MissingText { index: item.index, lang }),
                }
                match item.options.get(&lang) {
                    Some(o) if o.len() == 4 && o.iter().all(|s| !s.trim().is_empty()) => {}
                    _ => return Err(InstrumentError::Options { index: item.index, lang }),
                }
            }
        }
        let checksum = hex(&Sha256::digest(text.as_bytes()));
        Ok(Instrument { items, checksum })
    }

    pub fn load(path: &Path) -> Result<Self, InstrumentError> {
        let text = std::fs::read_to_string(path)?;
        let instrument = Self::from_json(&text)?;
        tracing::info!(path = %path.display(), sha256 = %instrument.checksum, "loaded PHQ-9 instrument");
        Ok(instrument)
    }

    pub fn builtin() -> &'static Instrument {
        static CELL: OnceLock<Instrument> = OnceLock::new();
        CELL.get_or_init(|| Instrument::from_json(BUILTIN).expect("builtin instrument is valid"))
    }

    pub fn items(&self) -> &[Phq9Item] {
        &self.items
    }

    /// Item by 1-based index.
    pub fn item(&self, index: u8) -> Option<&Phq9Item> {
        self.items.get(usize::from(index).checked_sub(1)?)
    }

    /// SHA-256 of the source JSON, hex encoded.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_nine_items_in_both_languages() {
        let inst = Instrument::builtin();
        assert_eq!(inst.items().len(), 9);
        for item in inst.items() {
            for lang in Language::ALL {
                assert!(!item.prompt(lang).is_empty());
                assert_eq!(item.option_labels(lang).len(), 4);
            }
        }
        assert_eq!(inst.item(1).unwrap().index, 1);
        assert!(inst.item(0).is_none());
        assert!(inst.item(10).is_none());
        assert_eq!(inst.checksum().len(), 64);
    }

    #[test]
    fn rejects_missing_translation() {
        let mut v: serde_json::Value = serde_json::from_str(BUILTIN).unwrap();
        v[3]["prompts"].as_object_mut().unwrap().remove("zh");
        let err = Instrument::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, InstrumentError::MissingText { index: 4, lang: Language::Zh }));
    }

    #[test]
    fn rejects_wrong_item_count_and_duplicates() {
        let mut v: serde_json::Value = serde_json::from_str(BUILTIN).unwrap();
        v.as_array_mut().unwrap().pop();
        assert!(matches!(Instrument::from_json(&v.to_string()), Err(InstrumentError::ItemCount(8))));

        let mut v: serde_json::Value = serde_json::from_str(BUILTIN).unwrap();
        v[8]["index"] = 1.into();
        assert!(matches!(Instrument::from_json(&v.to_string()), Err(InstrumentError::Indices(_))));
    }

    #[test]
    fn rejects_three_options() {
        let mut v: serde_json::Value = serde_json::from_str(BUILTIN).unwrap();
        v[0]["options"]["en"].as_array_mut().unwrap().pop();
        assert!(matches!(
            Instrument::from_json(&v.to_string()),
            Err(InstrumentError::Options { index: 1, lang: Language::En })
        ));
    }
}

//! Crisis interlock: keyword lexicon matching and locale helpline directories.
//!
//! Matching is substring search over normalized text, so a phrase fires no
//! matter what surrounds it. Both the lexicon and the directory are immutable
//! once loaded; the service swaps in a fresh [`SafetyGuard`] to reload.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Country, Language};

const BUILTIN_LEXICON: &str = include_str!("../data/lexicon.json");
const BUILTIN_HELPLINES: &str = include_str!("../data/helplines.json");

#[derive(Debug, Error)]
pub enum SafetyError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing safety data: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("crisis lexicon has no phrases for {0}")]
    EmptyLexicon(Language),
    #[error("helpline entry {name:?} has an empty contact")]
    EmptyContact { name: String },
}

fn fold_width(c: char) -> char {
    match c {
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        '\u{3000}' => ' ',
        _ => c,
    }
}

fn is_separator(c: char) -> bool {
    c.is_whitespace()
        || c.is_ascii_punctuation()
        || matches!(
            c,
            '。' | '、' | '“' | '”' | '‘' | '’' | '…' | '《' | '》' | '【' | '】' | '「' | '」' | '·' | '—' | '–'
        )
}

/// Case-fold, map punctuation to spaces, collapse whitespace, trim.
pub fn normalize_crisis_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars().map(fold_width).flat_map(char::to_lowercase) {
        if is_separator(c) {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// A lexicon hit. `span` is a byte range into the normalized input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchInfo {
    pub phrase: String,
    pub lang: Language,
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrisisLexicon {
    phrases: BTreeMap<Language, Vec<String>>,
}

impl CrisisLexicon {
    pub fn from_json(text: &str) -> Result<Self, SafetyError> {
        let raw: BTreeMap<Language, Vec<String>> = serde_json::from_str(text)?;
        let mut phrases = BTreeMap::new();
        for lang in Language::ALL {
            let mut list: Vec<String> = raw
                .get(&lang)
                .into_iter()
                .flatten()
                .map(|p| normalize_crisis_text(p))
                .filter(|p| !p.is_empty())
                .collect();
            list.dedup();
            if list.is_empty() {
                return Err(SafetyError::EmptyLexicon(lang));
            }
            phrases.insert(lang, list);
        }
        Ok(CrisisLexicon { phrases })
    }

    pub fn phrases(&self, lang: Language) -> &[String] {
        &self.phrases[&lang]
    }

    fn detect_in(&self, normalized: &str, lang: Language) -> Option<MatchInfo> {
        self.phrases(lang)
            .iter()
            .filter_map(|p| normalized.find(p.as_str()).map(|start| (start, p)))
            // earliest hit; longer phrase wins a tie
            .min_by(|(sa, pa), (sb, pb)| sa.cmp(sb).then(pb.len().cmp(&pa.len())))
            .map(|(start, p)| MatchInfo { phrase: p.clone(), lang, span: (start, start + p.len()) })
    }

    /// First crisis phrase in `text`, searching the session language first and
    /// then every other loaded language.
    pub fn detect_crisis(&self, text: &str, lang: Language) -> Option<MatchInfo> {
        let normalized = normalize_crisis_text(text);
        if normalized.is_empty() {
            return None;
        }
        std::iter::once(lang)
            .chain(Language::ALL.into_iter().filter(|&l| l != lang))
            .find_map(|l| self.detect_in(&normalized, l))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelplineEntry {
    pub country: Country,
    pub name: String,
    pub contact: String,
    pub description: String,
    pub lang: Language,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelplineDirectory {
    entries: Vec<HelplineEntry>,
}

impl HelplineDirectory {
    pub fn from_json(text: &str) -> Result<Self, SafetyError> {
        let entries: Vec<HelplineEntry> = serde_json::from_str(text)?;
        if let Some(e) = entries.iter().find(|e| e.contact.trim().is_empty()) {
            return Err(SafetyError::EmptyContact { name: e.name.clone() });
        }
        Ok(HelplineDirectory { entries })
    }

    pub fn countries(&self) -> Vec<Country> {
        let mut c: Vec<Country> = self.entries.iter().map(|e| e.country.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    /// Entries for `country` in `lang`; other-language entries for the country
    /// when none are localized; a generic emergency entry for unknown countries.
    pub fn helplines_for(&self, country: &Country, lang: Language) -> Vec<HelplineEntry> {
        let for_country: Vec<&HelplineEntry> =
            self.entries.iter().filter(|e| &e.country == country).collect();
        if for_country.is_empty() {
            return vec![fallback_entry(lang)];
        }
        let localized: Vec<HelplineEntry> =
            for_country.iter().filter(|e| e.lang == lang).map(|e| (*e).clone()).collect();
        if !localized.is_empty() {
            return localized;
        }
        for_country.into_iter().cloned().collect()
    }
}

pub fn fallback_entry(lang: Language) -> HelplineEntry {
    let (name, contact, description) = match lang {
        Language::En => (
            "Local emergency services",
            "Your local emergency number (for example 112 or 911)",
            "If you are in immediate danger, call your local emergency number or go to the nearest emergency department.",
        ),
        Language::Zh => (
            "当地急救服务",
            "当地急救电话（例如 120 或 112）",
            "如果你正处于紧急危险中，请立即拨打当地急救电话或前往最近的急诊科。",
        ),
    };
    HelplineEntry {
        country: Country::new("*"),
        name: name.into(),
        contact: contact.into(),
        description: description.into(),
        lang,
    }
}

/// Lexicon plus directory, loaded together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyGuard {
    pub lexicon: CrisisLexicon,
    pub directory: HelplineDirectory,
}

impl SafetyGuard {
    pub fn builtin() -> &'static SafetyGuard {
        static CELL: OnceLock<SafetyGuard> = OnceLock::new();
        CELL.get_or_init(|| SafetyGuard {
            lexicon: CrisisLexicon::from_json(BUILTIN_LEXICON).expect("builtin lexicon is valid"),
            directory: HelplineDirectory::from_json(BUILTIN_HELPLINES)
                .expect("builtin helplines are valid"),
        })
    }

    pub fn load(lexicon: Option<&Path>, helplines: Option<&Path>) -> Result<Self, SafetyError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p)
                .map_err(|source| SafetyError::Io { path: p.display().to_string(), source })
        };
        let lexicon = match lexicon {
            Some(p) => CrisisLexicon::from_json(&read(p)?)?,
            None => SafetyGuard::builtin().lexicon.clone(),
        };
        let directory = match helplines {
            Some(p) => HelplineDirectory::from_json(&read(p)?)?,
            None => SafetyGuard::builtin().directory.clone(),
        };
        Ok(SafetyGuard { lexicon, directory })
    }

    pub fn detect_crisis(&self, text: &str, lang: Language) -> Option<MatchInfo> {
        self.lexicon.detect_crisis(text, lang)
    }

    pub fn helplines_for(&self, country: &Country, lang: Language) -> Vec<HelplineEntry> {
        self.directory.helplines_for(country, lang)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn guard() -> &'static SafetyGuard {
        SafetyGuard::builtin()
    }

    #[test]
    fn detects_self_harm() {
        let m = guard().detect_crisis("I want to hurt myself", Language::En).unwrap();
        assert_eq!(m.phrase, "hurt myself");
        assert_eq!(m.span, (10, 21));
        assert!(guard().detect_crisis("I feel great today", Language::En).is_none());
        let m = guard().detect_crisis("SELF-HARM!!", Language::En).unwrap();
        assert_eq!(m.phrase, "self harm");
        assert!(guard().detect_crisis("我有时候想自杀。", Language::Zh).is_some());
    }

    #[test]
    fn other_language_lexicon_still_checked() {
        let m = guard().detect_crisis("我不想活了", Language::En).unwrap();
        assert_eq!(m.lang, Language::Zh);
    }

    #[test]
    fn uk_and_cn_directories() {
        let uk = guard().helplines_for(&Country::new("UK"), Language::En);
        assert!(uk.iter().any(|e| e.name == "Samaritans" && e.contact == "116 123"));
        assert!(uk.iter().any(|e| e.name == "Shout" && e.contact == "text 85258"));
        let cn = guard().helplines_for(&Country::new("CN"), Language::Zh);
        assert!(cn.iter().all(|e| e.lang == Language::Zh));
        assert!(cn.iter().any(|e| e.name.contains("Peking University Sixth Hospital")));
        assert!(cn.iter().any(|e| e.name.contains("Shanghai Mental Health Centre")));
        // no zh entries for UK: fall back to the English ones
        let uk_zh = guard().helplines_for(&Country::new("UK"), Language::Zh);
        assert!(uk_zh.iter().any(|e| e.contact == "116 123"));
    }

    #[test]
    fn unknown_country_gets_single_fallback() {
        let v = guard().helplines_for(&Country::new("XX"), Language::En);
        assert_eq!(v, vec![fallback_entry(Language::En)]);
    }

    #[test]
    fn no_supported_pair_is_empty() {
        for c in guard().directory.countries() {
            for lang in Language::ALL {
                assert!(!guard().helplines_for(&c, lang).is_empty());
            }
        }
    }

    #[test]
    fn lexicon_requires_every_language() {
        assert!(matches!(
            CrisisLexicon::from_json(r#"{"en": ["suicide"]}"#),
            Err(SafetyError::EmptyLexicon(Language::Zh))
        ));
        assert!(HelplineDirectory::from_json(
            r#"[{"country":"UK","name":"x","contact":" ","description":"","lang":"en"}]"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn detection_is_normalization_invariant(t in "\\PC{0,60}") {
            let lang = Language::En;
            prop_assert_eq!(
                guard().detect_crisis(&t, lang),
                guard().detect_crisis(&normalize_crisis_text(&t), lang)
            );
        }

        #[test]
        fn every_phrase_fires_inside_padding(pre in "\\PC{0,30}", post in "\\PC{0,30}", idx in any::<prop::sample::Index>()) {
            for lang in Language::ALL {
                let phrases = guard().lexicon.phrases(lang);
                let phrase = idx.get(phrases);
                let text = format!("{pre}{phrase}{post}");
                prop_assert!(guard().detect_crisis(&text, lang).is_some(), "{:?}", text);
            }
        }
    }
}

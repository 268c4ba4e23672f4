use std::fmt;

use serde::{Deserialize, Serialize};

use super::instrument::Instrument;
use super::ProtocolError;
use crate::lang::Language;

/// A single item score, 0..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ItemScore(u8);

impl ItemScore {
    pub const MAX: u8 = 3;

    pub fn new(value: u8) -> Result<Self, ProtocolError> {
        if value <= Self::MAX {
            Ok(ItemScore(value))
        } else {
            Err(ProtocolError::ScoreOutOfRange(i64::from(value)))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Bracket letter shown to users: A for 0 through D for 3.
    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }
}

impl TryFrom<u8> for ItemScore {
    type Error = ProtocolError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        ItemScore::new(value)
    }
}

impl From<ItemScore> for u8 {
    fn from(s: ItemScore) -> u8 {
        s.0
    }
}

impl fmt::Display for ItemScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Outcome of mapping a free-text reply onto a scoring bracket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AnswerParse {
    Categorical(ItemScore),
    /// Verbatim user text.
    Ambiguous(String),
}

impl AnswerParse {
    pub fn score(&self) -> Option<ItemScore> {
        match self {
            AnswerParse::Categorical(s) => Some(*s),
            AnswerParse::Ambiguous(_) => None,
        }
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '。' | '、' | '“' | '”' | '‘' | '’' | '…' | '《' | '》' | '【' | '】' | '「' | '」' | '·'
        )
}

/// Full-width ASCII variants (Ａ, ３, ！) folded onto ASCII.
fn fold_width(c: char) -> char {
    match c {
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        '\u{3000}' => ' ',
        _ => c,
    }
}

/// Case-fold, collapse whitespace, trim, and strip punctuation from both ends.
pub fn normalize_answer(raw: &str) -> String {
    let folded: String = raw.chars().map(fold_width).flat_map(char::to_lowercase).collect();
    let collapsed = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_matches(|c: char| is_punct(c) || c.is_whitespace())
        .to_string()
}

fn bracket_token(tok: &str) -> Option<u8> {
    match tok {
        "a" | "0" => Some(0),
        "b" | "1" => Some(1),
        "c" | "2" => Some(2),
        "d" | "3" => Some(3),
        _ => None,
    }
}

impl Instrument {
    /// Anchor phrases are shared by every item; item 1's labels are used.
    fn anchor_bracket(&self, normalized: &str, lang: Language) -> Option<u8> {
        let labels = self.items().first()?.option_labels(lang);
        labels
            .iter()
            .position(|label| normalize_answer(label) == normalized)
            .map(|i| i as u8)
    }

    /// Maps a reply onto a bracket when exactly one reading exists.
    ///
    /// Accepted forms: a letter A-D, a digit 0-3, an anchor phrase in `lang`,
    /// or a letter/digit followed by its own anchor ("c) more than half the days").
    pub fn parse_answer(&self, raw: &str, lang: Language) -> AnswerParse {
        let norm = normalize_answer(raw);
        let bracket = bracket_token(&norm)
            .or_else(|| self.anchor_bracket(&norm, lang))
            .or_else(|| {
                let (head, rest) = norm.split_once(' ')?;
                let head = head.trim_end_matches(['.', ')', ':', '-', ',']);
                let rest = rest.trim_start_matches(|c: char| is_punct(c) || c == ' ');
                let b = bracket_token(head)?;
                (self.anchor_bracket(rest, lang)? == b).then_some(b)
            });
        match bracket {
            Some(b) => AnswerParse::Categorical(ItemScore(b)),
            None => AnswerParse::Ambiguous(raw.to_string()),
        }
    }
}

/// [`Instrument::parse_answer`] against the built-in instrument.
pub fn parse_answer(raw: &str, lang: Language) -> AnswerParse {
    Instrument::builtin().parse_answer(raw, lang)
}

use std::ops::Range;

/// Splits text into tokens, reported as byte ranges into the source.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<Range<usize>>;

    fn count(&self, text: &str) -> usize {
        self.tokenize(text).len()
    }
}

/// Maximal runs of non-whitespace.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    out.push(s..i);
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push(s..text.len());
        }
        out
    }
}

pub(crate) fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF   // kana
        | 0x3400..=0x4DBF // ext A
        | 0x4E00..=0x9FFF // unified ideographs
        | 0xAC00..=0xD7AF // hangul
        | 0xF900..=0xFAFF
        | 0x3000..=0x303F // CJK punctuation
        | 0xFF00..=0xFFEF) // full-width forms
}

/// Whitespace words, except that every CJK character is its own token.
#[derive(Debug, Clone, Copy, Default)]
pub struct MixedTokenizer;

impl Tokenizer for MixedTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            if c.is_whitespace() || is_cjk(c) {
                if let Some(s) = start.take() {
                    out.push(s..i);
                }
                if is_cjk(c) && !c.is_whitespace() {
                    out.push(i..i + c.len_utf8());
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            out.push(s..text.len());
        }
        out
    }
}

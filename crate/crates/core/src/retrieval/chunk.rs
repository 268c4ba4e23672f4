use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tokenize::{Tokenizer, WhitespaceTokenizer};
use super::RetrievalError;
use crate::lang::Language;

/// Corpus source. Determines which store a document lands in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    /// CBT session transcripts.
    Cbt,
    /// Therapist guides.
    Guide,
    /// Emotional-support conversations.
    Emotional,
    /// Helpline directories.
    Helpline,
}

impl SourceKind {
    pub fn store_name(self) -> &'static str {
        match self {
            SourceKind::Cbt | SourceKind::Guide => "therapy",
            SourceKind::Emotional => "emotional",
            SourceKind::Helpline => "helpline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub source_kind: SourceKind,
    pub lang: Language,
    pub text: String,
}

/// A token window of one document. `text` is the source slice spanning the
/// window's first through last token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub seq: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub text: String,
}

impl Chunk {
    pub fn token_len(&self) -> usize {
        self.token_end - self.token_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkerConfig {
    pub chunk_tokens: usize,
    pub overlap_ratio: f64,
}

impl Default for ChunkerConfig {
    fn default() -> Self {
        ChunkerConfig { chunk_tokens: 512, overlap_ratio: 0.2 }
    }
}

impl ChunkerConfig {
    /// floor(overlap_ratio * chunk_tokens); 102 for the defaults.
    pub fn overlap_tokens(&self) -> usize {
        (self.overlap_ratio * self.chunk_tokens as f64).floor() as usize
    }

    pub fn stride(&self) -> usize {
        self.chunk_tokens - self.overlap_tokens()
    }

    fn validate(&self) -> Result<(), RetrievalError> {
        if self.chunk_tokens == 0 {
            return Err(RetrievalError::Config("chunk_tokens must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_ratio) {
            return Err(RetrievalError::Config("overlap_ratio must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Sliding token-window chunker.
///
/// Windows hold at most `chunk_tokens` tokens and neighbours share exactly
/// `overlap_tokens`. Inside the last quarter of each window the end snaps to
/// the strongest nearby boundary: blank line, then sentence end, then
/// whitespace, then a bare character boundary.
#[derive(Clone)]
pub struct Chunker {
    config: ChunkerConfig,
    tokenizer: Arc<dyn Tokenizer>,
}

impl Default for Chunker {
    fn default() -> Self {
        Chunker { config: ChunkerConfig::default(), tokenizer: Arc::new(WhitespaceTokenizer) }
    }
}

fn ends_sentence(token: &str) -> bool {
    let core = token.trim_end_matches(['"', '\'', ')', ']', '”', '’', '」', '）']);
    core.ends_with(['.', '!', '?', '。', '！', '？', '…'])
}

impl Chunker {
    pub fn new(config: ChunkerConfig, tokenizer: Arc<dyn Tokenizer>) -> Result<Self, RetrievalError> {
        config.validate()?;
        Ok(Chunker { config, tokenizer })
    }

    pub fn config(&self) -> &ChunkerConfig {
        &self.config
    }

    pub fn tokenizer(&self) -> &Arc<dyn Tokenizer> {
        &self.tokenizer
    }

    pub fn chunk_document(&self, doc: &Document) -> Vec<Chunk> {
        self.chunk_text(&doc.doc_id, &doc.text)
    }

    pub fn chunk_text(&self, doc_id: &str, text: &str) -> Vec<Chunk> {
        let tokens = self.tokenizer.tokenize(text);
        self.windows(text, &tokens)
            .into_iter()
            .enumerate()
            .map(|(seq, w)| Chunk {
                doc_id: doc_id.to_string(),
                seq,
                token_start: w.start,
                token_end: w.end,
                text: text[tokens[w.start].start..tokens[w.end - 1].end].to_string(),
            })
            .collect()
    }

    /// Boundary strength between token `e - 1` and token `e`.
    fn boundary_rank(text: &str, tokens: &[Range<usize>], e: usize) -> u8 {
        let gap = &text[tokens[e - 1].end..tokens[e].start];
        if gap.matches('\n').count() >= 2 {
            3
        } else if ends_sentence(&text[tokens[e - 1].clone()]) {
            2
        } else if !gap.is_empty() {
            1
        } else {
            0
        }
    }

    fn windows(&self, text: &str, tokens: &[Range<usize>]) -> Vec<Range<usize>> {
        let n = tokens.len();
        let size = self.config.chunk_tokens;
        let overlap = self.config.overlap_tokens();
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let mut start = 0;
        loop {
            if n - start <= size {
                out.push(start..n);
                return out;
            }
            let hard_end = start + size;
            let min_end = (start + overlap + 1).max(hard_end - size / 4);
            let end = (min_end..=hard_end)
                .max_by_key(|&e| (Self::boundary_rank(text, tokens, e), e))
                .unwrap_or(hard_end);
            out.push(start..end);
            start = end - overlap;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn short_document_is_one_chunk() {
        let text = words(100);
        let chunks = Chunker::default().chunk_text("d", &text);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].text, text);
        assert_eq!((chunks[0].token_start, chunks[0].token_end), (0, 100));
    }

    #[test]
    fn empty_document_has_no_chunks() {
        assert!(Chunker::default().chunk_text("d", "").is_empty());
        assert!(Chunker::default().chunk_text("d", " \n ").is_empty());
    }

    #[test]
    fn defaults_give_overlap_102_and_stride_410() {
        let c = ChunkerConfig::default();
        assert_eq!(c.overlap_tokens(), 102);
        assert_eq!(c.stride(), 410);
    }

    #[test]
    fn snaps_to_sentence_end_in_slack_zone() {
        // a sentence ends after token 449 (inside the last quarter)
        let mut toks: Vec<String> = (0..600).map(|i| format!("w{i}")).collect();
        toks[449].push('.');
        let text = toks.join(" ");
        let chunks = Chunker::default().chunk_text("d", &text);
        assert_eq!(chunks[0].token_end, 450);
        assert_eq!(chunks[1].token_start, 450 - 102);
        assert!(chunks[0].text.ends_with("w449."));
    }

    #[test]
    fn blank_line_beats_sentence_end() {
        let mut toks: Vec<String> = (0..600).map(|i| format!("w{i}")).collect();
        toks[499].push('.');
        toks[419].push_str("\n\n");
        let text = toks.join(" ");
        let chunks = Chunker::default().chunk_text("d", &text);
        assert_eq!(chunks[0].token_end, 420);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = ChunkerConfig { chunk_tokens: 10, overlap_ratio: 1.0 };
        assert!(Chunker::new(bad, Arc::new(WhitespaceTokenizer)).is_err());
    }
}

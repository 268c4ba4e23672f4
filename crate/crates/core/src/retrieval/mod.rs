//! Retrieval substrate: token-window chunking, embeddings, named vector
//! stores and the per-turn multi-store query.

mod chunk;
mod embed;
mod ingest;
mod store;
mod tokenize;

pub use chunk::{Chunk, Chunker, ChunkerConfig, Document, SourceKind};
pub use embed::{cosine, EmbedError, Embedder, EmbeddingVector, HashEmbedder, RemoteEmbedder, RemoteEmbedderConfig};
pub use ingest::{ingest, read_documents, IngestReport};
pub use store::{
    BundleSection, Hit, RetrievalBundle, SearchIndex, StoreSet, VectorStore, DEFAULT_K_PER_STORE,
    STORE_ORDER,
};
pub use tokenize::{MixedTokenizer, Tokenizer, WhitespaceTokenizer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("unknown store {0:?}")]
    StoreNotFound(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("store {store:?} holds {expected}-dim vectors, got {got}")]
    DimensionMismatch { store: String, expected: usize, got: usize },
    #[error("embedding failed: {0}")]
    Embed(#[from] EmbedError),
    #[error("store {store:?} failed: {message}")]
    Backend { store: String, message: String },
    #[error("snapshot {path}: {message}")]
    Snapshot { path: String, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid chunker config: {0}")]
    Config(String),
}

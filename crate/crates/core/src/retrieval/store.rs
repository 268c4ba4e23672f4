use std::cmp::Ordering;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::chunk::Chunk;
use super::embed::{cosine, Embedder, EmbeddingVector};
use super::RetrievalError;
use crate::exec::Execution;

/// Stores queried every turn, in bundle order.
pub const STORE_ORDER: [&str; 3] = ["therapy", "emotional", "helpline"];
pub const DEFAULT_K_PER_STORE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub chunk: Chunk,
    pub score: f64,
    pub store: String,
}

/// A named collection that answers top-k cosine queries.
pub trait SearchIndex: Send + Sync {
    fn name(&self) -> &str;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn add(&mut self, entries: Vec<(Chunk, EmbeddingVector)>) -> Result<usize, RetrievalError>;
    fn search(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<Hit>, RetrievalError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SnapshotRecord {
    chunk: Chunk,
    vector: EmbeddingVector,
}

/// Flat in-memory index: exhaustive cosine scan, ties broken by insertion order.
#[derive(Debug, Clone)]
pub struct VectorStore {
    name: String,
    dim: Option<usize>,
    entries: Vec<SnapshotRecord>,
    exec: Execution,
}

impl VectorStore {
    pub fn new(name: impl Into<String>) -> Self {
        VectorStore { name: name.into(), dim: None, entries: Vec::new(), exec: Execution::default() }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn chunks(&self) -> impl Iterator<Item = &Chunk> {
        self.entries.iter().map(|r| &r.chunk)
    }

    /// Drops every chunk of `doc_id`; returns how many were removed.
    pub fn remove_doc(&mut self, doc_id: &str) -> usize {
        let before = self.entries.len();
        self.entries.retain(|r| r.chunk.doc_id != doc_id);
        before - self.entries.len()
    }

    /// Writes one `{chunk, vector}` JSON object per line, via a temp file.
    pub fn save_snapshot(&self, path: &Path) -> Result<(), RetrievalError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("jsonl.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            for r in &self.entries {
                serde_json::to_writer(&mut w, r).map_err(|e| RetrievalError::Snapshot {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            w.get_ref().sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load_snapshot(name: impl Into<String>, path: &Path) -> Result<Self, RetrievalError> {
        let mut store = VectorStore::new(name);
        let reader = BufReader::new(File::open(path)?);
        let mut batch = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SnapshotRecord = serde_json::from_str(&line).map_err(|e| RetrievalError::Snapshot {
                path: path.display().to_string(),
                message: format!("line {}: {e}", lineno + 1),
            })?;
            batch.push((rec.chunk, rec.vector));
        }
        store.add(batch)?;
        Ok(store)
    }

    pub fn snapshot_path(dir: &Path, name: &str) -> PathBuf {
        dir.join(format!("{name}.jsonl"))
    }
}

impl SearchIndex for VectorStore {
    fn name(&self) -> &str {
        &self.name
    }

    fn len(&self) -> usize {
        self.entries.len()
    }

    fn add(&mut self, entries: Vec<(Chunk, EmbeddingVector)>) -> Result<usize, RetrievalError> {
        let count = entries.len();
        for (chunk, vector) in entries {
            let expected = *self.dim.get_or_insert(vector.dim());
            if vector.dim() != expected {
                return Err(RetrievalError::DimensionMismatch {
                    store: self.name.clone(),
                    expected,
                    got: vector.dim(),
                });
            }
            self.entries.push(SnapshotRecord { chunk, vector });
        }
        Ok(count)
    }

    fn search(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<Hit>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        if let Some(dim) = self.dim {
            if dim != query.dim() {
                return Err(RetrievalError::DimensionMismatch {
                    store: self.name.clone(),
                    expected: dim,
                    got: query.dim(),
                });
            }
        }
        let scores = self.exec.map(&self.entries, |r| cosine(&r.vector, query));
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        Ok(order
            .into_iter()
            .take(k)
            .map(|i| Hit { chunk: self.entries[i].chunk.clone(), score: scores[i], store: self.name.clone() })
            .collect())
    }
}

/// One store's slice of a bundle. A failed store carries its error message
/// instead of hits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSection {
    pub store: String,
    pub hits: Vec<Hit>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

/// Per-store ranked passages, sections in configured store order. Stores
/// with no hits and no failure are omitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievalBundle {
    pub sections: Vec<BundleSection>,
}

impl RetrievalBundle {
    pub fn is_empty(&self) -> bool {
        self.sections.iter().all(|s| s.hits.is_empty())
    }

    pub fn hit_count(&self) -> usize {
        self.sections.iter().map(|s| s.hits.len()).sum()
    }

    /// Concatenated passages with source attributions.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for section in &self.sections {
            for hit in &section.hits {
                out.push_str(&format!(
                    "[source: {}/{}#{}]\n{}\n\n",
                    section.store, hit.chunk.doc_id, hit.chunk.seq, hit.chunk.text
                ));
            }
        }
        out.trim_end().to_string()
    }
}

/// The named stores plus the embedder used to fill and query them.
pub struct StoreSet {
    embedder: Arc<dyn Embedder>,
    stores: Vec<Box<dyn SearchIndex>>,
    exec: Execution,
}

impl StoreSet {
    /// Empty stores named by [`STORE_ORDER`].
    pub fn new(embedder: Arc<dyn Embedder>) -> Self {
        let stores = STORE_ORDER
            .iter()
            .map(|n| Box::new(VectorStore::new(*n)) as Box<dyn SearchIndex>)
            .collect();
        StoreSet { embedder, stores, exec: Execution::default() }
    }

    /// Stores in the given order; bundle sections follow it.
    pub fn with_stores(embedder: Arc<dyn Embedder>, stores: Vec<Box<dyn SearchIndex>>) -> Self {
        StoreSet { embedder, stores, exec: Execution::default() }
    }

    /// Loads `<dir>/<name>.jsonl` for each of [`STORE_ORDER`]; missing
    /// snapshots give empty stores.
    pub fn load_dir(embedder: Arc<dyn Embedder>, dir: &Path) -> Result<Self, RetrievalError> {
        let mut stores: Vec<Box<dyn SearchIndex>> = Vec::new();
        for name in STORE_ORDER {
            let path = VectorStore::snapshot_path(dir, name);
            let store = if path.exists() { VectorStore::load_snapshot(name, &path)? } else { VectorStore::new(name) };
            stores.push(Box::new(store));
        }
        Ok(StoreSet::with_stores(embedder, stores))
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    pub fn store_names(&self) -> Vec<&str> {
        self.stores.iter().map(|s| s.name()).collect()
    }

    fn find(&self, name: &str) -> Result<&dyn SearchIndex, RetrievalError> {
        self.stores
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| RetrievalError::StoreNotFound(name.to_string()))
    }

    /// Embeds and appends `chunks`; returns how many were added.
    pub fn store_add(&mut self, name: &str, chunks: Vec<Chunk>) -> Result<usize, RetrievalError> {
        self.find(name)?;
        let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
        let vectors = self.embedder.embed_batch(&texts, self.exec);
        let mut entries = Vec::with_capacity(chunks.len());
        for (chunk, v) in chunks.into_iter().zip(vectors) {
            entries.push((chunk, v?));
        }
        let store = self
            .stores
            .iter_mut()
            .find(|s| s.name() == name)
            .ok_or_else(|| RetrievalError::StoreNotFound(name.to_string()))?;
        store.add(entries)
    }

    pub fn store_query(&self, name: &str, query: &EmbeddingVector, k: usize) -> Result<Vec<Hit>, RetrievalError> {
        self.find(name)?.search(query, k)
    }

    /// Queries every store concurrently and concatenates the sections in
    /// store order. A failing store is reported in its section; the call
    /// itself never fails.
    pub fn query_stores(&self, query_text: &str, k_per_store: usize) -> RetrievalBundle {
        let query = match self.embedder.embed(query_text) {
            Ok(q) => q,
            Err(super::EmbedError::EmptyInput) => return RetrievalBundle::default(),
            Err(e) => {
                let sections = self
                    .stores
                    .iter()
                    .map(|s| BundleSection {
                        store: s.name().to_string(),
                        hits: Vec::new(),
                        failure: Some(format!("query embedding failed: {e}")),
                    })
                    .collect();
                return RetrievalBundle { sections };
            }
        };
        let results = self.exec.map(&self.stores, |s| (s.name().to_string(), s.search(&query, k_per_store)));
        let sections = results
            .into_iter()
            .filter_map(|(store, r)| match r {
                Ok(hits) if hits.is_empty() => None,
                Ok(hits) => Some(BundleSection { store, hits, failure: None }),
                Err(e) => {
                    tracing::warn!(%store, error = %e, "store query failed; continuing without it");
                    Some(BundleSection { store, hits: Vec::new(), failure: Some(e.to_string()) })
                }
            })
            .collect();
        RetrievalBundle { sections }
    }
}

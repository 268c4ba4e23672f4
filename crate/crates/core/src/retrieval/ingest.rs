use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use super::chunk::{Chunker, Document, SourceKind};
use super::embed::Embedder;
use super::store::{SearchIndex, VectorStore, STORE_ORDER};
use super::tokenize::is_cjk;
use super::RetrievalError;
use crate::exec::Execution;
use crate::lang::Language;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents: usize,
    pub chunks: usize,
    /// Documents whose earlier chunks were replaced (same doc_id).
    pub replaced: usize,
    /// One message per skipped record.
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct JsonlDocument {
    #[serde(default)]
    doc_id: Option<String>,
    text: String,
    source_kind: SourceKind,
    lang: String,
}

fn default_kind(store: &str) -> SourceKind {
    match store {
        "emotional" => SourceKind::Emotional,
        "helpline" => SourceKind::Helpline,
        _ => SourceKind::Guide,
    }
}

fn guess_lang(text: &str) -> Language {
    if text.chars().any(|c| is_cjk(c) && c.is_alphabetic()) {
        Language::Zh
    } else {
        Language::En
    }
}

fn content_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Reads `.txt` (one document per file) and `.jsonl` documents under `path`
/// (a file or directory) destined for `store`. Bad records become warnings.
pub fn read_documents(path: &Path, store: &str) -> Result<(Vec<Document>, Vec<String>), RetrievalError> {
    let mut docs = Vec::new();
    let mut warnings = Vec::new();
    let mut files: Vec<_> = WalkDir::new(path)
        .into_iter()
        .filter_map(|e| match e {
            Ok(e) if e.file_type().is_file() => Some(e.into_path()),
            Ok(_) => None,
            Err(err) => {
                warnings.push(format!("walk error: {err}"));
                None
            }
        })
        .collect();
    files.sort();
    for file in files {
        let ext = file.extension().and_then(|e| e.to_str()).unwrap_or_default();
        let shown = file.display().to_string();
        match ext {
            "txt" => {
                let text = match std::fs::read_to_string(&file) {
                    Ok(t) => t,
                    Err(e) => {
                        warnings.push(format!("{shown}: {e}"));
                        continue;
                    }
                };
                if text.trim().is_empty() {
                    warnings.push(format!("{shown}: empty document"));
                    continue;
                }
                let doc_id = file
                    .strip_prefix(path)
                    .ok()
                    .filter(|p| !p.as_os_str().is_empty())
                    .unwrap_or(&file)
                    .with_extension("")
                    .to_string_lossy()
                    .replace('\\', "/");
                let doc_id = if doc_id.is_empty() { content_id(&text) } else { doc_id };
                docs.push(Document { doc_id, source_kind: default_kind(store), lang: guess_lang(&text), text });
            }
            "jsonl" => {
                let content = match std::fs::read_to_string(&file) {
                    Ok(t) => t,
                    Err(e) => {
                        warnings.push(format!("{shown}: {e}"));
                        continue;
                    }
                };
                for (i, line) in content.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let at = format!("{shown}:{}", i + 1);
                    let rec: JsonlDocument = match serde_json::from_str(line) {
                        Ok(r) => r,
                        Err(e) => {
                            warnings.push(format!("{at}: malformed record: {e}"));
                            continue;
                        }
                    };
                    let Ok(lang) = rec.lang.parse::<Language>() else {
                        warnings.push(format!("{at}: unsupported language {:?}", rec.lang));
                        continue;
                    };
                    if rec.text.trim().is_empty() {
                        warnings.push(format!("{at}: empty text"));
                        continue;
                    }
                    if rec.source_kind.store_name() != store {
                        warnings.push(format!(
                            "{at}: source_kind {:?} belongs in store {:?}, not {store:?}",
                            rec.source_kind,
                            rec.source_kind.store_name()
                        ));
                        continue;
                    }
                    let doc_id = rec.doc_id.unwrap_or_else(|| content_id(&rec.text));
                    docs.push(Document { doc_id, source_kind: rec.source_kind, lang, text: rec.text });
                }
            }
            _ => {}
        }
    }
    Ok((docs, warnings))
}

/// Chunks, embeds and persists documents into `<store_dir>/<store>.jsonl`.
/// Re-ingesting a doc_id replaces its earlier chunks.
pub fn ingest(
    path: &Path,
    store: &str,
    store_dir: &Path,
    embedder: &dyn Embedder,
    chunker: &Chunker,
    exec: Execution,
) -> Result<IngestReport, RetrievalError> {
    if !STORE_ORDER.contains(&store) {
        return Err(RetrievalError::StoreNotFound(store.to_string()));
    }
    let (docs, mut warnings) = read_documents(path, store)?;
    let snapshot = VectorStore::snapshot_path(store_dir, store);
    let mut vs = if snapshot.exists() {
        VectorStore::load_snapshot(store, &snapshot)?
    } else {
        VectorStore::new(store)
    }
    .with_execution(exec);

    let mut report = IngestReport::default();
    let mut seen = std::collections::HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.doc_id.clone()) {
            warnings.push(format!("duplicate doc_id {:?} in input; keeping the first", doc.doc_id));
            continue;
        }
        if vs.remove_doc(&doc.doc_id) > 0 {
            report.replaced += 1;
        }
        let chunks = chunker.chunk_document(doc);
        let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
        let vectors = embedder.embed_batch(&texts, exec);
        let mut entries = Vec::with_capacity(chunks.len());
        for (chunk, v) in chunks.into_iter().zip(vectors) {
            match v {
                Ok(v) => entries.push((chunk, v)),
                Err(e) => warnings.push(format!("{}#{}: {e}", chunk.doc_id, chunk.seq)),
            }
        }
        report.chunks += vs.add(entries)?;
        report.documents += 1;
    }
    vs.save_snapshot(&snapshot)?;
    for w in &warnings {
        tracing::warn!("{w}");
    }
    report.warnings = warnings;
    Ok(report)
}

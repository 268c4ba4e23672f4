use std::sync::Arc;

use proptest::prelude::*;
use screener_core::exec::Execution;
use screener_core::retrieval::{
    ingest, Chunker, Embedder, HashEmbedder, SearchIndex, StoreSet, VectorStore, WhitespaceTokenizer, STORE_ORDER,
};

fn words(seed: usize, n: usize) -> String {
    (0..n).map(|i| format!("w{}x{}", seed, i % 97)).collect::<Vec<_>>().join(" ")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chunks_cover_with_fixed_overlap(n in 1usize..3000) {
        let text = (0..n).map(|i| format!("t{i}")).collect::<Vec<_>>().join(" ");
        let chunks = Chunker::default().chunk_text("d", &text);
        prop_assert_eq!(chunks[0].token_start, 0);
        prop_assert_eq!(chunks.last().unwrap().token_end, n);
        for c in &chunks {
            prop_assert!(c.token_end - c.token_start <= 512);
            let expected: Vec<String> = (c.token_start..c.token_end).map(|i| format!("t{i}")).collect();
            prop_assert_eq!(c.text.split_whitespace().collect::<Vec<_>>(), expected);
        }
        for pair in chunks.windows(2) {
            prop_assert_eq!(pair[0].token_end - pair[1].token_start, 102);
        }
    }

    #[test]
    fn sections_keep_store_order(keys in proptest::collection::vec(any::<u32>(), 3)) {
        let mut perm: Vec<&str> = STORE_ORDER.to_vec();
        perm.sort_by_key(|n| keys[STORE_ORDER.iter().position(|s| s == n).unwrap()]);
        for exec in [Execution::Sequential, Execution::Parallel] {
            let set = populated(&perm).with_execution(exec);
            let bundle = set.query_stores("worry", 3);
            let names: Vec<&str> = bundle.sections.iter().map(|s| s.store.as_str()).collect();
            prop_assert_eq!(&names, &perm);
        }
    }
}

fn populated(order: &[&str]) -> StoreSet {
    let stores = order.iter().map(|n| Box::new(VectorStore::new(*n)) as Box<dyn SearchIndex>).collect();
    let mut set = StoreSet::with_stores(Arc::new(HashEmbedder::default()), stores);
    for name in order {
        let chunks = Chunker::default().chunk_text(&format!("{name}-doc"), "calm breathing helps with worry");
        set.store_add(name, chunks).unwrap();
    }
    set
}

#[test]
fn ingest_then_self_query() {
    let src = tempfile::tempdir().unwrap();
    let stores = tempfile::tempdir().unwrap();
    for d in 0..4 {
        std::fs::write(src.path().join(format!("session{d}.txt")), words(d, 1500)).unwrap();
    }
    let embedder = HashEmbedder::default();
    let chunker = Chunker::new(Default::default(), Arc::new(WhitespaceTokenizer)).unwrap();
    let report = ingest(src.path(), "therapy", stores.path(), &embedder, &chunker, Execution::Parallel).unwrap();
    assert_eq!(report.documents, 4);
    let again = ingest(src.path(), "therapy", stores.path(), &embedder, &chunker, Execution::Sequential).unwrap();
    assert_eq!(again.chunks, report.chunks);

    let set = StoreSet::load_dir(Arc::new(HashEmbedder::default()), stores.path()).unwrap();
    let store = VectorStore::load_snapshot("therapy", &VectorStore::snapshot_path(stores.path(), "therapy")).unwrap();
    assert_eq!(store.len(), report.chunks);
    for chunk in store.chunks() {
        let q = embedder.embed(&chunk.text).unwrap();
        let top = set.store_query("therapy", &q, 1).unwrap();
        assert_eq!((&top[0].chunk.doc_id, top[0].chunk.seq), (&chunk.doc_id, chunk.seq));
    }
}

#[test]
fn parallel_and_sequential_scans_agree() {
    let embedder = HashEmbedder::default();
    let texts: Vec<String> = (0..300).map(|i| words(i, 40)).collect();
    let vectors = embedder.embed_batch(&texts, Execution::Parallel);
    let seq_vectors = embedder.embed_batch(&texts, Execution::Sequential);
    assert_eq!(vectors, seq_vectors);
    let mut results = Vec::new();
    for exec in [Execution::Sequential, Execution::Parallel] {
        let mut store = VectorStore::new("emotional").with_execution(exec);
        let chunker = Chunker::default();
        let entries = texts
            .iter()
            .enumerate()
            .flat_map(|(i, t)| chunker.chunk_text(&format!("d{i}"), t))
            .zip(vectors.iter().cloned().map(Result::unwrap))
            .collect();
        store.add(entries).unwrap();
        results.push(store.search(&embedder.embed("w3x1 w3x2 w7x9").unwrap(), 10).unwrap());
    }
    assert_eq!(results[0], results[1]);
}

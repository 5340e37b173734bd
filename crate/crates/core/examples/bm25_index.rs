//! Build a BM25 index over a JSONL corpus, persist it, reload it and query it.
//!
//! cargo run --example bm25_index -- [corpus.jsonl] [query]

use sara::pipeline::chunk_corpus;
use sara::retrieval::{build_index, load_index, persist_index};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let corpus = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus50.jsonl").into());
    let query = args.next().unwrap_or_else(|| "sediment in the river delta".into());

    let (docs, chunks) = chunk_corpus(&corpus, 256)?;
    let index = build_index(&chunks)?;
    println!(
        "{docs} documents, {} chunks, {} terms, avg chunk {:.1} tokens",
        index.doc_count(),
        index.vocabulary_size(),
        index.avg_chunk_len()
    );

    let dir = std::env::temp_dir().join("sara-bm25-example");
    persist_index(&index, &dir)?;
    let index = load_index(&dir)?;
    println!("reloaded from {}", dir.display());

    for hit in index.retrieve_top_n(&query, 5)? {
        println!("{:>2}. {:<12} {:.4}", hit.rank, hit.chunk_ref.as_str(), hit.retrieval_score);
    }
    let terms = index.query_terms(&query);
    for t in &terms {
        println!("idf({t}) = {:.4}", index.idf(t));
    }
    Ok(())
}

//! Rank chunks by cosine similarity of hash-stub embeddings.
//!
//! Set SARA_EMBED_URL to route through a remote embedding service instead.
//!
//! cargo run --example dense_retrieval

use sara::embed::EmbedBackendConfig;
use sara::pipeline::chunk_corpus;
use sara::retrieval::{build_index, DenseIndex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (_, chunks) = chunk_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus50.jsonl"), 256)?;
    let index = build_index(&chunks)?;
    let backend = EmbedBackendConfig::hash_stub(256).with_env_defaults().build()?;

    let dense = DenseIndex::build(&index, backend.as_ref())?;
    let query = "absorption lines in a stellar spectrum";
    for hit in dense.retrieve(&index, query, 5, backend.as_ref())? {
        println!("{:>2}. {:<12} cos {:.4}", hit.rank, hit.chunk_ref.as_str(), hit.retrieval_score);
    }
    println!("bm25 for comparison:");
    for hit in index.retrieve_top_n(query, 5)? {
        println!("{:>2}. {:<12} {:.4}", hit.rank, hit.chunk_ref.as_str(), hit.retrieval_score);
    }
    Ok(())
}

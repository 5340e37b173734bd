//! Greedy evidence selection over BM25 candidates with both strategies.
//!
//! cargo run --example evidence_selection

use sara::pipeline::{chunk_corpus, Engine, RunConfig};
use sara::retrieval::build_index;
use sara::select::{SelectionConfig, Strategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (_, chunks) = chunk_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus50.jsonl"), 256)?;
    let engine = Engine::new(build_index(&chunks)?, RunConfig::default())?;
    let query = "trade routes across the desert";

    for hit in engine.retrieve(query, 10)? {
        println!("retrieved {:>2}. {}", hit.rank, hit.chunk_ref.as_str());
    }
    for strategy in [Strategy::Emb, Strategy::Csi] {
        let evidence = engine.select_with(query, &SelectionConfig::new(strategy, 10, 5))?;
        println!("-- {}", strategy.as_str());
        evidence.write_trace(std::io::stdout())?;
    }
    Ok(())
}

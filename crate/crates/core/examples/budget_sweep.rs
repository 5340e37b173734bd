//! Emit one request per natural-context count k = 0..=N and report usage.
//!
//! cargo run --example budget_sweep

use sara::pipeline::{chunk_corpus, Engine, RunConfig};
use sara::retrieval::build_index;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (_, chunks) = chunk_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus50.jsonl"), 256)?;
    let mut config = RunConfig::default();
    config.total_contexts = Some(10);
    let engine = Engine::new(build_index(&chunks)?, config)?;

    println!(" k  natural  vectors  total  status");
    for entry in engine.sweep("walls rebuilt after a siege")? {
        let u = &entry.prompt.usage;
        println!(
            "{:>2}  {:>7}  {:>7}  {:>5}  {}",
            entry.k,
            u.natural_tokens,
            u.vector_count,
            u.total_tokens,
            serde_json::to_string(&entry.status)?
        );
    }
    Ok(())
}

//! Assemble a mixed prompt: the first k contexts as text, the rest as one
//! embedding per sentence, fitted to a token budget.
//!
//! cargo run --example hybrid_prompt

use sara::assemble::{parse_request, serialize_request, Segment};
use sara::pipeline::{chunk_corpus, BudgetModeName, Engine, RunConfig};
use sara::retrieval::build_index;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (_, chunks) = chunk_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus50.jsonl"), 256)?;
    let mut config = RunConfig::default();
    config.budget_mode = BudgetModeName::BudgetFit;
    config.budget_tokens = 512;
    let engine = Engine::new(build_index(&chunks)?, config)?;

    let out = engine.assemble("how did the river delta change?")?;
    println!("k = {} natural, {} compressed", out.k, out.compressed.len());
    println!("usage: {}", serde_json::to_string(&out.usage)?);
    for seg in &out.request.segments {
        match seg {
            Segment::Text { content } => println!("text   {} chars", content.len()),
            Segment::Vectors { origin, vectors } => {
                println!("vector {} x{} from {}", vectors[0].dim(), vectors.len(), origin.as_str())
            }
        }
    }

    let wire = serialize_request(&out.request);
    assert_eq!(parse_request(&wire)?, out.request);
    println!("{} bytes on the wire", wire.len());
    println!("{}", out.request.display_prompt());
    Ok(())
}

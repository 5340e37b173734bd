//! Split a document into sentence-aligned chunks under a token budget.
//!
//! cargo run --example chunking

use sara::textcore::{chunk_document, count_tokens, split_sentences, tokenize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "Dr. Okafor mapped the delta in 1998. The river moved 3.5 km east. \
                Nobody expected that! Sediment cores confirmed it a year later.";

    println!("tokens: {:?}", tokenize("The river moved 3.5 km east."));
    for s in split_sentences(text) {
        println!("sentence ({:>2} tokens): {}", s.token_count, s.text);
    }

    // Small budget so the document spans several chunks.
    for chunk in chunk_document("delta", text, 16)? {
        println!(
            "{} [{} tokens, {} sentences] {}",
            chunk.id,
            chunk.token_count,
            chunk.sentences.len(),
            chunk.text
        );
        assert_eq!(chunk.token_count, count_tokens(&chunk.text));
    }
    Ok(())
}

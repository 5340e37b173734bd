//! Conditional self-information under a smoothed n-gram proxy model.
//!
//! cargo run --example csi_scoring

use sara::proxylm::{csi_score, train_ngram};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let unigram = train_ngram(&["a a b"], 1, 1.0)?;
    let s = csi_score(&unigram, "a b", &[])?;
    println!("unigram csi(\"a b\") = {:.4} nats over {} tokens", s.value, s.token_count);

    let seen = "the tide carries salt into the delta every spring";
    let model = train_ngram(&[seen], 2, 0.1)?;
    for candidate in [seen, "the tide carries salt", "quartz zebra violin"] {
        let alone = csi_score(&model, candidate, &[])?.value;
        let after = csi_score(&model, candidate, &[seen])?.value;
        println!("{candidate:<52} alone {alone:.3}  after seen text {after:.3}");
    }
    Ok(())
}

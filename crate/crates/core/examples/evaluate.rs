//! Token F1 and ROUGE-L over predictions with multiple references.
//!
//! cargo run --example evaluate

use sara::evalkit::{evaluate_run, evaluate_run_with, rouge_l, token_f1, write_csv, EvalRecord, Normalization};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("f1      {:.4}", token_f1("the cat sat", "cat sat down"));
    println!("rouge-l {:.4}", rouge_l("a b c d", "a c d"));

    let records = vec![
        EvalRecord {
            id: "q1".into(),
            prediction: "The Danube delta".into(),
            references: vec!["Danube delta".into(), "the delta of the Danube".into()],
        },
        EvalRecord {
            id: "q2".into(),
            prediction: "in 1998".into(),
            references: vec!["1998".into()],
        },
    ];
    let lexical = evaluate_run(&records)?;
    let squad = evaluate_run_with(&records, Normalization::squad())?;
    println!("lexical: f1 {:.4} rouge-l {:.4}", lexical.mean_f1, lexical.mean_rouge_l);
    println!("squad:   f1 {:.4} rouge-l {:.4}", squad.mean_f1, squad.mean_rouge_l);
    write_csv(&lexical, std::io::stdout())?;
    Ok(())
}

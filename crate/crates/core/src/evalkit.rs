//! Lexical answer metrics: token F1 and ROUGE-L, plus a batch scorer.
//!
//! Answers are compared as token sequences after lowercasing, dropping ASCII
//! punctuation and collapsing whitespace. Article removal (`a`, `an`, `the`)
//! is part of [`normalize_answer`] but opt-in for the metrics through
//! [`Normalization::squad`].

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no records to evaluate")]
    Empty,
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("record {0} has no references")]
    NoReferences(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("prediction {0} has no gold answers")]
    MissingGold(String),
    #[error("gold answers for {0} have no prediction")]
    MissingPrediction(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Text normalization applied before scoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    pub strip_articles: bool,
}

impl Normalization {
    /// Lowercase, punctuation and whitespace only. Used by [`token_f1`],
    /// [`rouge_l`] and [`evaluate_run`].
    pub const LEXICAL: Self = Self { strip_articles: false };

    pub fn squad() -> Self {
        Self { strip_articles: true }
    }

    pub fn apply(self, text: &str) -> String {
        let lowered: String = text
            .chars()
            .flat_map(char::to_lowercase)
            .filter(|c| !c.is_ascii_punctuation())
            .collect();
        lowered
            .split_whitespace()
            .filter(|w| !(self.strip_articles && matches!(*w, "a" | "an" | "the")))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Lowercase, strip punctuation, remove articles, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    Normalization::squad().apply(text)
}

fn normalized_tokens(text: &str, norm: Normalization) -> Vec<String> {
    norm.apply(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn f_measure(overlap: usize, pred_len: usize, ref_len: usize) -> f64 {
    match (pred_len, ref_len) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ if overlap == 0 => 0.0,
        _ => {
            let p = overlap as f64 / pred_len as f64;
            let r = overlap as f64 / ref_len as f64;
            2.0 * p * r / (p + r)
        }
    }
}

/// Bag-of-tokens F1.
pub fn token_f1(prediction: &str, reference: &str) -> f64 {
    token_f1_with(prediction, reference, Normalization::LEXICAL)
}

pub fn token_f1_with(prediction: &str, reference: &str, norm: Normalization) -> f64 {
    let pred = normalized_tokens(prediction, norm);
    let gold = normalized_tokens(reference, norm);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0;
    for t in &pred {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    f_measure(overlap, pred.len(), gold.len())
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.len() <= 64 {
        lcs_len_bits(short, long)
    } else {
        lcs_len_dp(short, long)
    }
}

// Bit-parallel row update: bit i of `v` is cleared once short[..=i] has
// contributed a match, so the zero count is the LCS length.
fn lcs_len_bits<T: PartialEq>(short: &[T], long: &[T]) -> usize {
    let width = short.len();
    if width == 0 {
        return 0;
    }
    let live = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    let mut v = u64::MAX;
    for y in long {
        let mut matches = 0u64;
        for (i, x) in short.iter().enumerate() {
            matches |= u64::from(x == y) << i;
        }
        let u = v & matches;
        v = v.wrapping_add(u) | (v & !matches);
    }
    width - (v & live).count_ones() as usize
}

fn lcs_len_dp<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L F-measure with beta 1.
pub fn rouge_l(prediction: &str, reference: &str) -> f64 {
    rouge_l_with(prediction, reference, Normalization::LEXICAL)
}

pub fn rouge_l_with(prediction: &str, reference: &str, norm: Normalization) -> f64 {
    let pred = normalized_tokens(prediction, norm);
    let gold = normalized_tokens(reference, norm);
    rouge_l_tokens(&pred, &gold)
}

/// ROUGE-L over already tokenized sequences.
pub fn rouge_l_tokens<T: PartialEq>(prediction: &[T], reference: &[T]) -> f64 {
    f_measure(lcs_len(prediction, reference), prediction.len(), reference.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub prediction: String,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub id: String,
    pub f1: f64,
    pub rouge_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub count: usize,
    pub mean_f1: f64,
    pub mean_rouge_l: f64,
    pub per_record: Vec<RecordScore>,
}

fn best_over<F: Fn(&str, &str, Normalization) -> f64>(
    metric: F,
    prediction: &str,
    references: &[String],
    norm: Normalization,
) -> f64 {
    references
        .iter()
        .map(|r| metric(prediction, r, norm))
        .fold(0.0, f64::max)
}

/// Scores every record against its best-matching reference.
pub fn evaluate_run(records: &[EvalRecord]) -> Result<MetricReport, EvalError> {
    evaluate_run_with(records, Normalization::LEXICAL)
}

pub fn evaluate_run_with(records: &[EvalRecord], norm: Normalization) -> Result<MetricReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(EvalError::DuplicateId(r.id.clone()));
        }
        if r.references.is_empty() {
            return Err(EvalError::NoReferences(r.id.clone()));
        }
    }
    let per_record: Vec<RecordScore> = records
        .iter()
        .map(|r| RecordScore {
            id: r.id.clone(),
            f1: best_over(token_f1_with, &r.prediction, &r.references, norm),
            rouge_l: best_over(rouge_l_with, &r.prediction, &r.references, norm),
        })
        .collect();
    let n = per_record.len() as f64;
    Ok(MetricReport {
        count: per_record.len(),
        mean_f1: per_record.iter().map(|s| s.f1).sum::<f64>() / n,
        mean_rouge_l: per_record.iter().map(|s| s.rouge_l).sum::<f64>() / n,
        per_record,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub prediction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gold {
    pub id: String,
    pub answers: Vec<String>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>, R: BufRead>(reader: R) -> Result<Vec<T>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<Prediction>, EvalError> {
    read_jsonl(reader)
}

pub fn read_gold<R: BufRead>(reader: R) -> Result<Vec<Gold>, EvalError> {
    read_jsonl(reader)
}

/// Pairs predictions with gold answers by id, in prediction order. Every
/// prediction needs gold answers and every gold entry needs a prediction.
pub fn join_records(predictions: Vec<Prediction>, gold: Vec<Gold>) -> Result<Vec<EvalRecord>, EvalError> {
    let mut answers: HashMap<String, Vec<String>> = HashMap::new();
    for g in gold {
        if answers.insert(g.id.clone(), g.answers).is_some() {
            return Err(EvalError::DuplicateId(g.id));
        }
    }
    let mut records = Vec::with_capacity(predictions.len());
    for p in predictions {
        let references = answers
            .remove(&p.id)
            .ok_or_else(|| EvalError::MissingGold(p.id.clone()))?;
        records.push(EvalRecord {
            id: p.id,
            prediction: p.prediction,
            references,
        });
    }
    if let Some(id) = answers.into_keys().min() {
        return Err(EvalError::MissingPrediction(id));
    }
    Ok(records)
}

pub fn evaluate_files(
    pred: impl AsRef<Path>,
    gold: impl AsRef<Path>,
    norm: Normalization,
) -> Result<MetricReport, EvalError> {
    let open = |p: &Path| std::fs::File::open(p).map(std::io::BufReader::new);
    let predictions = read_predictions(open(pred.as_ref())?)?;
    let gold = read_gold(open(gold.as_ref())?)?;
    evaluate_run_with(&join_records(predictions, gold)?, norm)
}

/// Per-record rows as CSV with header `id,f1,rouge_l`.
pub fn write_csv<W: Write>(report: &MetricReport, out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    for row in &report.per_record {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

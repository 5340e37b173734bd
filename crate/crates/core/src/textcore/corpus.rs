use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chunk::Document;
use super::TextError;

/// One line of a corpus JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

impl CorpusRecord {
    pub fn into_document(self, chunk_size: usize) -> Result<Document, TextError> {
        Document::new(self.id, self.title, self.text, chunk_size)
    }
}

/// Reads JSONL corpus records. Blank lines are skipped; ids must be unique.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusRecord>, TextError> {
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(&line).map_err(|e| TextError::Corpus {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(TextError::DuplicateDocument(record.id));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>, TextError> {
    read_corpus(BufReader::new(File::open(path)?))
}

use serde::{Deserialize, Serialize};

use super::sentence::{split_sentences_with, Sentence};
use super::tokenize::{RuleTokenizer, Tokenizer};
use super::TextError;

/// A token-bounded run of whole sentences from one document.
///
/// `text` is the sentences joined with a single space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: String,
    pub doc_id: String,
    pub seq_no: u32,
    pub text: String,
    pub token_count: usize,
    pub sentences: Vec<Sentence>,
}

impl Chunk {
    /// Builds a chunk from already split sentences.
    pub fn from_sentences(
        doc_id: &str,
        seq_no: u32,
        sentences: Vec<Sentence>,
        tokenizer: &dyn Tokenizer,
    ) -> Self {
        let text = sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        Self {
            id: Self::make_id(doc_id, seq_no),
            doc_id: doc_id.to_string(),
            seq_no,
            token_count: tokenizer.count_tokens(&text),
            text,
            sentences,
        }
    }

    pub fn make_id(doc_id: &str, seq_no: u32) -> String {
        format!("{doc_id}#{seq_no}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: Option<String>,
    pub text: String,
    pub chunks: Vec<Chunk>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        title: Option<String>,
        text: impl Into<String>,
        chunk_size: usize,
    ) -> Result<Self, TextError> {
        let id = id.into();
        let text = text.into();
        let chunks = chunk_document(&id, &text, chunk_size)?;
        Ok(Self {
            id,
            title,
            text,
            chunks,
        })
    }
}

/// Chunks with the `rule-v1` tokenizer.
pub fn chunk_document(doc_id: &str, text: &str, chunk_size: usize) -> Result<Vec<Chunk>, TextError> {
    chunk_document_with(&RuleTokenizer, doc_id, text, chunk_size)
}

/// Greedily packs sentences into chunks of at most `chunk_size` tokens.
///
/// A sentence that would overflow the current chunk starts a new one. A
/// sentence longer than `chunk_size` on its own is cut at token boundaries
/// into pieces of at most `chunk_size` tokens, each of which is then packed
/// like an ordinary sentence.
pub fn chunk_document_with(
    tokenizer: &dyn Tokenizer,
    doc_id: &str,
    text: &str,
    chunk_size: usize,
) -> Result<Vec<Chunk>, TextError> {
    if chunk_size == 0 {
        return Err(TextError::InvalidChunkSize);
    }

    let mut chunks = Vec::new();
    let mut current: Vec<Sentence> = Vec::new();
    let mut current_tokens = 0usize;

    let flush = |current: &mut Vec<Sentence>, chunks: &mut Vec<Chunk>| {
        if !current.is_empty() {
            let seq_no = chunks.len() as u32;
            chunks.push(Chunk::from_sentences(
                doc_id,
                seq_no,
                std::mem::take(current),
                tokenizer,
            ));
        }
    };

    for sentence in split_sentences_with(tokenizer, text) {
        let pieces = if sentence.token_count > chunk_size {
            hard_split(tokenizer, &sentence.text, chunk_size)
        } else {
            vec![sentence]
        };
        for piece in pieces {
            if !current.is_empty() && current_tokens + piece.token_count > chunk_size {
                flush(&mut current, &mut chunks);
                current_tokens = 0;
            }
            current_tokens += piece.token_count;
            current.push(piece);
        }
    }
    flush(&mut current, &mut chunks);
    Ok(chunks)
}

fn hard_split(tokenizer: &dyn Tokenizer, text: &str, chunk_size: usize) -> Vec<Sentence> {
    tokenizer
        .token_spans(text)
        .chunks(chunk_size)
        .map(|window| {
            let start = window[0].start;
            let end = window[window.len() - 1].end;
            Sentence::new(&text[start..end], tokenizer)
        })
        .collect()
}

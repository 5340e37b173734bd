//! Tokenization, sentence splitting and sentence-aware chunking.
//!
//! Every function here is pure. The default tokenizer is [`RuleTokenizer`]
//! (profile `rule-v1`); all token budgets in this crate are expressed in its
//! tokens unless a different [`Tokenizer`] is plugged in.

mod chunk;
mod corpus;
mod sentence;
mod tokenize;

pub use chunk::{chunk_document, chunk_document_with, Chunk, Document};
pub use corpus::{load_corpus, read_corpus, CorpusRecord};
pub use sentence::{split_sentences, split_sentences_with, Sentence, ABBREVIATIONS, ABBREVIATIONS_VERSION};
pub use tokenize::{count_tokens, tokenize, RuleTokenizer, Tokenizer, TokenizerProfile};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("chunk size must be at least 1")]
    InvalidChunkSize,
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Chunk-level retrieval: a BM25 inverted index with on-disk persistence and
//! a dense cosine-similarity mode over any [`EmbedBackend`](crate::embed::EmbedBackend).
//!
//! Both modes return [`RetrievedContext`] lists ranked by descending score,
//! with exact score ties ordered by `(doc_id, seq_no)` ascending.

mod dense;
mod index;
mod persist;

pub use dense::{retrieve_dense, DenseIndex};
pub use index::{build_index, Bm25Params, ChunkRecord, ChunkRef, Index, RetrievedContext};
pub use persist::{load_index, load_index_with, persist_index, FORMAT_VERSION};

use std::path::PathBuf;

use thiserror::Error;

use crate::embed::EmbedError;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("duplicate chunk id {0:?}")]
    DuplicateChunk(String),
    #[error("unknown chunk {0:?}")]
    UnknownChunk(String),
    #[error("result count n must be at least 1")]
    InvalidN,
    #[error("missing manifest in {}", .0.display())]
    MissingManifest(PathBuf),
    #[error("missing index file {0}")]
    MissingFile(&'static str),
    #[error("version mismatch: index format {found}, supported {supported}")]
    VersionMismatch { found: u64, supported: u32 },
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("corrupt postings: {0}")]
    CorruptPostings(String),
    #[error("corrupt chunk table: {0}")]
    CorruptChunks(String),
    #[error("tokenizer mismatch: index built with {found}, loader has {expected}")]
    TokenizerMismatch { expected: String, found: String },
    #[error("dense retrieval failed: {0}")]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

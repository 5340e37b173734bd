//! Embedding vectors and the `Enc(·)` backends that produce them.
//!
//! Two backends ship in-tree: [`HashStub`], a deterministic feature-hashing
//! encoder that needs no model, and [`RemoteEmbedder`], a client for an
//! external embedding service. Compression-side projection maps trained
//! elsewhere are applied with [`apply_projection`].

mod backend;
mod projection;
mod remote;
mod vector;

pub use backend::{embed_text, fnv1a64, BackendKind, EmbedBackend, EmbedBackendConfig, HashStub, EMBED_URL_ENV, SIGN_SALT};
pub use projection::{apply_projection, ProjectionMap};
pub use remote::RemoteEmbedder;
pub use vector::{aggregate_mean, cosine_similarity, expand_query, normalize_vector, EmbeddingVector};

use thiserror::Error;

use crate::http::HttpError;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot aggregate an empty list of vectors")]
    EmptyList,
    #[error("cannot normalize zero vector")]
    ZeroVector,
    #[error("projection overflow")]
    ProjectionOverflow,
    #[error("invalid projection map: {0}")]
    InvalidProjection(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("embedding service transport failure: {0}")]
    Transport(String),
    #[error("embedding service returned status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("embedding service returned dimension {found}, configured {expected}")]
    RemoteDimension { expected: usize, found: usize },
    #[error("malformed embedding response: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<HttpError> for EmbedError {
    fn from(err: HttpError) -> Self {
        match err {
            HttpError::Transport(msg) => EmbedError::Transport(msg),
            HttpError::Status { code, body } => EmbedError::Status { code, body },
            HttpError::Decode(msg) => EmbedError::Malformed(msg),
        }
    }
}

impl EmbedError {
    /// True for failures of an external service rather than of local data.
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            EmbedError::Transport(_)
                | EmbedError::Status { .. }
                | EmbedError::RemoteDimension { .. }
                | EmbedError::Malformed(_)
        )
    }
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::remote::RemoteEmbedder;
use super::vector::{normalize_vector, EmbeddingVector};
use super::EmbedError;
use crate::textcore::{RuleTokenizer, Tokenizer};

/// Environment variable holding the default remote embedding endpoint.
pub const EMBED_URL_ENV: &str = "SARA_EMBED_URL";

/// Byte XOR-ed into every token byte before hashing for the sign bit.
pub const SIGN_SALT: u8 = 0x5a;

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

fn salted_fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |hash, &b| {
        (hash ^ u64::from(b ^ SIGN_SALT)).wrapping_mul(FNV_PRIME)
    })
}

/// An `Enc(·)` implementation. Output order always matches input order.
pub trait EmbedBackend: Send + Sync {
    fn dim(&self) -> usize;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

pub fn embed_text(backend: &dyn EmbedBackend, text: &str) -> Result<EmbeddingVector, EmbedError> {
    let mut out = backend.embed_batch(&[text])?;
    out.pop()
        .ok_or_else(|| EmbedError::Malformed("backend returned no vector".into()))
}

/// Deterministic feature-hashing encoder.
///
/// Each `rule-v1` token adds ±1 to slot `fnv1a64(token) mod dim`; the sign is
/// `+` when the FNV-1a-64 of the token bytes XOR-ed with [`SIGN_SALT`] is
/// even. Tokens are folded in text order and the result is L2-normalized
/// unless it is all zeros.
#[derive(Debug, Clone)]
pub struct HashStub {
    dim: usize,
    normalize_output: bool,
}

impl HashStub {
    pub fn new(dim: usize) -> Result<Self, EmbedError> {
        Self::with_normalization(dim, true)
    }

    pub fn with_normalization(dim: usize, normalize_output: bool) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::ZeroDimension);
        }
        Ok(Self {
            dim,
            normalize_output,
        })
    }

    pub fn slot_and_sign(&self, token: &str) -> (usize, f32) {
        let slot = (fnv1a64(token.as_bytes()) % self.dim as u64) as usize;
        let sign = if salted_fnv1a64(token.as_bytes()) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        (slot, sign)
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let mut values = vec![0.0f32; self.dim];
        let tokenizer = RuleTokenizer;
        for span in tokenizer.token_spans(text) {
            let (slot, sign) = self.slot_and_sign(&text[span]);
            values[slot] += sign;
        }
        let raw = EmbeddingVector::new(values).expect("hash stub produces finite values");
        if self.normalize_output && !raw.is_zero() {
            normalize_vector(&raw).expect("non-zero vector normalizes")
        } else {
            raw
        }
    }
}

impl EmbedBackend for HashStub {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed(t)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    HashStub,
    Remote,
}

fn default_true() -> bool {
    true
}

fn default_dim() -> usize {
    64
}

fn default_batch_size() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedBackendConfig {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_true")]
    pub normalize_output: bool,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
}

impl Default for EmbedBackendConfig {
    fn default() -> Self {
        Self::hash_stub(default_dim())
    }
}

impl EmbedBackendConfig {
    pub fn hash_stub(dim: usize) -> Self {
        Self {
            kind: BackendKind::HashStub,
            dim,
            endpoint: None,
            normalize_output: true,
            batch_size: default_batch_size(),
        }
    }

    pub fn remote(endpoint: impl Into<String>, dim: usize) -> Self {
        Self {
            kind: BackendKind::Remote,
            dim,
            endpoint: Some(endpoint.into()),
            normalize_output: true,
            batch_size: default_batch_size(),
        }
    }

    /// Fills a missing remote endpoint from `SARA_EMBED_URL`.
    pub fn with_env_defaults(mut self) -> Self {
        if self.kind == BackendKind::Remote && self.endpoint.is_none() {
            self.endpoint = std::env::var(EMBED_URL_ENV).ok().filter(|s| !s.is_empty());
        }
        self
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::ZeroDimension);
        }
        if self.batch_size == 0 {
            return Err(EmbedError::Config("batch_size must be positive".into()));
        }
        if self.kind == BackendKind::Remote && self.endpoint.is_none() {
            return Err(EmbedError::Config(format!(
                "remote backend requires an endpoint (or {EMBED_URL_ENV})"
            )));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Arc<dyn EmbedBackend>, EmbedError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::HashStub => {
                Arc::new(HashStub::with_normalization(self.dim, self.normalize_output)?)
            }
            BackendKind::Remote => Arc::new(
                RemoteEmbedder::new(self.endpoint.clone().unwrap_or_default(), self.dim)
                    .normalize_output(self.normalize_output)
                    .batch_size(self.batch_size),
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn identical_texts_give_identical_vectors() {
        let stub = HashStub::new(64).unwrap();
        let a = stub.embed("the quick brown fox");
        let b = stub.embed("the quick brown fox");
        let bits = |v: &EmbeddingVector| v.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert!(a.is_normalized());
    }

    #[test]
    fn empty_text_is_unnormalized_zero() {
        let v = HashStub::new(64).unwrap().embed("");
        assert_eq!(v.dim(), 64);
        assert!(v.is_zero());
        assert!(!v.is_normalized());
    }

    #[test]
    fn config_requires_endpoint_for_remote() {
        let cfg = EmbedBackendConfig {
            endpoint: None,
            ..EmbedBackendConfig::remote("x", 8)
        };
        assert!(matches!(cfg.validate(), Err(EmbedError::Config(_))));
        assert!(EmbedBackendConfig::hash_stub(8).build().is_ok());
        assert!(matches!(EmbedBackendConfig::hash_stub(0).validate(), Err(EmbedError::ZeroDimension)));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: EmbedBackendConfig = serde_json::from_str(r#"{"kind":"hash-stub","dim":16}"#).unwrap();
        assert!(cfg.normalize_output);
        assert_eq!(cfg.kind, BackendKind::HashStub);
    }
}

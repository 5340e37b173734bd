//! Conditional self-information scoring.
//!
//! CSI is the mean per-token surprisal (nats per token) of a candidate
//! passage given the passages selected so far. It is estimated either by the
//! built-in additive-smoothed [`NgramModel`] or by an external
//! log-probability service through [`RemoteLogprobs`].

mod ngram;
mod remote;

pub use ngram::{train_ngram, NgramModel, BOS, UNK};
pub use remote::{RemoteLogprobs, LOGPROB_URL_ENV};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::HttpError;

#[derive(Debug, Error)]
pub enum ProxyError {
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("smoothing constant must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("empty candidate")]
    EmptyCandidate,
    #[error("log-probability service transport failure: {0}")]
    Transport(String),
    #[error("log-probability service returned status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("malformed log-probability response: {0}")]
    Malformed(String),
    #[error("log-probability service returned no tokens")]
    EmptyTokens,
    #[error("invalid proxy configuration: {0}")]
    Config(String),
}

impl From<HttpError> for ProxyError {
    fn from(err: HttpError) -> Self {
        match err {
            HttpError::Transport(msg) => ProxyError::Transport(msg),
            HttpError::Status { code, body } => ProxyError::Status { code, body },
            HttpError::Decode(msg) => ProxyError::Malformed(msg),
        }
    }
}

impl ProxyError {
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            ProxyError::Transport(_)
                | ProxyError::Status { .. }
                | ProxyError::Malformed(_)
                | ProxyError::EmptyTokens
        )
    }
}

/// Mean surprisal of a candidate, in nats per token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiScore {
    pub value: f64,
    pub token_count: usize,
}

impl CsiScore {
    /// Averages per-token negative log-probabilities.
    pub fn from_neg_logprobs<I: IntoIterator<Item = f64>>(neg_logprobs: I) -> Option<Self> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for x in neg_logprobs {
            sum += x;
            count += 1;
        }
        (count > 0).then(|| CsiScore {
            value: sum / count as f64,
            token_count: count,
        })
    }
}

/// Anything that can score `I(candidate | conditioning)`.
///
/// `conditioning` is the ordered list of already selected texts; it is
/// consumed as their space-joined concatenation.
pub trait SurprisalScorer: Send + Sync {
    fn csi(&self, candidate: &str, conditioning: &[&str]) -> Result<CsiScore, ProxyError>;
}

pub fn csi_score(
    scorer: &dyn SurprisalScorer,
    candidate: &str,
    selected: &[&str],
) -> Result<CsiScore, ProxyError> {
    scorer.csi(candidate, selected)
}

fn default_order() -> usize {
    3
}

fn default_alpha() -> f64 {
    0.1
}

/// Which proxy LM to use. A set `endpoint` selects the remote service;
/// otherwise an n-gram model is trained on the supplied corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyConfig {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        Self {
            order: default_order(),
            alpha: default_alpha(),
            endpoint: None,
        }
    }
}

impl ProxyConfig {
    /// Fills a missing endpoint from `SARA_LOGPROB_URL`.
    pub fn with_env_defaults(mut self) -> Self {
        if self.endpoint.is_none() {
            self.endpoint = std::env::var(LOGPROB_URL_ENV).ok().filter(|s| !s.is_empty());
        }
        self
    }

    pub fn build<S: AsRef<str>>(&self, corpus: &[S]) -> Result<Arc<dyn SurprisalScorer>, ProxyError> {
        match &self.endpoint {
            Some(url) => Ok(Arc::new(RemoteLogprobs::new(url.clone()))),
            None => Ok(Arc::new(train_ngram(corpus, self.order, self.alpha)?)),
        }
    }
}

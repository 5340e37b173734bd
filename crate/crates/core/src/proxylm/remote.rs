use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CsiScore, ProxyError, SurprisalScorer};
use crate::http::{self, join_url};

/// Environment variable holding the default log-probability endpoint.
pub const LOGPROB_URL_ENV: &str = "SARA_LOGPROB_URL";

#[derive(Serialize)]
struct LogprobRequest<'a> {
    prefix: &'a str,
    continuation: &'a str,
}

#[derive(Deserialize)]
struct LogprobResponse {
    tokens: Vec<String>,
    logprobs: Vec<f64>,
}

/// Client for `POST {endpoint}/v1/logprobs`. One CSI evaluation is exactly
/// one request.
pub struct RemoteLogprobs {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteLogprobs {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            agent: http::agent(Duration::from_secs(120)),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// The server's tokenization of `continuation` with natural-log
    /// probabilities conditioned on `prefix`.
    pub fn remote_logprobs(
        &self,
        prefix: &str,
        continuation: &str,
    ) -> Result<Vec<(String, f64)>, ProxyError> {
        if continuation.trim().is_empty() {
            return Err(ProxyError::EmptyCandidate);
        }
        let url = join_url(&self.endpoint, "/v1/logprobs");
        let response: LogprobResponse = http::post_json(
            &self.agent,
            &url,
            &LogprobRequest {
                prefix,
                continuation,
            },
        )?;
        if response.tokens.len() != response.logprobs.len() {
            return Err(ProxyError::Malformed(format!(
                "{} tokens but {} logprobs",
                response.tokens.len(),
                response.logprobs.len()
            )));
        }
        if response.tokens.is_empty() {
            return Err(ProxyError::EmptyTokens);
        }
        if let Some(bad) = response.logprobs.iter().find(|lp| !lp.is_finite() || **lp > 0.0) {
            return Err(ProxyError::Malformed(format!("invalid log-probability {bad}")));
        }
        Ok(response.tokens.into_iter().zip(response.logprobs).collect())
    }
}

impl SurprisalScorer for RemoteLogprobs {
    fn csi(&self, candidate: &str, conditioning: &[&str]) -> Result<CsiScore, ProxyError> {
        let prefix = conditioning.join(" ");
        let pairs = self.remote_logprobs(&prefix, candidate)?;
        Ok(CsiScore::from_neg_logprobs(pairs.into_iter().map(|(_, lp)| -lp))
            .expect("non-empty token list"))
    }
}

//! Blocking JSON-over-HTTP plumbing shared by the remote clients.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("server returned status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("malformed response body: {0}")]
    Decode(String),
}

pub(crate) fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(timeout))
        .build()
        .into()
}

/// POSTs `body` as JSON and decodes a 2xx JSON response.
pub(crate) fn post_json<B, R>(agent: &ureq::Agent, url: &str, body: &B) -> Result<R, HttpError>
where
    B: Serialize + ?Sized,
    R: DeserializeOwned,
{
    let mut response = agent
        .post(url)
        .send_json(body)
        .map_err(|e| HttpError::Transport(e.to_string()))?;
    let status = response.status();
    let text = response
        .body_mut()
        .read_to_string()
        .map_err(|e| HttpError::Transport(e.to_string()))?;
    if !status.is_success() {
        return Err(HttpError::Status {
            code: status.as_u16(),
            body: text,
        });
    }
    serde_json::from_str(&text).map_err(|e| HttpError::Decode(e.to_string()))
}

/// Joins a base endpoint and an absolute API path without doubling slashes.
pub(crate) fn join_url(endpoint: &str, path: &str) -> String {
    format!("{}{}", endpoint.trim_end_matches('/'), path)
}

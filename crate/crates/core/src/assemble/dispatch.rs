use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use super::request::GenerationRequest;
use crate::http::join_url;

/// Environment variable holding the model server endpoint.
pub const GENERATE_URL_ENV: &str = "SARA_GENERATE_URL";

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("generation transport failure: {0}")]
    Transport(String),
    #[error("generation server returned status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("malformed generation response: {0}")]
    Malformed(String),
}

#[derive(Deserialize)]
struct GenerateResponse {
    answer: String,
}

/// Sends a request to `POST {endpoint}/v1/generate` once, without retry.
///
/// The body is the canonical request with an extra `"temperature": 0` hint.
pub fn dispatch(endpoint: &str, request: &GenerationRequest) -> Result<String, DispatchError> {
    let agent = crate::http::agent(Duration::from_secs(300));
    let url = join_url(endpoint, "/v1/generate");
    let mut response = agent
        .post(&url)
        .header("content-type", "application/json")
        .send(&request.to_json_with_temperature(0)[..])
        .map_err(|e| DispatchError::Transport(e.to_string()))?;
    let status = response.status();
    let body = response
        .body_mut()
        .read_to_string()
        .map_err(|e| DispatchError::Transport(e.to_string()))?;
    if !status.is_success() {
        return Err(DispatchError::Status {
            code: status.as_u16(),
            body,
        });
    }
    serde_json::from_str::<GenerateResponse>(&body)
        .map(|r| r.answer)
        .map_err(|e| DispatchError::Malformed(e.to_string()))
}

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::backend::EmbedBackend;
use super::vector::{normalize_vector, EmbeddingVector};
use super::EmbedError;
use crate::http::{self, join_url};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

/// Client for `POST {endpoint}/v1/embed`.
///
/// Inputs are split into batches of `batch_size`; up to `max_in_flight`
/// batches are sent concurrently and the results are stitched back in input
/// order. Normalization happens here, not on the server. Empty strings are
/// not sent and map to zero vectors.
pub struct RemoteEmbedder {
    endpoint: String,
    dim: usize,
    normalize_output: bool,
    batch_size: usize,
    max_in_flight: usize,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>, dim: usize) -> Self {
        Self {
            endpoint: endpoint.into(),
            dim,
            normalize_output: true,
            batch_size: 32,
            max_in_flight: 4,
            agent: http::agent(Duration::from_secs(60)),
        }
    }

    pub fn normalize_output(mut self, yes: bool) -> Self {
        self.normalize_output = yes;
        self
    }

    pub fn batch_size(mut self, size: usize) -> Self {
        self.batch_size = size.max(1);
        self
    }

    pub fn max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    fn send(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let url = join_url(&self.endpoint, "/v1/embed");
        let response: EmbedResponse = http::post_json(&self.agent, &url, &EmbedRequest { texts })?;
        if response.dim != self.dim {
            return Err(EmbedError::RemoteDimension {
                expected: self.dim,
                found: response.dim,
            });
        }
        if response.vectors.len() != texts.len() {
            return Err(EmbedError::Malformed(format!(
                "{} vectors for {} texts",
                response.vectors.len(),
                texts.len()
            )));
        }
        response
            .vectors
            .into_iter()
            .map(|values| {
                if values.len() != self.dim {
                    return Err(EmbedError::RemoteDimension {
                        expected: self.dim,
                        found: values.len(),
                    });
                }
                let v = EmbeddingVector::new(values)
                    .map_err(|e| EmbedError::Malformed(e.to_string()))?;
                if self.normalize_output && !v.is_zero() {
                    normalize_vector(&v)
                } else {
                    Ok(v)
                }
            })
            .collect()
    }
}

impl EmbedBackend for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let wanted: Vec<usize> = (0..texts.len()).filter(|&i| !texts[i].is_empty()).collect();
        let payload: Vec<&str> = wanted.iter().map(|&i| texts[i]).collect();
        let batches: Vec<&[&str]> = payload.chunks(self.batch_size).collect();

        let mut embedded = Vec::with_capacity(payload.len());
        for wave in batches.chunks(self.max_in_flight) {
            let results: Vec<Result<Vec<EmbeddingVector>, EmbedError>> = if wave.len() == 1 {
                vec![self.send(wave[0])]
            } else {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = wave
                        .iter()
                        .map(|batch| scope.spawn(move || self.send(batch)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("embedding worker panicked"))
                        .collect()
                })
            };
            for result in results {
                embedded.extend(result?);
            }
        }

        let mut out = vec![EmbeddingVector::zeros(self.dim)?; texts.len()];
        for (slot, vector) in wanted.into_iter().zip(embedded) {
            out[slot] = vector;
        }
        Ok(out)
    }
}

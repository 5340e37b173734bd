//! The generation request handed to a model server.
//!
//! Canonical JSON, compact, keys in this order:
//!
//! ```text
//! {"version":1,"instruction":"…","question":"…","segments":[
//!   {"type":"text","content":"…"},
//!   {"type":"vectors","origin":"doc#3","vectors":[[0.1,-0.2,…],…]}]}
//! ```
//!
//! Vector components are written in the shortest form that parses back to
//! the same `f32`, and parsed directly as `f32`.

use serde::ser::{Serialize, Serializer};
use serde::Deserialize;
use serde_json::value::RawValue;
use thiserror::Error;

use super::template::{Piece, PromptTemplate};
use crate::embed::EmbeddingVector;
use crate::retrieval::ChunkRef;

pub const REQUEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RequestError {
    #[error("unknown version {0}")]
    UnknownVersion(u64),
    #[error("malformed segment: {0}")]
    MalformedSegment(String),
    #[error("ragged vector dimensions: {0}")]
    RaggedVectors(String),
    #[error("malformed request: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Text {
        content: String,
    },
    /// Compression vectors for one context; the server maps each vector to
    /// one soft-token position.
    Vectors {
        origin: ChunkRef,
        vectors: Vec<EmbeddingVector>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub version: u32,
    pub instruction: String,
    pub question: String,
    pub segments: Vec<Segment>,
}

impl GenerationRequest {
    /// Checks the structural invariants: every vector segment is non-empty
    /// and all vectors share one dimension.
    pub fn validate(&self) -> Result<(), RequestError> {
        let mut dim = None;
        for seg in &self.segments {
            if let Segment::Vectors { origin, vectors } = seg {
                if vectors.is_empty() {
                    return Err(RequestError::MalformedSegment(format!(
                        "vectors segment for {origin} is empty"
                    )));
                }
                for v in vectors {
                    match dim {
                        None => dim = Some(v.dim()),
                        Some(d) if d != v.dim() => {
                            return Err(RequestError::RaggedVectors(format!(
                                "dimension {} after {d}",
                                v.dim()
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    pub fn text_contents(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Text { content } => Some(content.as_str()),
            Segment::Vectors { .. } => None,
        })
    }

    pub fn vector_count(&self) -> usize {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Vectors { vectors, .. } => vectors.len(),
                Segment::Text { .. } => 0,
            })
            .sum()
    }

    pub fn vector_origins(&self) -> Vec<&ChunkRef> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Vectors { origin, .. } => Some(origin),
                Segment::Text { .. } => None,
            })
            .collect()
    }

    /// The prompt with every vector shown as `<C>`.
    pub fn display_prompt(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text { content } => out.push_str(content),
                Segment::Vectors { vectors, .. } => {
                    out.push_str(&vec!["<C>"; vectors.len()].join(", "))
                }
            }
        }
        out
    }

    fn wire(&self, temperature: Option<u32>) -> WireRequest<'_> {
        WireRequest {
            version: self.version,
            instruction: &self.instruction,
            question: &self.question,
            segments: self
                .segments
                .iter()
                .map(|s| match s {
                    Segment::Text { content } => WireSegment::Text { content },
                    Segment::Vectors { origin, vectors } => WireSegment::Vectors {
                        origin: origin.as_str(),
                        vectors: vectors.iter().map(EmbeddingVector::values).collect(),
                    },
                })
                .collect(),
            temperature,
        }
    }

    pub(crate) fn to_json_with_temperature(&self, temperature: u32) -> Vec<u8> {
        serde_json::to_vec(&self.wire(Some(temperature))).expect("request serializes")
    }
}

impl Serialize for GenerationRequest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.wire(None).serialize(serializer)
    }
}

#[derive(serde::Serialize)]
struct WireRequest<'a> {
    version: u32,
    instruction: &'a str,
    question: &'a str,
    segments: Vec<WireSegment<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<u32>,
}

#[derive(serde::Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum WireSegment<'a> {
    Text { content: &'a str },
    Vectors { origin: &'a str, vectors: Vec<&'a [f32]> },
}

/// Canonical JSON bytes.
pub fn serialize_request(req: &GenerationRequest) -> Vec<u8> {
    serde_json::to_vec(req).expect("request serializes")
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct RequestIn<'a> {
    instruction: String,
    question: String,
    #[serde(borrow)]
    segments: Vec<&'a RawValue>,
}

#[derive(Deserialize)]
struct SegmentIn<'a> {
    #[serde(rename = "type")]
    kind: String,
    content: Option<String>,
    origin: Option<String>,
    #[serde(borrow)]
    vectors: Option<Vec<Vec<&'a RawValue>>>,
}

fn parse_f32(raw: &RawValue) -> Result<f32, RequestError> {
    let text = raw.get();
    let value: f32 = text
        .parse()
        .map_err(|_| RequestError::MalformedSegment(format!("{text} is not a number")))?;
    if !value.is_finite() {
        return Err(RequestError::MalformedSegment(format!(
            "{text} does not fit in f32"
        )));
    }
    Ok(value)
}

fn parse_segment(raw: &RawValue) -> Result<Segment, RequestError> {
    let seg: SegmentIn<'_> = serde_json::from_str(raw.get())
        .map_err(|e| RequestError::MalformedSegment(e.to_string()))?;
    match seg.kind.as_str() {
        "text" => {
            let content = seg
                .content
                .ok_or_else(|| RequestError::MalformedSegment("text segment without content".into()))?;
            Ok(Segment::Text { content })
        }
        "vectors" => {
            let origin = seg
                .origin
                .ok_or_else(|| RequestError::MalformedSegment("vectors segment without origin".into()))?;
            let rows = seg
                .vectors
                .ok_or_else(|| RequestError::MalformedSegment("vectors segment without vectors".into()))?;
            let mut vectors = Vec::with_capacity(rows.len());
            for row in rows {
                let values = row.iter().map(|r| parse_f32(r)).collect::<Result<Vec<_>, _>>()?;
                let v = EmbeddingVector::new(values)
                    .map_err(|e| RequestError::MalformedSegment(e.to_string()))?;
                vectors.push(v);
            }
            Ok(Segment::Vectors {
                origin: ChunkRef(origin),
                vectors,
            })
        }
        other => Err(RequestError::MalformedSegment(format!(
            "unknown segment type {other:?}"
        ))),
    }
}

pub fn parse_request(bytes: &[u8]) -> Result<GenerationRequest, RequestError> {
    let probe: VersionProbe =
        serde_json::from_slice(bytes).map_err(|e| RequestError::Malformed(e.to_string()))?;
    let version = probe
        .version
        .ok_or_else(|| RequestError::Malformed("missing version".into()))?;
    let version = version
        .as_u64()
        .ok_or_else(|| RequestError::Malformed(format!("version {version} is not an integer")))?;
    if version != u64::from(REQUEST_VERSION) {
        return Err(RequestError::UnknownVersion(version));
    }
    let body: RequestIn<'_> =
        serde_json::from_slice(bytes).map_err(|e| RequestError::Malformed(e.to_string()))?;
    let segments = body
        .segments
        .iter()
        .map(|raw| parse_segment(raw))
        .collect::<Result<Vec<_>, _>>()?;
    let req = GenerationRequest {
        version: REQUEST_VERSION,
        instruction: body.instruction,
        question: body.question,
        segments,
    };
    req.validate()?;
    Ok(req)
}

/// Renders the prompt template. `compressed` holds, per compressed context
/// in selection order, its origin and vectors. Vectors are stored raw (the
/// wire format carries no normalization flag).
pub fn render_request(
    question: &str,
    natural: &[&str],
    compressed: &[(ChunkRef, Vec<EmbeddingVector>)],
    template: &PromptTemplate,
) -> GenerationRequest {
    let segments = template
        .layout(question, natural, compressed.len())
        .into_iter()
        .map(|piece| match piece {
            Piece::Text(content) => Segment::Text { content },
            Piece::Slot(i) => Segment::Vectors {
                origin: compressed[i].0.clone(),
                vectors: compressed[i].1.iter().map(EmbeddingVector::as_raw).collect(),
            },
        })
        .collect();
    GenerationRequest {
        version: REQUEST_VERSION,
        instruction: template.instruction.to_string(),
        question: question.to_string(),
        segments,
    }
}

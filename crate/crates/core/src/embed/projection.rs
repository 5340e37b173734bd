use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::vector::EmbeddingVector;
use super::EmbedError;

const FORMAT_VERSION: u32 = 1;

/// Affine map `out = weights · x + bias` produced by an externally trained
/// compressor. `weights` is row-major, `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
    source: String,
}

/// On-disk JSON form; float arrays are base64 of little-endian `f32`.
#[derive(Serialize, Deserialize)]
struct ProjectionFile {
    version: u32,
    in_dim: usize,
    out_dim: usize,
    #[serde(default)]
    source: String,
    weights: String,
    bias: String,
}

fn encode_f32s(values: &[f32]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|x| x.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode_f32s(field: &str, encoded: &str) -> Result<Vec<f32>, EmbedError> {
    let bytes = STANDARD
        .decode(encoded)
        .map_err(|e| EmbedError::InvalidProjection(format!("{field}: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(EmbedError::InvalidProjection(format!(
            "{field}: byte length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

impl ProjectionMap {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
        source: impl Into<String>,
    ) -> Result<Self, EmbedError> {
        if in_dim == 0 || out_dim == 0 {
            return Err(EmbedError::ZeroDimension);
        }
        if weights.len() != in_dim * out_dim {
            return Err(EmbedError::InvalidProjection(format!(
                "expected {} weights, found {}",
                in_dim * out_dim,
                weights.len()
            )));
        }
        if bias.len() != out_dim {
            return Err(EmbedError::InvalidProjection(format!(
                "expected {} bias entries, found {}",
                out_dim,
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
            source: source.into(),
        })
    }

    pub fn identity(dim: usize) -> Result<Self, EmbedError> {
        let mut weights = vec![0.0; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        Self::new(dim, dim, weights, vec![0.0; dim], "identity")
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ProjectionFile {
            version: FORMAT_VERSION,
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            source: self.source.clone(),
            weights: encode_f32s(&self.weights),
            bias: encode_f32s(&self.bias),
        })
        .expect("projection file serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, EmbedError> {
        let file: ProjectionFile =
            serde_json::from_str(json).map_err(|e| EmbedError::InvalidProjection(e.to_string()))?;
        if file.version != FORMAT_VERSION {
            return Err(EmbedError::InvalidProjection(format!(
                "unsupported version {}",
                file.version
            )));
        }
        Self::new(
            file.in_dim,
            file.out_dim,
            decode_f32s("weights", &file.weights)?,
            decode_f32s("bias", &file.bias)?,
            file.source,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Applies `map` to `vec`, accumulating each output row in `f64`.
pub fn apply_projection(
    vec: &EmbeddingVector,
    map: &ProjectionMap,
) -> Result<EmbeddingVector, EmbedError> {
    if vec.dim() != map.in_dim {
        return Err(EmbedError::DimensionMismatch {
            expected: map.in_dim,
            found: vec.dim(),
        });
    }
    let x = vec.values();
    let out: Vec<f32> = map
        .weights
        .chunks_exact(map.in_dim)
        .zip(&map.bias)
        .map(|(row, &b)| {
            let acc = row
                .iter()
                .zip(x)
                .fold(f64::from(b), |acc, (&w, &xi)| acc + f64::from(w) * f64::from(xi));
            acc as f32
        })
        .collect();
    if out.iter().any(|y| !y.is_finite()) {
        return Err(EmbedError::ProjectionOverflow);
    }
    EmbeddingVector::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn identity_and_bias_only() {
        let x = v(&[0.25, -3.0, 8.5]);
        assert_eq!(apply_projection(&x, &ProjectionMap::identity(3).unwrap()).unwrap(), x);
        let zero = ProjectionMap::new(3, 2, vec![0.0; 6], vec![1.5, -2.0], "t").unwrap();
        assert_eq!(apply_projection(&x, &zero).unwrap().values(), &[1.5, -2.0]);
    }

    #[test]
    fn two_by_two_example() {
        let map = ProjectionMap::new(2, 2, vec![1.0, 1.0, 0.0, 2.0], vec![0.0, 0.0], "t").unwrap();
        assert_eq!(apply_projection(&v(&[1.0, 2.0]), &map).unwrap().values(), &[3.0, 4.0]);
    }

    #[test]
    fn dimension_and_overflow_errors() {
        let map = ProjectionMap::identity(2).unwrap();
        assert!(matches!(apply_projection(&v(&[1.0]), &map), Err(EmbedError::DimensionMismatch { .. })));
        let big = ProjectionMap::new(2, 1, vec![f32::MAX, f32::MAX], vec![0.0], "t").unwrap();
        assert!(matches!(apply_projection(&v(&[2.0, 2.0]), &big), Err(EmbedError::ProjectionOverflow)));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let map = ProjectionMap::new(2, 3, vec![0.1, -0.2, 1e-30, 3.5, f32::MIN_POSITIVE, 7.0], vec![0.3, 0.0, -1.0], "trained elsewhere").unwrap();
        let back = ProjectionMap::from_json(&map.to_json()).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ProjectionMap::from_json("{}").is_err());
        let bad = r#"{"version":1,"in_dim":2,"out_dim":1,"weights":"AAAA","bias":"AAAAAA=="}"#;
        assert!(matches!(ProjectionMap::from_json(bad), Err(EmbedError::InvalidProjection(_))));
    }

    proptest! {
        #[test]
        fn projection_is_linear_without_bias(
            w in prop::collection::vec(-4.0f32..4.0, 6),
            x in prop::collection::vec(-4.0f32..4.0, 3),
            y in prop::collection::vec(-4.0f32..4.0, 3),
            a in -3.0f32..3.0,
            b in -3.0f32..3.0,
        ) {
            let map = ProjectionMap::new(3, 2, w, vec![0.0, 0.0], "t").unwrap();
            let combo: Vec<f32> = x.iter().zip(&y).map(|(&xi, &yi)| a * xi + b * yi).collect();
            let lhs = apply_projection(&v(&combo), &map).unwrap();
            let px = apply_projection(&v(&x), &map).unwrap();
            let py = apply_projection(&v(&y), &map).unwrap();
            for i in 0..2 {
                let rhs = a * px.values()[i] + b * py.values()[i];
                prop_assert!((lhs.values()[i] - rhs).abs() < 1e-3);
            }
        }
    }
}

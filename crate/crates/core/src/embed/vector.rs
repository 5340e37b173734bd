use serde::{Deserialize, Serialize};

use super::EmbedError;

/// A finite, fixed-dimension `f32` vector.
///
/// `normalized` records that the vector was explicitly scaled to unit norm;
/// it is never inferred from the values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVector")]
pub struct EmbeddingVector {
    values: Vec<f32>,
    normalized: bool,
}

#[derive(Deserialize)]
struct RawVector {
    values: Vec<f32>,
    #[serde(default)]
    normalized: bool,
}

impl TryFrom<RawVector> for EmbeddingVector {
    type Error = EmbedError;

    fn try_from(raw: RawVector) -> Result<Self, Self::Error> {
        let mut v = EmbeddingVector::new(raw.values)?;
        if raw.normalized {
            v = normalize_vector(&v)?;
        }
        Ok(v)
    }
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::ZeroDimension);
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Self {
            values,
            normalized: false,
        })
    }

    pub fn zeros(dim: usize) -> Result<Self, EmbedError> {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    /// Euclidean norm, accumulated in `f64`.
    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&x| f64::from(x) * f64::from(x))
            .sum::<f64>()
            .sqrt()
    }

    /// Same values with the normalized flag cleared.
    pub fn as_raw(&self) -> Self {
        Self {
            values: self.values.clone(),
            normalized: false,
        }
    }

    /// Multiplies every component by `factor`.
    pub fn scaled(&self, factor: f32) -> Result<Self, EmbedError> {
        Self::new(self.values.iter().map(|&x| x * factor).collect())
    }

    fn check_dim(&self, other: &Self) -> Result<(), EmbedError> {
        if self.dim() != other.dim() {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

/// Component-wise arithmetic mean, accumulated in `f64` in input order.
pub fn aggregate_mean<'a, I>(vectors: I) -> Result<EmbeddingVector, EmbedError>
where
    I: IntoIterator<Item = &'a EmbeddingVector>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(EmbedError::EmptyList)?;
    let mut sums: Vec<f64> = first.values.iter().map(|&x| f64::from(x)).collect();
    let mut count = 1usize;
    for v in iter {
        first.check_dim(v)?;
        for (acc, &x) in sums.iter_mut().zip(&v.values) {
            *acc += f64::from(x);
        }
        count += 1;
    }
    let n = count as f64;
    EmbeddingVector::new(sums.into_iter().map(|s| (s / n) as f32).collect())
}

/// Query expansion: the average of the query embedding and the embedding of
/// the top-1 retrieved context.
pub fn expand_query(
    query: &EmbeddingVector,
    top1: &EmbeddingVector,
) -> Result<EmbeddingVector, EmbedError> {
    query.check_dim(top1)?;
    EmbeddingVector::new(
        query
            .values
            .iter()
            .zip(&top1.values)
            .map(|(&a, &b)| ((f64::from(a) + f64::from(b)) / 2.0) as f32)
            .collect(),
    )
}

pub fn normalize_vector(vec: &EmbeddingVector) -> Result<EmbeddingVector, EmbedError> {
    let norm = vec.norm();
    if norm == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    let mut out = EmbeddingVector::new(
        vec.values
            .iter()
            .map(|&x| (f64::from(x) / norm) as f32)
            .collect(),
    )?;
    out.normalized = true;
    Ok(out)
}

/// Cosine similarity in `f64`; zero when either side is the zero vector.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    a.check_dim(b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum();
    Ok(dot / (na * nb))
}

use super::index::{Index, RetrievedContext};
use super::RetrievalError;
use crate::embed::{cosine_similarity, EmbedBackend, EmbeddingVector};

/// Chunk embeddings for one index under one backend, computed once.
#[derive(Debug, Clone)]
pub struct DenseIndex {
    vectors: Vec<EmbeddingVector>,
}

impl DenseIndex {
    /// Embeds every chunk text. Any backend failure aborts the whole build.
    pub fn build(index: &Index, backend: &dyn EmbedBackend) -> Result<Self, RetrievalError> {
        let texts: Vec<&str> = index.chunks().iter().map(|c| c.text.as_str()).collect();
        let vectors = backend.embed_batch(&texts)?;
        Ok(Self { vectors })
    }

    pub fn vectors(&self) -> &[EmbeddingVector] {
        &self.vectors
    }

    /// Ranks chunks by cosine similarity to the query embedding.
    pub fn retrieve(
        &self,
        index: &Index,
        query: &str,
        n: usize,
        backend: &dyn EmbedBackend,
    ) -> Result<Vec<RetrievedContext>, RetrievalError> {
        if n == 0 {
            return Err(RetrievalError::InvalidN);
        }
        let query_vec = backend
            .embed_batch(&[query])?
            .pop()
            .ok_or_else(|| crate::embed::EmbedError::Malformed("no query vector".into()))?;
        let scores = self
            .vectors
            .iter()
            .map(|v| cosine_similarity(&query_vec, v))
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(index.rank(scores, n))
    }
}

/// Dense retrieval without a cached [`DenseIndex`]; embeds the whole corpus
/// on every call.
pub fn retrieve_dense(
    index: &Index,
    query: &str,
    n: usize,
    backend: &dyn EmbedBackend,
) -> Result<Vec<RetrievedContext>, RetrievalError> {
    if n == 0 {
        return Err(RetrievalError::InvalidN);
    }
    DenseIndex::build(index, backend)?.retrieve(index, query, n, backend)
}

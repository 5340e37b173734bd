use super::AssembleError;
use crate::embed::{apply_projection, embed_text, EmbedBackend, EmbeddingVector, ProjectionMap};
use crate::textcore::Chunk;

pub const DEFAULT_MAX_VECTORS_PER_CONTEXT: usize = 8;

/// Source texts for a chunk's compression vectors: one per sentence, with
/// sentences past the cap folded into the last group.
pub fn sentence_groups(chunk: &Chunk, max_vectors: usize) -> Vec<String> {
    let texts: Vec<&str> = chunk.sentences.iter().map(|s| s.text.as_str()).collect();
    let cap = max_vectors.max(1);
    if texts.len() <= cap {
        return texts.into_iter().map(str::to_string).collect();
    }
    let mut groups: Vec<String> = texts[..cap - 1].iter().map(|s| s.to_string()).collect();
    groups.push(texts[cap - 1..].join(" "));
    groups
}

/// One vector per sentence group, in sentence order, optionally projected.
pub fn compress_context(
    chunk: &Chunk,
    backend: &dyn EmbedBackend,
    projection: Option<&ProjectionMap>,
    max_vectors: usize,
) -> Result<Vec<EmbeddingVector>, AssembleError> {
    if chunk.sentences.is_empty() {
        return Err(AssembleError::EmptyContext(chunk.id.clone()));
    }
    sentence_groups(chunk, max_vectors)
        .iter()
        .enumerate()
        .map(|(sentence, text)| {
            let embed_err = |source| AssembleError::Embed {
                chunk: chunk.id.clone(),
                sentence,
                source,
            };
            let v = embed_text(backend, text).map_err(embed_err)?;
            match projection {
                Some(map) => apply_projection(&v, map).map_err(embed_err),
                None => Ok(v),
            }
        })
        .collect()
}

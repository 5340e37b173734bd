use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RetrievalError;
use crate::textcore::{Chunk, RuleTokenizer, Sentence, Tokenizer, TokenizerProfile};

/// Stable reference to an indexed chunk (the chunk id, `"{doc_id}#{seq_no}"`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChunkRef(pub String);

impl ChunkRef {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChunkRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ChunkRef {
    fn from(s: &str) -> Self {
        ChunkRef(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// A row of the chunk table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub chunk_ref: ChunkRef,
    pub doc_id: String,
    pub seq_no: u32,
    pub token_count: usize,
    pub text: String,
    /// Byte length of each sentence inside `text` (sentences are joined by one space).
    pub sentence_lens: Vec<usize>,
}

impl ChunkRecord {
    fn from_chunk(chunk: &Chunk, token_count: usize) -> Self {
        Self {
            chunk_ref: ChunkRef(chunk.id.clone()),
            doc_id: chunk.doc_id.clone(),
            seq_no: chunk.seq_no,
            token_count,
            text: chunk.text.clone(),
            sentence_lens: chunk.sentences.iter().map(|s| s.text.len()).collect(),
        }
    }

    pub fn sentence_texts(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.sentence_lens.len());
        let mut at = 0;
        for &len in &self.sentence_lens {
            out.push(&self.text[at..at + len]);
            at += len + 1;
        }
        out
    }

    pub(super) fn sentences_are_consistent(&self) -> bool {
        if self.sentence_lens.is_empty() {
            return false;
        }
        let total: usize = self.sentence_lens.iter().sum::<usize>() + self.sentence_lens.len() - 1;
        if total != self.text.len() {
            return false;
        }
        let mut at = 0;
        for &len in &self.sentence_lens {
            if !self.text.is_char_boundary(at) || !self.text.is_char_boundary(at + len) {
                return false;
            }
            at += len + 1;
        }
        true
    }

    fn tie_key(&self) -> (&str, u32) {
        (&self.doc_id, self.seq_no)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) struct Posting {
    pub chunk: u32,
    pub tf: u32,
}

/// One entry of a ranked retrieval result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedContext {
    pub chunk_ref: ChunkRef,
    pub retrieval_score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Immutable BM25 index over chunks.
///
/// Every chunk is one BM25 "document": `doc_count` is the number of indexed
/// chunks and lengths are chunk token counts.
#[derive(Debug, Clone)]
pub struct Index {
    pub(super) tokenizer: Arc<dyn Tokenizer>,
    pub(super) params: Bm25Params,
    pub(super) chunks: Vec<ChunkRecord>,
    pub(super) by_ref: HashMap<ChunkRef, u32>,
    pub(super) postings: BTreeMap<String, Vec<Posting>>,
    pub(super) avg_chunk_len: f64,
}

/// Builds an index with the `rule-v1` tokenizer and default BM25 parameters.
pub fn build_index(chunks: &[Chunk]) -> Result<Index, RetrievalError> {
    Index::build(chunks, Arc::new(RuleTokenizer), Bm25Params::default())
}

pub(super) fn mean_len(chunks: &[ChunkRecord]) -> f64 {
    let total: u64 = chunks.iter().map(|c| c.token_count as u64).sum();
    total as f64 / chunks.len() as f64
}

impl Index {
    pub fn build(
        chunks: &[Chunk],
        tokenizer: Arc<dyn Tokenizer>,
        params: Bm25Params,
    ) -> Result<Self, RetrievalError> {
        if chunks.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut records = Vec::with_capacity(chunks.len());
        let mut by_ref = HashMap::with_capacity(chunks.len());
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();

        for (pos, chunk) in chunks.iter().enumerate() {
            let terms: Vec<String> = tokenizer
                .tokenize(&chunk.text)
                .into_iter()
                .map(|t| t.to_lowercase())
                .collect();
            let record = ChunkRecord::from_chunk(chunk, terms.len());
            if by_ref.insert(record.chunk_ref.clone(), pos as u32).is_some() {
                return Err(RetrievalError::DuplicateChunk(chunk.id.clone()));
            }
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for term in terms {
                *tf.entry(term).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting {
                    chunk: pos as u32,
                    tf: count,
                });
            }
            records.push(record);
        }

        let avg_chunk_len = mean_len(&records);
        Ok(Self {
            tokenizer,
            params,
            chunks: records,
            by_ref,
            postings,
            avg_chunk_len,
        })
    }

    pub fn tokenizer_profile(&self) -> TokenizerProfile {
        self.tokenizer.profile()
    }

    pub fn tokenizer(&self) -> &Arc<dyn Tokenizer> {
        &self.tokenizer
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Number of indexed chunks (the BM25 collection size).
    pub fn doc_count(&self) -> usize {
        self.chunks.len()
    }

    pub fn avg_chunk_len(&self) -> f64 {
        self.avg_chunk_len
    }

    pub fn chunks(&self) -> &[ChunkRecord] {
        &self.chunks
    }

    pub fn chunk(&self, chunk_ref: &ChunkRef) -> Option<&ChunkRecord> {
        self.by_ref.get(chunk_ref).map(|&i| &self.chunks[i as usize])
    }

    /// Reconstructs the full [`Chunk`], sentences included.
    pub fn to_chunk(&self, chunk_ref: &ChunkRef) -> Option<Chunk> {
        let record = self.chunk(chunk_ref)?;
        let sentences = record
            .sentence_texts()
            .into_iter()
            .map(|s| Sentence::new(s, self.tokenizer.as_ref()))
            .collect();
        Some(Chunk {
            id: record.chunk_ref.0.clone(),
            doc_id: record.doc_id.clone(),
            seq_no: record.seq_no,
            text: record.text.clone(),
            token_count: record.token_count,
            sentences,
        })
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    /// Postings for `term` (already lowercased), in chunk-table order.
    pub fn postings(&self, term: &str) -> Vec<(ChunkRef, u32)> {
        self.postings
            .get(term)
            .map(|list| {
                list.iter()
                    .map(|p| (self.chunks[p.chunk as usize].chunk_ref.clone(), p.tf))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// `ln((N - df + 0.5) / (df + 0.5) + 1)`, always positive.
    pub fn idf(&self, term: &str) -> f64 {
        idf(self.doc_count(), self.document_frequency(term))
    }

    /// Lowercased, deduplicated, sorted query terms.
    pub fn query_terms(&self, query: &str) -> Vec<String> {
        normalize_terms(self.tokenizer.tokenize(query))
    }

    fn term_score(&self, df: usize, tf: u32, len: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = f64::from(tf);
        let norm = 1.0 - b + b * len as f64 / self.avg_chunk_len;
        idf(self.doc_count(), df) * tf * (k1 + 1.0) / (tf + k1 * norm)
    }

    /// BM25 score of one chunk for the distinct terms of `query_terms`.
    pub fn bm25_score(
        &self,
        query_terms: &[String],
        chunk_ref: &ChunkRef,
    ) -> Result<f64, RetrievalError> {
        let pos = *self
            .by_ref
            .get(chunk_ref)
            .ok_or_else(|| RetrievalError::UnknownChunk(chunk_ref.0.clone()))?;
        let len = self.chunks[pos as usize].token_count;
        let mut score = 0.0;
        for term in normalize_terms(query_terms.iter().cloned()) {
            let Some(list) = self.postings.get(&term) else {
                continue;
            };
            if let Ok(i) = list.binary_search_by_key(&pos, |p| p.chunk) {
                score += self.term_score(list.len(), list[i].tf, len);
            }
        }
        Ok(score)
    }

    /// The `n` best chunks for `query` under BM25.
    pub fn retrieve_top_n(
        &self,
        query: &str,
        n: usize,
    ) -> Result<Vec<RetrievedContext>, RetrievalError> {
        if n == 0 {
            return Err(RetrievalError::InvalidN);
        }
        let mut scores = vec![0.0f64; self.chunks.len()];
        for term in self.query_terms(query) {
            let Some(list) = self.postings.get(&term) else {
                continue;
            };
            for p in list {
                let len = self.chunks[p.chunk as usize].token_count;
                scores[p.chunk as usize] += self.term_score(list.len(), p.tf, len);
            }
        }
        Ok(self.rank(scores, n))
    }

    /// Orders chunk positions by descending score, ties by `(doc_id, seq_no)`.
    pub(super) fn rank(&self, scores: Vec<f64>, n: usize) -> Vec<RetrievedContext> {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.chunks[a].tie_key().cmp(&self.chunks[b].tie_key()))
        });
        order
            .into_iter()
            .take(n)
            .enumerate()
            .map(|(i, pos)| RetrievedContext {
                chunk_ref: self.chunks[pos].chunk_ref.clone(),
                retrieval_score: scores[pos],
                rank: i + 1,
            })
            .collect()
    }
}

fn idf(n: usize, df: usize) -> f64 {
    let (n, df) = (n as f64, df as f64);
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

fn normalize_terms<I: IntoIterator<Item = String>>(terms: I) -> Vec<String> {
    terms
        .into_iter()
        .map(|t| t.to_lowercase())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

impl PartialEq for Index {
    fn eq(&self, other: &Self) -> bool {
        self.tokenizer.profile() == other.tokenizer.profile()
            && self.params == other.params
            && self.chunks == other.chunks
            && self.postings == other.postings
            && self.avg_chunk_len.to_bits() == other.avg_chunk_len.to_bits()
    }
}

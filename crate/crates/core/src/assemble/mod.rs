//! Hybrid prompt assembly: the first `k` selected contexts go in as text,
//! the rest as per-sentence compression vectors.

mod budget;
mod compress;
mod dispatch;
mod request;
mod template;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use budget::{partition_evidence, usage_for_k, vector_count, BudgetMode, BudgetPolicy, BudgetUsage, Partition};
pub use compress::{compress_context, sentence_groups, DEFAULT_MAX_VECTORS_PER_CONTEXT};
pub use dispatch::{dispatch, DispatchError, GENERATE_URL_ENV};
pub use request::{parse_request, render_request, serialize_request, GenerationRequest, RequestError, Segment, REQUEST_VERSION};
pub use template::{PromptTemplate, DEFAULT_TEMPLATE_ID};

use crate::embed::{EmbedBackend, EmbedError, EmbeddingVector, ProjectionMap};
use crate::retrieval::{ChunkRef, Index};
use crate::select::EvidenceSet;
use crate::textcore::{Chunk, RuleTokenizer, Tokenizer};

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("invalid budget policy: {0}")]
    InvalidPolicy(String),
    #[error("no evidence to assemble")]
    EmptyEvidence,
    #[error("k = {k} exceeds the {available} selected contexts")]
    InvalidK { k: usize, available: usize },
    #[error("budget infeasible: {required} tokens needed, budget {budget}, short by {shortfall}")]
    BudgetInfeasible {
        required: usize,
        budget: usize,
        shortfall: usize,
    },
    #[error("context {0} has no sentences")]
    EmptyContext(String),
    #[error("unknown chunk {0}")]
    UnknownChunk(ChunkRef),
    #[error("embedding sentence {sentence} of {chunk} failed: {source}")]
    Embed {
        chunk: String,
        sentence: usize,
        source: EmbedError,
    },
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
}

impl AssembleError {
    pub fn is_backend_failure(&self) -> bool {
        matches!(self, AssembleError::Embed { source, .. } if source.is_backend_failure())
    }
}

/// Looks up the selected chunks in the index, in selection order.
pub fn evidence_chunks(index: &Index, evidence: &EvidenceSet) -> Result<Vec<Chunk>, AssembleError> {
    evidence
        .selected
        .iter()
        .map(|s| {
            index
                .to_chunk(&s.chunk_ref)
                .ok_or_else(|| AssembleError::UnknownChunk(s.chunk_ref.clone()))
        })
        .collect()
}

/// A rendered request plus its accounting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssembledPrompt {
    pub k: usize,
    /// Contexts rendered as text, in selection order.
    pub natural: Vec<ChunkRef>,
    /// Contexts rendered as vectors, in selection order.
    pub compressed: Vec<ChunkRef>,
    pub usage: BudgetUsage,
    pub request: GenerationRequest,
}

impl AssembledPrompt {
    /// Natural then compressed origins, which is the selection order.
    pub fn origins(&self) -> Vec<&ChunkRef> {
        self.natural.iter().chain(&self.compressed).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetStatus {
    WithinBudget,
    /// The request was still emitted but exceeds the budget.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub k: usize,
    pub status: BudgetStatus,
    #[serde(flatten)]
    pub prompt: AssembledPrompt,
}

/// Renders selected contexts into generation requests.
#[derive(Clone)]
pub struct Assembler {
    tokenizer: Arc<dyn Tokenizer>,
    backend: Arc<dyn EmbedBackend>,
    projection: Option<ProjectionMap>,
    template: PromptTemplate,
    max_vectors: usize,
}

impl Assembler {
    pub fn new(backend: Arc<dyn EmbedBackend>) -> Self {
        Self {
            tokenizer: Arc::new(RuleTokenizer),
            backend,
            projection: None,
            template: PromptTemplate::inference_v1(),
            max_vectors: DEFAULT_MAX_VECTORS_PER_CONTEXT,
        }
    }

    pub fn with_tokenizer(mut self, tokenizer: Arc<dyn Tokenizer>) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn with_projection(mut self, projection: Option<ProjectionMap>) -> Self {
        self.projection = projection;
        self
    }

    pub fn with_template(mut self, template: PromptTemplate) -> Self {
        self.template = template;
        self
    }

    pub fn with_max_vectors(mut self, max_vectors: usize) -> Self {
        self.max_vectors = max_vectors;
        self
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    pub fn tokenizer(&self) -> &dyn Tokenizer {
        self.tokenizer.as_ref()
    }

    pub fn max_vectors(&self) -> usize {
        self.max_vectors
    }

    pub fn partition(
        &self,
        question: &str,
        contexts: &[Chunk],
        policy: &BudgetPolicy,
    ) -> Result<Partition, AssembleError> {
        partition_evidence(
            contexts,
            policy,
            question,
            &self.template,
            self.tokenizer.as_ref(),
            self.max_vectors,
        )
    }

    pub fn compress(&self, chunk: &Chunk) -> Result<Vec<EmbeddingVector>, AssembleError> {
        compress_context(
            chunk,
            self.backend.as_ref(),
            self.projection.as_ref(),
            self.max_vectors,
        )
    }

    /// Partitions `contexts` (in selection order) and renders the request.
    pub fn assemble(
        &self,
        question: &str,
        contexts: &[Chunk],
        policy: &BudgetPolicy,
    ) -> Result<AssembledPrompt, AssembleError> {
        let partition = self.partition(question, contexts, policy)?;
        let vectors = contexts[partition.k..]
            .iter()
            .map(|c| self.compress(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.render(question, contexts, partition.k, partition.usage, vectors))
    }

    /// One request per `k` in `0..=contexts.len()`, each with the first `k`
    /// contexts as text. Over-budget requests are kept and marked.
    pub fn sweep(
        &self,
        question: &str,
        contexts: &[Chunk],
        budget_tokens: usize,
        vector_token_cost: usize,
    ) -> Result<Vec<SweepEntry>, AssembleError> {
        if contexts.is_empty() {
            return Err(AssembleError::EmptyEvidence);
        }
        let vectors = contexts
            .iter()
            .map(|c| self.compress(c))
            .collect::<Result<Vec<_>, _>>()?;
        (0..=contexts.len())
            .map(|k| {
                let policy = BudgetPolicy::fixed_k(budget_tokens, k).with_vector_cost(vector_token_cost);
                let partition = self.partition(question, contexts, &policy)?;
                let prompt = self.render(question, contexts, k, partition.usage, vectors[k..].to_vec());
                let status = if prompt.usage.within_budget {
                    BudgetStatus::WithinBudget
                } else {
                    BudgetStatus::Infeasible
                };
                Ok(SweepEntry { k, status, prompt })
            })
            .collect()
    }

    fn render(
        &self,
        question: &str,
        contexts: &[Chunk],
        k: usize,
        usage: BudgetUsage,
        vectors: Vec<Vec<EmbeddingVector>>,
    ) -> AssembledPrompt {
        let natural_texts: Vec<&str> = contexts[..k].iter().map(|c| c.text.as_str()).collect();
        let compressed: Vec<(ChunkRef, Vec<EmbeddingVector>)> = contexts[k..]
            .iter()
            .map(|c| ChunkRef(c.id.clone()))
            .zip(vectors)
            .collect();
        let request = render_request(question, &natural_texts, &compressed, &self.template);
        AssembledPrompt {
            k,
            natural: contexts[..k].iter().map(|c| ChunkRef(c.id.clone())).collect(),
            compressed: compressed.into_iter().map(|(r, _)| r).collect(),
            usage,
            request,
        }
    }
}

//! End-to-end wiring: corpus → index → retrieve → select → assemble.

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemble::{
    evidence_chunks, AssembleError, AssembledPrompt, Assembler, BudgetMode, BudgetPolicy,
    PromptTemplate, SweepEntry, DEFAULT_MAX_VECTORS_PER_CONTEXT, DEFAULT_TEMPLATE_ID,
};
use crate::embed::{EmbedBackend, EmbedBackendConfig, EmbedError, ProjectionMap};
use crate::proxylm::{ProxyConfig, ProxyError, SurprisalScorer};
use crate::retrieval::{load_index, DenseIndex, Index, RetrievalError, RetrievedContext};
use crate::select::{select_evidence, Candidate, EvidenceSet, SelectError, SelectionBackends, SelectionConfig};
use crate::textcore::{load_corpus, Chunk, TextError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Proxy(#[from] ProxyError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
}

impl PipelineError {
    pub fn is_backend_failure(&self) -> bool {
        match self {
            PipelineError::Retrieval(RetrievalError::Embed(e)) | PipelineError::Embed(e) => {
                e.is_backend_failure()
            }
            PipelineError::Proxy(e) => e.is_backend_failure(),
            PipelineError::Select(e) => e.is_backend_failure(),
            PipelineError::Assemble(e) => e.is_backend_failure(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMode {
    #[default]
    Bm25,
    Dense,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetModeName {
    #[default]
    FixedK,
    BudgetFit,
}

/// Every knob of a run. Missing fields in a config file take these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub index_path: Option<PathBuf>,
    pub chunk_size: usize,
    pub retrieval_mode: RetrievalMode,
    pub embed: EmbedBackendConfig,
    pub proxy: ProxyConfig,
    pub selection: SelectionConfig,
    /// Contexts handed to assembly and sweeps; `selection.n` when unset.
    pub total_contexts: Option<usize>,
    pub budget_tokens: usize,
    pub vector_token_cost: usize,
    pub budget_mode: BudgetModeName,
    /// Natural-text contexts under `fixed-k`.
    pub k: usize,
    pub template_id: String,
    pub max_vectors_per_context: usize,
    pub projection_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            index_path: None,
            chunk_size: 256,
            retrieval_mode: RetrievalMode::Bm25,
            embed: EmbedBackendConfig::default(),
            proxy: ProxyConfig::default(),
            selection: SelectionConfig::default(),
            total_contexts: None,
            budget_tokens: 512,
            vector_token_cost: 1,
            budget_mode: BudgetModeName::FixedK,
            k: 5,
            template_id: DEFAULT_TEMPLATE_ID.to_string(),
            max_vectors_per_context: DEFAULT_MAX_VECTORS_PER_CONTEXT,
            projection_path: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn budget_policy(&self) -> BudgetPolicy {
        let mode = match self.budget_mode {
            BudgetModeName::FixedK => BudgetMode::FixedK { k: self.k },
            BudgetModeName::BudgetFit => BudgetMode::BudgetFit,
        };
        BudgetPolicy {
            budget_tokens: self.budget_tokens,
            vector_token_cost: self.vector_token_cost,
            mode,
        }
    }

    pub fn total_contexts(&self) -> usize {
        self.total_contexts.unwrap_or(self.selection.n)
    }

    /// Selection settings for assembly: `total_contexts` picks out of `n`.
    pub fn assembly_selection(&self) -> SelectionConfig {
        let mut cfg = self.selection.clone();
        let total = self.total_contexts();
        cfg.n = cfg.n.max(total);
        cfg.k_sel = total;
        cfg
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.chunk_size == 0 {
            return Err(PipelineError::Config("chunk_size must be positive".into()));
        }
        if self.max_vectors_per_context == 0 {
            return Err(PipelineError::Config(
                "max_vectors_per_context must be positive".into(),
            ));
        }
        self.embed.validate()?;
        self.assembly_selection().validate()?;
        self.budget_policy().validate()?;
        if self.budget_mode == BudgetModeName::FixedK && self.k > self.total_contexts() {
            return Err(PipelineError::Config(format!(
                "k = {} exceeds the {} assembled contexts",
                self.k,
                self.total_contexts()
            )));
        }
        PromptTemplate::by_id(&self.template_id)?;
        Ok(())
    }
}

/// Reads a corpus JSONL file and chunks every document.
pub fn chunk_corpus(path: impl AsRef<Path>, chunk_size: usize) -> Result<(usize, Vec<Chunk>), PipelineError> {
    let records = load_corpus(path)?;
    let docs = records.len();
    let mut chunks = Vec::new();
    for record in records {
        chunks.extend(record.into_document(chunk_size)?.chunks);
    }
    Ok((docs, chunks))
}

/// A loaded index plus the backends a run needs. Dense vectors and the
/// n-gram proxy are built on first use.
pub struct Engine {
    config: RunConfig,
    index: Index,
    embed: Arc<dyn EmbedBackend>,
    assembler: Assembler,
    dense: OnceLock<DenseIndex>,
    proxy: OnceLock<Arc<dyn SurprisalScorer>>,
}

impl Engine {
    /// Loads the index at `config.index_path`.
    pub fn open(config: RunConfig) -> Result<Self, PipelineError> {
        let path = config
            .index_path
            .clone()
            .ok_or_else(|| PipelineError::Config("no index path given".into()))?;
        let index = load_index(path)?;
        Self::new(index, config)
    }

    pub fn new(index: Index, config: RunConfig) -> Result<Self, PipelineError> {
        let mut config = config;
        config.embed = config.embed.with_env_defaults();
        config.proxy = config.proxy.with_env_defaults();
        config.validate()?;
        let embed = config.embed.build()?;
        let projection = config
            .projection_path
            .as_ref()
            .map(ProjectionMap::load)
            .transpose()?;
        let assembler = Assembler::new(embed.clone())
            .with_tokenizer(index.tokenizer().clone())
            .with_projection(projection)
            .with_template(PromptTemplate::by_id(&config.template_id)?)
            .with_max_vectors(config.max_vectors_per_context);
        Ok(Self {
            config,
            index,
            embed,
            assembler,
            dense: OnceLock::new(),
            proxy: OnceLock::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn assembler(&self) -> &Assembler {
        &self.assembler
    }

    pub fn embed_backend(&self) -> &dyn EmbedBackend {
        self.embed.as_ref()
    }

    fn dense(&self) -> Result<&DenseIndex, PipelineError> {
        if let Some(d) = self.dense.get() {
            return Ok(d);
        }
        let built = DenseIndex::build(&self.index, self.embed.as_ref())?;
        Ok(self.dense.get_or_init(|| built))
    }

    /// The CSI scorer: the remote service when configured, otherwise an
    /// n-gram model trained on every chunk text of the index.
    pub fn proxy(&self) -> Result<&dyn SurprisalScorer, PipelineError> {
        if let Some(p) = self.proxy.get() {
            return Ok(p.as_ref());
        }
        let texts: Vec<&str> = self.index.chunks().iter().map(|c| c.text.as_str()).collect();
        let built = self.config.proxy.build(&texts)?;
        Ok(self.proxy.get_or_init(|| built).as_ref())
    }

    pub fn retrieve(&self, query: &str, n: usize) -> Result<Vec<RetrievedContext>, PipelineError> {
        Ok(match self.config.retrieval_mode {
            RetrievalMode::Bm25 => self.index.retrieve_top_n(query, n)?,
            RetrievalMode::Dense => self
                .dense()?
                .retrieve(&self.index, query, n, self.embed.as_ref())?,
        })
    }

    pub fn select(&self, query: &str) -> Result<EvidenceSet, PipelineError> {
        self.select_with(query, &self.config.selection)
    }

    /// Retrieves `selection.n` candidates and runs evidence selection.
    pub fn select_with(&self, query: &str, selection: &SelectionConfig) -> Result<EvidenceSet, PipelineError> {
        selection.validate()?;
        let retrieved = self.retrieve(query, selection.n)?;
        let candidates = Candidate::resolve(&self.index, &retrieved)?;
        let proxy = match selection.strategy {
            crate::select::Strategy::Csi => Some(self.proxy()?),
            crate::select::Strategy::Emb => None,
        };
        let backends = SelectionBackends {
            embed: Some(self.embed.as_ref()),
            proxy,
        };
        Ok(select_evidence(query, &candidates, selection, backends)?)
    }

    /// Selects `total_contexts` contexts and returns them in selection order.
    pub fn assembly_contexts(&self, query: &str) -> Result<(EvidenceSet, Vec<Chunk>), PipelineError> {
        let evidence = self.select_with(query, &self.config.assembly_selection())?;
        let chunks = evidence_chunks(&self.index, &evidence)?;
        Ok((evidence, chunks))
    }

    pub fn assemble(&self, query: &str) -> Result<AssembledPrompt, PipelineError> {
        let (_, chunks) = self.assembly_contexts(query)?;
        let policy = self.config.budget_policy();
        Ok(self.assembler.assemble(query, &chunks, &policy)?)
    }

    /// One request per `k` in `0..=total_contexts`.
    pub fn sweep(&self, query: &str) -> Result<Vec<SweepEntry>, PipelineError> {
        let (_, chunks) = self.assembly_contexts(query)?;
        Ok(self.assembler.sweep(
            query,
            &chunks,
            self.config.budget_tokens,
            self.config.vector_token_cost,
        )?)
    }
}

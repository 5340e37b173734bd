//! Iterative evidence selection.
//!
//! The first retrieved context is always selected first. Each later step
//! picks one of the remaining candidates:
//!
//! * **EMB**: the candidate whose inclusion brings the mean embedding of the
//!   selected set closest (Euclidean) to the expanded query vector
//!   `v_q = avg(Enc(query), Enc(top1))`.
//! * **CSI**: the candidate with the highest conditional self-information
//!   given the already selected texts.
//!
//! Scores within [`TIE_RELATIVE_TOLERANCE`] of the best are ties; ties go to
//! the candidate with the lowest retrieval rank.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{expand_query, EmbedBackend, EmbedError, EmbeddingVector};
use crate::proxylm::{ProxyError, SurprisalScorer};
use crate::retrieval::{ChunkRef, Index, RetrievedContext};

/// Two step scores `a`, `b` tie when `|a - b| <= tol * max(|a|, |b|)`.
/// Embeddings are f32, so differences below roughly f32 resolution are noise.
pub const TIE_RELATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("no retrieved contexts to select from")]
    EmptyCandidates,
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
    #[error("invalid candidate list: {0}")]
    InvalidCandidates(String),
    #[error("unknown chunk {0}")]
    UnknownChunk(ChunkRef),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no candidate passes CSI filter")]
    AllFiltered,
    #[error("strategy {0:?} needs a {1} backend")]
    MissingBackend(Strategy, &'static str),
    #[error("embedding failed at step {step}: {source}")]
    Embed { step: usize, source: EmbedError },
    #[error("CSI scoring failed at step {step}: {source}")]
    Proxy { step: usize, source: ProxyError },
}

impl SelectError {
    fn at_step(self, step: usize) -> Self {
        match self {
            SelectError::Embed { source, .. } => SelectError::Embed { step, source },
            SelectError::Proxy { source, .. } => SelectError::Proxy { step, source },
            other => other,
        }
    }

    pub fn is_backend_failure(&self) -> bool {
        match self {
            SelectError::Embed { source, .. } => source.is_backend_failure(),
            SelectError::Proxy { source, .. } => source.is_backend_failure(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Emb,
    Csi,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Emb => "emb",
            Strategy::Csi => "csi",
        }
    }
}

fn default_n() -> usize {
    10
}

fn default_k_sel() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Candidates taken from the retrieval list.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Total contexts to select, the rank-1 context included.
    #[serde(default = "default_k_sel")]
    pub k_sel: usize,
    #[serde(default)]
    pub strategy: Strategy,
    /// Opt-in: drop CSI candidates scoring below this before the argmax.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_csi_filter: Option<f64>,
    /// Opt-in: prepend the query to the CSI conditioning text.
    #[serde(default)]
    pub csi_include_query: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self::new(Strategy::Emb, default_n(), default_k_sel())
    }
}

impl SelectionConfig {
    pub fn new(strategy: Strategy, n: usize, k_sel: usize) -> Self {
        Self {
            n,
            k_sel,
            strategy,
            min_csi_filter: None,
            csi_include_query: false,
        }
    }

    pub fn validate(&self) -> Result<(), SelectError> {
        if self.k_sel == 0 || self.k_sel > self.n {
            return Err(SelectError::InvalidConfig(format!(
                "need 1 <= k_sel <= n, got k_sel={} n={}",
                self.k_sel, self.n
            )));
        }
        if let Some(t) = self.min_csi_filter {
            if self.strategy != Strategy::Csi {
                return Err(SelectError::InvalidConfig(
                    "min_csi_filter requires the csi strategy".into(),
                ));
            }
            if !(t >= 0.0 && t.is_finite()) {
                return Err(SelectError::InvalidConfig(format!(
                    "min_csi_filter must be a nonnegative number, got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// A retrieved context together with its text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub chunk_ref: ChunkRef,
    /// 1-based retrieval rank; lower wins ties.
    pub rank: usize,
    pub text: String,
}

impl Candidate {
    /// Attaches stored chunk texts to a retrieval result.
    pub fn resolve(index: &Index, retrieved: &[RetrievedContext]) -> Result<Vec<Self>, SelectError> {
        retrieved
            .iter()
            .map(|r| {
                let record = index
                    .chunk(&r.chunk_ref)
                    .ok_or_else(|| SelectError::UnknownChunk(r.chunk_ref.clone()))?;
                Ok(Candidate {
                    chunk_ref: r.chunk_ref.clone(),
                    rank: r.rank,
                    text: record.text.clone(),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedEvidence {
    pub chunk_ref: ChunkRef,
    /// 1-based.
    pub step_index: usize,
    /// EMB: distance to `v_q`; CSI: nats per token. Step 1 records the
    /// criterion value of the initial one-element set.
    pub step_score: f64,
}

/// Ordered selection result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub selected: Vec<SelectedEvidence>,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_vec: Option<EmbeddingVector>,
}

/// One line of the optional selection trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub step: usize,
    pub chosen: ChunkRef,
    pub score: f64,
    pub strategy: Strategy,
}

impl EvidenceSet {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn chunk_refs(&self) -> Vec<&ChunkRef> {
        self.selected.iter().map(|s| &s.chunk_ref).collect()
    }

    pub fn trace(&self) -> Vec<TraceLine> {
        self.selected
            .iter()
            .map(|s| TraceLine {
                step: s.step_index,
                chosen: s.chunk_ref.clone(),
                score: s.step_score,
                strategy: self.strategy,
            })
            .collect()
    }

    /// Writes the trace as JSONL.
    pub fn write_trace<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for line in self.trace() {
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// The winner of one selection step; `position` indexes the candidate slice
/// passed to the step function.
#[derive(Debug, Clone, PartialEq)]
pub struct StepChoice {
    pub position: usize,
    pub chunk_ref: ChunkRef,
    pub score: f64,
}

pub fn scores_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RELATIVE_TOLERANCE * a.abs().max(b.abs())
}

#[derive(Clone, Copy)]
enum Goal {
    Minimize,
    Maximize,
}

/// `scored` holds `(position, rank, score)`; returns the lowest-rank entry
/// among those tied with the best score.
fn pick(scored: &[(usize, usize, f64)], goal: Goal) -> Option<(usize, f64)> {
    let best = scored.iter().map(|s| s.2).reduce(|a, b| match goal {
        Goal::Minimize => a.min(b),
        Goal::Maximize => a.max(b),
    })?;
    scored
        .iter()
        .filter(|s| scores_tie(s.2, best))
        .min_by_key(|s| s.1)
        .map(|s| (s.0, s.2))
}

fn check_dim(expected: usize, v: &EmbeddingVector) -> Result<(), SelectError> {
    if v.dim() != expected {
        return Err(SelectError::DimensionMismatch {
            expected,
            found: v.dim(),
        });
    }
    Ok(())
}

/// One EMB step: the candidate minimizing
/// `‖v_q − mean(selected ∪ {candidate})‖₂`, with the mean accumulated in
/// `f64` in selection order followed by the candidate.
pub fn emb_step(
    query_vec: &EmbeddingVector,
    selected_vecs: &[&EmbeddingVector],
    candidates: &[(&Candidate, &EmbeddingVector)],
) -> Result<StepChoice, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError::InvalidCandidates("no remaining candidates".into()));
    }
    if selected_vecs.is_empty() {
        return Err(SelectError::InvalidCandidates("selected set is empty".into()));
    }
    let dim = query_vec.dim();
    let mut sums = vec![0.0f64; dim];
    for v in selected_vecs {
        check_dim(dim, v)?;
        for (acc, &x) in sums.iter_mut().zip(v.values()) {
            *acc += f64::from(x);
        }
    }
    let count = (selected_vecs.len() + 1) as f64;

    let mut scored = Vec::with_capacity(candidates.len());
    for (pos, (cand, vec)) in candidates.iter().enumerate() {
        check_dim(dim, vec)?;
        let dist_sq: f64 = query_vec
            .values()
            .iter()
            .zip(&sums)
            .zip(vec.values())
            .map(|((&q, &s), &x)| {
                let diff = f64::from(q) - (s + f64::from(x)) / count;
                diff * diff
            })
            .sum();
        scored.push((pos, cand.rank, dist_sq.sqrt()));
    }
    let (position, score) = pick(&scored, Goal::Minimize).expect("non-empty");
    Ok(StepChoice {
        position,
        chunk_ref: candidates[position].0.chunk_ref.clone(),
        score,
    })
}

/// One CSI step: the candidate with maximal `I(candidate | selected_texts)`.
/// With `min_csi_filter`, candidates scoring below it are dropped first.
pub fn csi_step(
    scorer: &dyn SurprisalScorer,
    selected_texts: &[&str],
    candidates: &[&Candidate],
    min_csi_filter: Option<f64>,
) -> Result<StepChoice, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError::InvalidCandidates("no remaining candidates".into()));
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for (pos, cand) in candidates.iter().enumerate() {
        let csi = scorer
            .csi(&cand.text, selected_texts)
            .map_err(|source| SelectError::Proxy { step: 0, source })?;
        if min_csi_filter.is_some_and(|t| csi.value < t) {
            continue;
        }
        scored.push((pos, cand.rank, csi.value));
    }
    let (position, score) = pick(&scored, Goal::Maximize).ok_or(SelectError::AllFiltered)?;
    Ok(StepChoice {
        position,
        chunk_ref: candidates[position].chunk_ref.clone(),
        score,
    })
}

/// Backends available to [`select_evidence`]; EMB needs `embed`, CSI needs `proxy`.
#[derive(Clone, Copy, Default)]
pub struct SelectionBackends<'a> {
    pub embed: Option<&'a dyn EmbedBackend>,
    pub proxy: Option<&'a dyn SurprisalScorer>,
}

fn validate_candidates(retrieved: &[Candidate]) -> Result<(), SelectError> {
    let mut seen = HashSet::new();
    for (i, c) in retrieved.iter().enumerate() {
        if !seen.insert(&c.chunk_ref) {
            return Err(SelectError::InvalidCandidates(format!(
                "duplicate chunk {}",
                c.chunk_ref
            )));
        }
        if i > 0 && c.rank <= retrieved[i - 1].rank {
            return Err(SelectError::InvalidCandidates(
                "candidates must be in strictly increasing rank order".into(),
            ));
        }
    }
    Ok(())
}

/// Runs the full selection loop over the first `config.n` candidates.
pub fn select_evidence(
    query: &str,
    retrieved: &[Candidate],
    config: &SelectionConfig,
    backends: SelectionBackends<'_>,
) -> Result<EvidenceSet, SelectError> {
    config.validate()?;
    if retrieved.is_empty() {
        return Err(SelectError::EmptyCandidates);
    }
    validate_candidates(retrieved)?;
    let pool = &retrieved[..retrieved.len().min(config.n)];
    let target = config.k_sel.min(pool.len());

    match config.strategy {
        Strategy::Emb => {
            let backend = backends
                .embed
                .ok_or(SelectError::MissingBackend(Strategy::Emb, "embedding"))?;
            select_emb(query, pool, target, backend)
        }
        Strategy::Csi => {
            let scorer = backends
                .proxy
                .ok_or(SelectError::MissingBackend(Strategy::Csi, "proxy LM"))?;
            select_csi(query, pool, target, config, scorer)
        }
    }
}

fn select_emb(
    query: &str,
    pool: &[Candidate],
    target: usize,
    backend: &dyn EmbedBackend,
) -> Result<EvidenceSet, SelectError> {
    let mut texts: Vec<&str> = Vec::with_capacity(pool.len() + 1);
    texts.push(query);
    texts.extend(pool.iter().map(|c| c.text.as_str()));
    let embed_err = |source| SelectError::Embed { step: 1, source };
    let mut vectors = backend.embed_batch(&texts).map_err(embed_err)?;
    if vectors.len() != texts.len() {
        return Err(embed_err(EmbedError::Malformed(format!(
            "{} vectors for {} texts",
            vectors.len(),
            texts.len()
        ))));
    }
    let query_raw = vectors.remove(0);
    let query_vec = expand_query(&query_raw, &vectors[0]).map_err(embed_err)?;

    let first_dist = query_vec
        .values()
        .iter()
        .zip(vectors[0].values())
        .map(|(&q, &x)| {
            let d = f64::from(q) - f64::from(x);
            d * d
        })
        .sum::<f64>()
        .sqrt();

    let mut chosen = vec![0usize];
    let mut selected = vec![SelectedEvidence {
        chunk_ref: pool[0].chunk_ref.clone(),
        step_index: 1,
        step_score: first_dist,
    }];

    for step in 2..=target {
        let remaining: Vec<usize> = (0..pool.len()).filter(|i| !chosen.contains(i)).collect();
        let selected_vecs: Vec<&EmbeddingVector> = chosen.iter().map(|&i| &vectors[i]).collect();
        let cands: Vec<(&Candidate, &EmbeddingVector)> =
            remaining.iter().map(|&i| (&pool[i], &vectors[i])).collect();
        let choice = emb_step(&query_vec, &selected_vecs, &cands).map_err(|e| e.at_step(step))?;
        chosen.push(remaining[choice.position]);
        selected.push(SelectedEvidence {
            chunk_ref: choice.chunk_ref,
            step_index: step,
            step_score: choice.score,
        });
    }

    Ok(EvidenceSet {
        selected,
        strategy: Strategy::Emb,
        query_vec: Some(query_vec),
    })
}

fn select_csi(
    query: &str,
    pool: &[Candidate],
    target: usize,
    config: &SelectionConfig,
    scorer: &dyn SurprisalScorer,
) -> Result<EvidenceSet, SelectError> {
    let mut conditioning: Vec<&str> = Vec::with_capacity(target + 1);
    if config.csi_include_query {
        conditioning.push(query);
    }
    let first = scorer
        .csi(&pool[0].text, &conditioning)
        .map_err(|source| SelectError::Proxy { step: 1, source })?;

    let mut chosen = vec![0usize];
    conditioning.push(&pool[0].text);
    let mut selected = vec![SelectedEvidence {
        chunk_ref: pool[0].chunk_ref.clone(),
        step_index: 1,
        step_score: first.value,
    }];

    for step in 2..=target {
        let remaining: Vec<usize> = (0..pool.len()).filter(|i| !chosen.contains(i)).collect();
        let cands: Vec<&Candidate> = remaining.iter().map(|&i| &pool[i]).collect();
        let choice = csi_step(scorer, &conditioning, &cands, config.min_csi_filter)
            .map_err(|e| e.at_step(step))?;
        let idx = remaining[choice.position];
        chosen.push(idx);
        conditioning.push(&pool[idx].text);
        selected.push(SelectedEvidence {
            chunk_ref: choice.chunk_ref,
            step_index: step,
            step_score: choice.score,
        });
    }

    Ok(EvidenceSet {
        selected,
        strategy: Strategy::Csi,
        query_vec: None,
    })
}

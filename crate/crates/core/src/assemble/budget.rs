use serde::{Deserialize, Serialize};

use super::template::{Piece, PromptTemplate};
use super::AssembleError;
use crate::textcore::{Chunk, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BudgetMode {
    /// The first `k` selections are natural text, the rest compressed.
    FixedK { k: usize },
    /// The largest `k` whose prompt fits the budget.
    BudgetFit,
}

fn default_vector_cost() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetPolicy {
    pub budget_tokens: usize,
    /// Token-equivalents charged per compression vector.
    #[serde(default = "default_vector_cost")]
    pub vector_token_cost: usize,
    #[serde(flatten)]
    pub mode: BudgetMode,
}

impl BudgetPolicy {
    pub fn fixed_k(budget_tokens: usize, k: usize) -> Self {
        Self {
            budget_tokens,
            vector_token_cost: 1,
            mode: BudgetMode::FixedK { k },
        }
    }

    pub fn budget_fit(budget_tokens: usize) -> Self {
        Self {
            budget_tokens,
            vector_token_cost: 1,
            mode: BudgetMode::BudgetFit,
        }
    }

    pub fn with_vector_cost(mut self, cost: usize) -> Self {
        self.vector_token_cost = cost;
        self
    }

    pub fn validate(&self) -> Result<(), AssembleError> {
        if self.budget_tokens == 0 || self.vector_token_cost == 0 {
            return Err(AssembleError::InvalidPolicy(
                "budget_tokens and vector_token_cost must be positive".into(),
            ));
        }
        if self.budget_tokens < self.vector_token_cost {
            return Err(AssembleError::InvalidPolicy(format!(
                "budget {} is below the cost of one vector ({})",
                self.budget_tokens, self.vector_token_cost
            )));
        }
        Ok(())
    }
}

/// Token accounting for one rendered prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetUsage {
    /// Tokens over every text segment, template wording included.
    pub text_tokens: usize,
    /// Tokens of the natural passages alone.
    pub natural_tokens: usize,
    pub vector_count: usize,
    pub vector_tokens: usize,
    pub total_tokens: usize,
    pub budget_tokens: usize,
    pub within_budget: bool,
}

/// How an evidence list splits into natural and compressed contexts.
/// Indices refer to the evidence order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub k: usize,
    pub natural: Vec<usize>,
    pub compressed: Vec<usize>,
    pub usage: BudgetUsage,
}

/// Number of vectors a chunk compresses to.
pub fn vector_count(chunk: &Chunk, max_vectors_per_context: usize) -> usize {
    chunk.sentences.len().min(max_vectors_per_context)
}

pub(crate) fn count_text_tokens(tokenizer: &dyn Tokenizer, pieces: &[Piece]) -> usize {
    pieces
        .iter()
        .map(|p| match p {
            Piece::Text(t) => tokenizer.count_tokens(t),
            Piece::Slot(_) => 0,
        })
        .sum()
}

/// Accounting for the prompt with the first `k` contexts as natural text.
pub fn usage_for_k(
    contexts: &[Chunk],
    k: usize,
    question: &str,
    template: &PromptTemplate,
    tokenizer: &dyn Tokenizer,
    policy: &BudgetPolicy,
    max_vectors_per_context: usize,
) -> BudgetUsage {
    let natural: Vec<&str> = contexts[..k].iter().map(|c| c.text.as_str()).collect();
    let pieces = template.layout(question, &natural, contexts.len() - k);
    let text_tokens = count_text_tokens(tokenizer, &pieces);
    let natural_tokens = natural.iter().map(|t| tokenizer.count_tokens(t)).sum();
    let vector_count: usize = contexts[k..]
        .iter()
        .map(|c| vector_count(c, max_vectors_per_context))
        .sum();
    let vector_tokens = vector_count * policy.vector_token_cost;
    let total_tokens = text_tokens + vector_tokens;
    BudgetUsage {
        text_tokens,
        natural_tokens,
        vector_count,
        vector_tokens,
        total_tokens,
        budget_tokens: policy.budget_tokens,
        within_budget: total_tokens <= policy.budget_tokens,
    }
}

/// Splits the evidence (in selection order) into natural and compressed
/// contexts.
///
/// `FixedK` takes the first `k` as natural text and reports, but does not
/// enforce, the budget. `BudgetFit` picks the largest `k` for which the
/// rendered text plus `vector_token_cost` per compression vector fits, and
/// fails with [`AssembleError::BudgetInfeasible`] when no `k` does.
pub fn partition_evidence(
    contexts: &[Chunk],
    policy: &BudgetPolicy,
    question: &str,
    template: &PromptTemplate,
    tokenizer: &dyn Tokenizer,
    max_vectors_per_context: usize,
) -> Result<Partition, AssembleError> {
    policy.validate()?;
    if contexts.is_empty() {
        return Err(AssembleError::EmptyEvidence);
    }
    if max_vectors_per_context == 0 {
        return Err(AssembleError::InvalidPolicy(
            "max_vectors_per_context must be positive".into(),
        ));
    }
    let usage = |k| {
        usage_for_k(
            contexts,
            k,
            question,
            template,
            tokenizer,
            policy,
            max_vectors_per_context,
        )
    };

    let (k, usage) = match policy.mode {
        BudgetMode::FixedK { k } => {
            if k > contexts.len() {
                return Err(AssembleError::InvalidK {
                    k,
                    available: contexts.len(),
                });
            }
            (k, usage(k))
        }
        BudgetMode::BudgetFit => {
            let all: Vec<BudgetUsage> = (0..=contexts.len()).map(usage).collect();
            match all.iter().rposition(|u| u.within_budget) {
                Some(k) => (k, all[k]),
                None => {
                    let required = all.iter().map(|u| u.total_tokens).min().unwrap_or(0);
                    return Err(AssembleError::BudgetInfeasible {
                        required,
                        budget: policy.budget_tokens,
                        shortfall: required - policy.budget_tokens,
                    });
                }
            }
        }
    };
    Ok(Partition {
        k,
        natural: (0..k).collect(),
        compressed: (k..contexts.len()).collect(),
        usage,
    })
}

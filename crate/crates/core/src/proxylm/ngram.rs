use std::collections::HashMap;
use std::sync::Arc;

use super::{CsiScore, ProxyError, SurprisalScorer};
use crate::textcore::{RuleTokenizer, Tokenizer};

/// Display name of the begin-of-sequence padding symbol.
pub const BOS: &str = "<s>";
/// Display name of the unknown-token type.
pub const UNK: &str = "<unk>";

const UNK_ID: u32 = 0;
const BOS_ID: u32 = u32::MAX;

/// Additive-smoothed n-gram model over `rule-v1` tokens.
///
/// Each training text is left-padded with `order - 1` BOS symbols. The
/// vocabulary is every observed token plus UNK; BOS only ever appears as
/// context.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    alpha: f64,
    ids: HashMap<String, u32>,
    names: Vec<String>,
    context_counts: HashMap<Vec<u32>, u64>,
    ngram_counts: HashMap<Vec<u32>, u64>,
    tokenizer: Arc<dyn Tokenizer>,
}

pub fn train_ngram<S: AsRef<str>>(
    corpus_texts: &[S],
    order: usize,
    alpha: f64,
) -> Result<NgramModel, ProxyError> {
    NgramModel::train(corpus_texts, order, alpha, Arc::new(RuleTokenizer))
}

impl NgramModel {
    pub fn train<S: AsRef<str>>(
        corpus_texts: &[S],
        order: usize,
        alpha: f64,
        tokenizer: Arc<dyn Tokenizer>,
    ) -> Result<Self, ProxyError> {
        if order == 0 {
            return Err(ProxyError::InvalidOrder);
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ProxyError::InvalidAlpha(alpha));
        }
        let mut model = Self {
            order,
            alpha,
            ids: HashMap::new(),
            names: vec![UNK.to_string()],
            context_counts: HashMap::new(),
            ngram_counts: HashMap::new(),
            tokenizer,
        };

        let mut seen_any = false;
        for text in corpus_texts {
            let tokens = model.tokenizer.tokenize(text.as_ref());
            if tokens.is_empty() {
                continue;
            }
            seen_any = true;
            let mut seq = vec![BOS_ID; order - 1];
            for tok in tokens {
                let next = model.names.len() as u32;
                let id = *model.ids.entry(tok.clone()).or_insert_with(|| {
                    model.names.push(tok);
                    next
                });
                seq.push(id);
            }
            for window in seq.windows(order) {
                *model.ngram_counts.entry(window.to_vec()).or_default() += 1;
                *model
                    .context_counts
                    .entry(window[..order - 1].to_vec())
                    .or_default() += 1;
            }
        }
        if !seen_any {
            return Err(ProxyError::EmptyCorpus);
        }
        Ok(model)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Observed types plus UNK.
    pub fn vocab_size(&self) -> usize {
        self.names.len()
    }

    /// Vocabulary in id order; index 0 is UNK.
    pub fn vocab(&self) -> &[String] {
        &self.names
    }

    fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    fn symbol_id(&self, token: &str) -> u32 {
        if token == BOS {
            BOS_ID
        } else {
            self.id(token)
        }
    }

    /// Raw count of an n-gram given as display symbols ([`BOS`] allowed).
    pub fn ngram_count(&self, ngram: &[&str]) -> u64 {
        let key: Vec<u32> = ngram.iter().map(|t| self.symbol_id(t)).collect();
        self.ngram_counts.get(&key).copied().unwrap_or(0)
    }

    pub fn context_count(&self, context: &[&str]) -> u64 {
        let key: Vec<u32> = context.iter().map(|t| self.symbol_id(t)).collect();
        self.context_counts.get(&key).copied().unwrap_or(0)
    }

    /// Number of distinct n-grams with a nonzero count.
    pub fn distinct_ngrams(&self) -> usize {
        self.ngram_counts.len()
    }

    /// Maps the last `order - 1` tokens of a sequence to a context key,
    /// left-padding with BOS.
    fn context_of(&self, history: &[u32]) -> Vec<u32> {
        let width = self.order - 1;
        let take = history.len().min(width);
        let mut ctx = vec![BOS_ID; width - take];
        ctx.extend_from_slice(&history[history.len() - take..]);
        ctx
    }

    fn logprob_ids(&self, context: &[u32], token: u32) -> f64 {
        let ctx_count = self.context_counts.get(context).copied().unwrap_or(0) as f64;
        let mut key = Vec::with_capacity(self.order);
        key.extend_from_slice(context);
        key.push(token);
        let count = self.ngram_counts.get(&key).copied().unwrap_or(0) as f64;
        ((count + self.alpha) / (ctx_count + self.alpha * self.vocab_size() as f64)).ln()
    }

    /// Natural-log probability of `token` after `prefix_tokens`.
    pub fn token_logprob<S: AsRef<str>>(&self, prefix_tokens: &[S], token: &str) -> f64 {
        let history: Vec<u32> = prefix_tokens.iter().map(|t| self.id(t.as_ref())).collect();
        self.logprob_ids(&self.context_of(&history), self.id(token))
    }

    /// Log-probability of every vocabulary entry (UNK first) after `prefix_tokens`.
    pub fn distribution<S: AsRef<str>>(&self, prefix_tokens: &[S]) -> Vec<f64> {
        let history: Vec<u32> = prefix_tokens.iter().map(|t| self.id(t.as_ref())).collect();
        let ctx = self.context_of(&history);
        (0..self.vocab_size() as u32)
            .map(|id| self.logprob_ids(&ctx, id))
            .collect()
    }
}

impl SurprisalScorer for NgramModel {
    fn csi(&self, candidate: &str, conditioning: &[&str]) -> Result<CsiScore, ProxyError> {
        let candidate_ids: Vec<u32> = self
            .tokenizer
            .tokenize(candidate)
            .iter()
            .map(|t| self.id(t))
            .collect();
        if candidate_ids.is_empty() {
            return Err(ProxyError::EmptyCandidate);
        }
        let prefix = conditioning.join(" ");
        let mut history: Vec<u32> = self
            .tokenizer
            .tokenize(&prefix)
            .iter()
            .map(|t| self.id(t))
            .collect();
        let mut neg = Vec::with_capacity(candidate_ids.len());
        for id in candidate_ids {
            neg.push(-self.logprob_ids(&self.context_of(&history), id));
            history.push(id);
        }
        Ok(CsiScore::from_neg_logprobs(neg).expect("candidate is non-empty"))
    }
}

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Names a tokenizer. Two tokenizers with the same profile must produce
/// identical tokens for identical input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizerProfile {
    pub id: String,
    pub version: u32,
}

impl TokenizerProfile {
    pub const RULE_V1: &'static str = "rule-v1";

    pub fn rule_v1() -> Self {
        Self {
            id: Self::RULE_V1.to_string(),
            version: 1,
        }
    }
}

impl fmt::Display for TokenizerProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.id, self.version)
    }
}

/// A deterministic tokenizer.
///
/// Implementors only need [`Tokenizer::token_spans`]; the byte spans are what
/// lets the chunker hard-split oversize sentences at token boundaries.
pub trait Tokenizer: Send + Sync + fmt::Debug {
    fn profile(&self) -> TokenizerProfile;

    /// Byte ranges of every token in `text`, in order, non-overlapping.
    fn token_spans(&self, text: &str) -> Vec<Range<usize>>;

    fn tokenize(&self, text: &str) -> Vec<String> {
        self.token_spans(text)
            .into_iter()
            .map(|span| text[span].to_string())
            .collect()
    }

    fn count_tokens(&self, text: &str) -> usize {
        self.token_spans(text).len()
    }
}

/// The built-in `rule-v1` tokenizer: maximal runs of letters, digits and
/// underscore form one token; every other non-whitespace character is a
/// token on its own.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RuleTokenizer;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl Tokenizer for RuleTokenizer {
    fn profile(&self) -> TokenizerProfile {
        TokenizerProfile::rule_v1()
    }

    fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
        let mut spans = Vec::new();
        let mut word_start: Option<usize> = None;
        for (i, c) in text.char_indices() {
            if is_word_char(c) {
                word_start.get_or_insert(i);
                continue;
            }
            if let Some(start) = word_start.take() {
                spans.push(start..i);
            }
            if !c.is_whitespace() {
                spans.push(i..i + c.len_utf8());
            }
        }
        if let Some(start) = word_start {
            spans.push(start..text.len());
        }
        spans
    }

    fn count_tokens(&self, text: &str) -> usize {
        let mut count = 0;
        let mut in_word = false;
        for c in text.chars() {
            if is_word_char(c) {
                if !in_word {
                    count += 1;
                    in_word = true;
                }
            } else {
                in_word = false;
                if !c.is_whitespace() {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Tokenizes with `rule-v1`.
pub fn tokenize(text: &str) -> Vec<String> {
    RuleTokenizer.tokenize(text)
}

/// Token count under `rule-v1`.
pub fn count_tokens(text: &str) -> usize {
    RuleTokenizer.count_tokens(text)
}

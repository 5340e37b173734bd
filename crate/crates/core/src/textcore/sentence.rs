use serde::{Deserialize, Serialize};

use super::tokenize::{RuleTokenizer, Tokenizer};

/// Version of [`ABBREVIATIONS`]; bump whenever the table changes.
pub const ABBREVIATIONS_VERSION: u32 = 1;

/// Words whose trailing period never ends a sentence. Matched case-insensitively
/// against the whitespace-delimited word that carries the period.
pub const ABBREVIATIONS: &[&str] = &[
    "dr.", "mr.", "mrs.", "ms.", "prof.", "etc.", "e.g.", "i.e.", "vs.", "fig.", "figs.", "eq.",
    "eqs.", "no.", "st.", "jr.", "sr.", "cf.", "al.", "vol.", "pp.",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub token_count: usize,
}

impl Sentence {
    pub fn new(text: impl Into<String>, tokenizer: &dyn Tokenizer) -> Self {
        let text = text.into();
        let token_count = tokenizer.count_tokens(&text);
        Self { text, token_count }
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opening(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

fn is_abbreviation(word: &str) -> bool {
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Splits with the `rule-v1` tokenizer supplying sentence token counts.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    split_sentences_with(&RuleTokenizer, text)
}

/// Splits `text` at terminal punctuation (`.`, `!`, `?`, optionally followed by
/// closing quotes or brackets) when the next non-whitespace character is an
/// uppercase letter (optionally behind an opening quote) or the text ends.
/// A lone period closing a word from [`ABBREVIATIONS`] is not a boundary.
///
/// Sentences are trimmed; only boundary whitespace is dropped.
pub fn split_sentences_with(tokenizer: &dyn Tokenizer, text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let len = chars.len();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    let push = |slice: &str, out: &mut Vec<Sentence>| {
        let trimmed = slice.trim();
        if !trimmed.is_empty() {
            out.push(Sentence::new(trimmed, tokenizer));
        }
    };

    while i < len {
        let (pos, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < len && is_terminal(chars[j].1) {
            j += 1;
        }
        while j < len && is_closing(chars[j].1) {
            j += 1;
        }
        let mut w = j;
        while w < len && chars[w].1.is_whitespace() {
            w += 1;
        }

        let mut boundary = if w == len {
            true
        } else if w > j {
            let next = chars[w].1;
            next.is_uppercase()
                || (is_opening(next) && chars.get(w + 1).is_some_and(|&(_, c)| c.is_uppercase()))
        } else {
            false
        };

        if boundary && c == '.' && j == i + 1 {
            let word_start = text[..pos]
                .rfind(char::is_whitespace)
                .map_or(0, |p| p + text[p..].chars().next().map_or(1, char::len_utf8));
            if is_abbreviation(&text[word_start..=pos]) {
                boundary = false;
            }
        }

        if boundary {
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            push(&text[start..end], &mut sentences);
            start = end;
        }
        i = j;
    }
    push(&text[start..], &mut sentences);
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(text: &str) -> Vec<String> {
        split_sentences(text).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn abbreviation_does_not_split() {
        assert_eq!(texts("Dr. Smith arrived. He left."), ["Dr. Smith arrived.", "He left."]);
        assert_eq!(texts("See e.g. Fig. Two for details."), ["See e.g. Fig. Two for details."]);
    }

    #[test]
    fn no_terminal_is_one_sentence() {
        assert_eq!(texts("One sentence"), ["One sentence"]);
    }

    #[test]
    fn initials_outside_table_split() {
        assert_eq!(texts("A. B. C."), ["A.", "B.", "C."]);
    }

    #[test]
    fn lowercase_continuation_and_decimals() {
        assert_eq!(texts("It costs 3.5 dollars. then more."), ["It costs 3.5 dollars. then more."]);
        assert_eq!(texts("Really?! Yes. \"Quoted.\" Next"), ["Really?!", "Yes.", "\"Quoted.\"", "Next"]);
    }

    #[test]
    fn empty_and_whitespace_only() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("  \n ").is_empty());
    }

    #[test]
    fn token_counts_match_tokenizer() {
        for s in split_sentences("Hello, world! Bye now.") {
            assert_eq!(s.token_count, crate::textcore::count_tokens(&s.text));
        }
    }

    proptest! {
        #[test]
        fn only_boundary_whitespace_is_dropped(text in "([A-Za-z]{1,6}[ .!?,]{1,2}){0,12}") {
            let sentences = split_sentences(&text);
            let mut cursor = 0;
            for s in &sentences {
                let rest = &text[cursor..];
                let lead = rest.len() - rest.trim_start().len();
                prop_assert!(rest[lead..].starts_with(s.text.as_str()));
                cursor += lead + s.text.len();
            }
            prop_assert!(text[cursor..].trim().is_empty());
        }
    }
}

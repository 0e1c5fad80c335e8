//! Tokenization, fixed-length windows and POS tagging.

mod pretagged;
mod tagger;
mod tagset;

pub use pretagged::{parse_pretagged, write_pretagged, TaggedSentence};
pub use tagger::{fixture_tagged_corpus, train_tagger, PerceptronTagger};
pub use tagset::{one_hot, PosTagSequence, Tag, TagSet};

use thiserror::Error;

/// Sequence length used throughout: the median participant interview length.
pub const SEQ_LEN: usize = 73;
pub const PAD_TOKEN: &str = "<pad>";

#[derive(Debug, Error)]
pub enum TextError {
    #[error("text has no word tokens")]
    EmptyText,
    #[error("unknown POS tag {0:?}")]
    UnknownTag(String),
    #[error("tagged corpus is empty")]
    EmptyCorpus,
    #[error("epochs must be at least 1")]
    ZeroEpochs,
    #[error("bad tagger model line {line}: {reason}")]
    BadModel { line: usize, reason: String },
    #[error("bad pre-tagged input line {line}: {reason}")]
    BadPretagged { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    /// Token count before truncation or padding.
    pub original_length: usize,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// `true` at positions holding a real (non-pad) token.
    pub fn mask(&self) -> Vec<bool> {
        self.tokens.iter().map(|t| t != PAD_TOKEN).collect()
    }

    pub fn real_tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str).filter(|t| *t != PAD_TOKEN)
    }
}

/// Whitespace tokenization with lowercasing. Tokens without any letter or
/// digit (terminal `.`, `?`, `!`, stray commas) are dropped and trailing
/// sentence punctuation is stripped from words; apostrophes stay inside.
pub fn tokenize(text: &str) -> Result<TokenSequence, TextError> {
    let tokens: Vec<String> = text
        .split_whitespace()
        .map(|t| t.trim_end_matches(['.', '?', '!', ',']).to_lowercase())
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .collect();
    if tokens.is_empty() {
        return Err(TextError::EmptyText);
    }
    Ok(TokenSequence {
        original_length: tokens.len(),
        tokens,
    })
}

/// Truncates to the first `budget` tokens or right-pads with [`PAD_TOKEN`].
pub fn fix_length(seq: &TokenSequence, budget: usize) -> TokenSequence {
    assert!(budget >= 1, "budget must be at least 1");
    let mut tokens: Vec<String> = seq.tokens.iter().take(budget).cloned().collect();
    tokens.resize(budget, PAD_TOKEN.to_string());
    TokenSequence {
        tokens,
        original_length: seq.original_length,
    }
}

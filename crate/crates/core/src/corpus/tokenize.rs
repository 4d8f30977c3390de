use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerKind {
    /// Overlapping character bigrams of the normalised text.
    #[default]
    CharBigram,
    /// Whitespace-separated words, for pre-segmented data.
    Word,
}

/// Lowercases, trims, and collapses whitespace runs to one space.
pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Overlapping character bigrams: `"abc"` → `["ab", "bc"]`. A
/// single-character text yields that character.
pub fn tokenize_bigram(text: &str) -> Result<Vec<String>> {
    let norm = normalize(text);
    let chars: Vec<char> = norm.chars().collect();
    match chars.len() {
        0 => Err(Error::EmptyInput("text is empty after normalization")),
        1 => Ok(vec![chars[0].to_string()]),
        _ => Ok(chars.windows(2).map(|w| w.iter().collect()).collect()),
    }
}

pub fn tokenize_words(text: &str) -> Result<Vec<String>> {
    let norm = normalize(text);
    if norm.is_empty() {
        return Err(Error::EmptyInput("text is empty after normalization"));
    }
    Ok(norm.split(' ').map(str::to_string).collect())
}

impl TokenizerKind {
    pub fn tokenize(self, text: &str) -> Result<Vec<String>> {
        match self {
            TokenizerKind::CharBigram => tokenize_bigram(text),
            TokenizerKind::Word => tokenize_words(text),
        }
    }
}

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tokenize::TokenizerKind;
use super::QCSTriple;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

pub const SPECIALS: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Surface form `decode` uses for an unknown token.
pub const UNK_SURFACE: char = '\u{FFFD}';

/// Token ids of one sequence, EOS-terminated when produced by [`Vocabulary::encode`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq(pub Vec<usize>);

impl TokenSeq {
    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Ids before the first EOS, with PAD and BOS removed.
    pub fn content(&self) -> Vec<usize> {
        self.0
            .iter()
            .copied()
            .take_while(|&id| id != EOS)
            .filter(|&id| id != PAD && id != BOS)
            .collect()
    }
}

/// Token ↔ id bijection. Ids 0..4 are PAD, BOS, EOS, UNK.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    kind: TokenizerKind,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokenizer: TokenizerKind,
    tokens: Vec<String>,
}

impl TryFrom<VocabRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabRepr) -> Result<Self> {
        Vocabulary::from_tokens(r.tokenizer, r.tokens)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            tokenizer: v.kind,
            tokens: v.tokens,
        }
    }
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(kind: TokenizerKind, tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < SPECIALS.len()
            || tokens.iter().zip(SPECIALS).any(|(t, s)| t != s)
        {
            return Err(Error::Corruption("vocabulary must start with the special tokens".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), id).is_some() {
                return Err(Error::Corruption(format!("duplicate vocabulary token {tok:?}")));
            }
        }
        Ok(Vocabulary {
            kind,
            tokens,
            index,
        })
    }

    /// Specials, then every token seen at least `min_count` times, by
    /// descending count with lexicographic tie-breaking.
    pub fn build(corpus: &[QCSTriple], min_count: usize, kind: TokenizerKind) -> Result<Self> {
        let texts = corpus
            .iter()
            .flat_map(|t| [&t.question, &t.conclusion, &t.supplement]);
        Self::build_from_texts(texts, min_count, kind)
    }

    pub fn build_from_texts<'a>(
        texts: impl IntoIterator<Item = &'a String>,
        min_count: usize,
        kind: TokenizerKind,
    ) -> Result<Self> {
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut any = false;
        for text in texts {
            any = true;
            if text.trim().is_empty() {
                continue;
            }
            for tok in kind.tokenize(text)? {
                *counts.entry(tok).or_default() += 1;
            }
        }
        if !any {
            return Err(Error::EmptyInput("vocabulary corpus"));
        }
        let mut ranked: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(tok, c)| *c >= min_count.max(1) && !SPECIALS.contains(&tok.as_str()))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let tokens = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(ranked.into_iter().map(|(t, _)| t))
            .collect();
        Self::from_tokens(kind, tokens)
    }

    pub fn tokenizer(&self) -> TokenizerKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Id of a surface token; specials' spellings are not addressable.
    pub fn id(&self, token: &str) -> usize {
        match self.index.get(token) {
            Some(&id) if id >= SPECIALS.len() => id,
            _ => UNK,
        }
    }

    /// Tokenizes, maps unknowns to UNK, and appends EOS.
    pub fn encode(&self, text: &str) -> Result<TokenSeq> {
        let mut ids: Vec<usize> = self
            .kind
            .tokenize(text)?
            .iter()
            .map(|t| self.id(t))
            .collect();
        ids.push(EOS);
        Ok(TokenSeq(ids))
    }

    /// Inverse of [`encode`](Self::encode) for in-vocabulary text: specials
    /// are dropped, decoding stops at EOS, and bigrams are merged by
    /// appending the last character of every token after the first.
    pub fn decode(&self, seq: &[usize]) -> Result<String> {
        let mut out = String::new();
        let mut first = true;
        for &id in seq {
            if id >= self.len() {
                return Err(Error::Corruption(format!(
                    "token id {id} outside vocabulary of size {}",
                    self.len()
                )));
            }
            match id {
                EOS => break,
                PAD | BOS => continue,
                _ => {}
            }
            let surface = if id == UNK {
                UNK_SURFACE.to_string()
            } else {
                self.tokens[id].clone()
            };
            match self.kind {
                TokenizerKind::CharBigram => {
                    if first {
                        out.push_str(&surface);
                    } else if let Some(c) = surface.chars().last() {
                        out.push(c);
                    }
                }
                TokenizerKind::Word => {
                    if !first {
                        out.push(' ');
                    }
                    out.push_str(&surface);
                }
            }
            first = false;
        }
        Ok(out)
    }
}

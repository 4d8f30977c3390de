use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub vocab_size: usize,
    /// Hinge margin `M`.
    pub margin: f64,
    /// Weight of the closeness loss in the joint objective.
    pub alpha: f64,
    /// `false` removes the attention context from the supplement decoder.
    pub use_attention: bool,
    /// `false` replaces both sentence-type vectors with zeros.
    pub use_sentence_type: bool,
    /// Share one BiLSTM between the conclusion and supplement embeddings.
    pub share_ensemble: bool,
    pub max_decode_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 32,
            hidden_dim: 32,
            vocab_size: 0,
            margin: 0.2,
            alpha: 1.0,
            use_attention: true,
            use_sentence_type: true,
            share_ensemble: false,
            max_decode_len: 64,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.vocab_size == 0 {
            return Err(Error::Config(format!(
                "embed_dim, hidden_dim and vocab_size must be >= 1 (got {}, {}, {})",
                self.embed_dim, self.hidden_dim, self.vocab_size
            )));
        }
        // One matrix U scores decoder states and rebuilds soft embeddings.
        if self.embed_dim != self.hidden_dim {
            return Err(Error::Config(format!(
                "the shared output matrix requires embed_dim == hidden_dim (got {} and {})",
                self.embed_dim, self.hidden_dim
            )));
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(Error::Config(format!("margin must be >= 0, got {}", self.margin)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.max_decode_len == 0 {
            return Err(Error::Config("max_decode_len must be >= 1".into()));
        }
        Ok(())
    }
}

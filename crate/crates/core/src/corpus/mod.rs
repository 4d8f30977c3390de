//! Tokenization, vocabulary, JSONL interchange, batching, and the synthetic
//! corpus generator.

mod batch;
mod jsonl;
mod synth;
mod tokenize;
mod vocab;

use serde::{Deserialize, Serialize};

pub use batch::{batches_from_encoded, encode_all, make_batches, Batch, EncodedTriple, Padded};
pub use jsonl::{load_jsonl, read_objects, save_jsonl, write_jsonl};
pub(crate) use jsonl::string_field;
pub use synth::{generate_synthetic, Family, SyntheticSpec, CONTENT_WORDS, DISTINCT_FAMILIES};
pub use tokenize::{normalize, tokenize_bigram, tokenize_words, TokenizerKind};
pub use vocab::{TokenSeq, Vocabulary, BOS, EOS, PAD, SPECIALS, UNK, UNK_SURFACE};

/// One question with its conclusion and supplement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QCSTriple {
    pub id: String,
    pub question: String,
    pub conclusion: String,
    pub supplement: String,
}

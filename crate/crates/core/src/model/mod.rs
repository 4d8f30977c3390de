//! The answer generator: encoder, twin decoders, ensemble network and
//! losses, built on the `numkit` tape.

mod checkpoint;
mod config;
mod generate;
mod lstm;
mod network;
mod params;
mod trace;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint,
    FORMAT_VERSION, MAGIC,
};
pub use config::ModelConfig;
pub use generate::Generation;
pub use lstm::{BiLstm, CellOut, Gates, LstmCell};
pub use network::{
    greedy_token, DecoderRun, EncodedQuestion, Feed, Nagm, SentenceType, SupplementStep,
};
pub use params::{
    init_params, param_shapes, validate_params, ATTENTION_V, ATTENTION_W, CONCLUSION_DECODER,
    CONCLUSION_ENSEMBLE, ENCODER_BWD, ENCODER_FWD, INPUT_EMBEDDING, OUTPUT_EMBEDDING,
    SUPPLEMENT_DECODER, SUPPLEMENT_ENSEMBLE, TYPE_CONCLUSION, TYPE_SUPPLEMENT,
};
pub use trace::{Embeddings, ForwardTrace, LossParts};

use crate::corpus::EncodedTriple;
use crate::error::Result;
use crate::numkit::{grad_check, GradCheckOptions, GradCheckReport, ParamStore};

/// Finite-difference check of the joint loss for one example and negative.
pub fn loss_grad_check(
    model: &Nagm,
    params: &ParamStore,
    example: &EncodedTriple,
    negative: &EncodedTriple,
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    grad_check(
        params,
        |tape| Ok(model.loss_total(tape, example, negative)?.0),
        opts,
    )
}

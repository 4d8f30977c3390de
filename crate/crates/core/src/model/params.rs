//! Parameter layout of the network.
//!
//! LSTM gate blocks are stacked row-wise in the order input, forget,
//! output, candidate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::numkit::{ParamStore, Tensor};

pub const INPUT_EMBEDDING: &str = "embed.input";
/// Shared word-representation matrix, `embed_dim × vocab_size`.
pub const OUTPUT_EMBEDDING: &str = "embed.output";
pub const TYPE_CONCLUSION: &str = "type.conclusion";
pub const TYPE_SUPPLEMENT: &str = "type.supplement";
pub const ATTENTION_W: &str = "att.w";
pub const ATTENTION_V: &str = "att.v";

pub const ENCODER_FWD: &str = "enc.fwd";
pub const ENCODER_BWD: &str = "enc.bwd";
pub const CONCLUSION_DECODER: &str = "dec_c";
pub const SUPPLEMENT_DECODER: &str = "dec_s";
pub const CONCLUSION_ENSEMBLE: &str = "ens_c";
pub const SUPPLEMENT_ENSEMBLE: &str = "ens_s";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Init {
    Glorot,
    Zero,
    /// Zero except the forget-gate block, which starts at +1.
    LstmBias,
}

fn lstm_entries(out: &mut Vec<(String, Vec<usize>, Init)>, prefix: &str, input: usize, hidden: usize) {
    out.push((format!("{prefix}.w_x"), vec![4 * hidden, input], Init::Glorot));
    out.push((format!("{prefix}.w_h"), vec![4 * hidden, hidden], Init::Glorot));
    out.push((format!("{prefix}.b"), vec![4 * hidden], Init::LstmBias));
}

fn init_entries(out: &mut Vec<(String, Vec<usize>, Init)>, prefix: &str, hidden: usize) {
    for part in ["init_h", "init_c"] {
        out.push((format!("{prefix}.{part}.w"), vec![hidden, 2 * hidden], Init::Glorot));
        out.push((format!("{prefix}.{part}.b"), vec![hidden], Init::Zero));
    }
}

fn layout(config: &ModelConfig) -> Vec<(String, Vec<usize>, Init)> {
    let (e, d, k) = (config.embed_dim, config.hidden_dim, config.vocab_size);
    let mut out = vec![
        (INPUT_EMBEDDING.to_string(), vec![k, e], Init::Glorot),
        (OUTPUT_EMBEDDING.to_string(), vec![e, k], Init::Glorot),
        (TYPE_CONCLUSION.to_string(), vec![e], Init::Glorot),
        (TYPE_SUPPLEMENT.to_string(), vec![e], Init::Glorot),
    ];
    lstm_entries(&mut out, ENCODER_FWD, 2 * e, d);
    lstm_entries(&mut out, ENCODER_BWD, 2 * e, d);
    init_entries(&mut out, CONCLUSION_DECODER, d);
    lstm_entries(&mut out, CONCLUSION_DECODER, 2 * e, d);
    init_entries(&mut out, SUPPLEMENT_DECODER, d);
    lstm_entries(&mut out, SUPPLEMENT_DECODER, 2 * e, d);
    out.push((format!("{SUPPLEMENT_DECODER}.w_att"), vec![4 * d, 2 * d], Init::Glorot));
    out.push((ATTENTION_W.to_string(), vec![2 * d, d], Init::Glorot));
    out.push((ATTENTION_V.to_string(), vec![2 * d], Init::Glorot));
    for prefix in [CONCLUSION_ENSEMBLE, SUPPLEMENT_ENSEMBLE] {
        if prefix == SUPPLEMENT_ENSEMBLE && config.share_ensemble {
            continue;
        }
        lstm_entries(&mut out, &format!("{prefix}.fwd"), e, d);
        lstm_entries(&mut out, &format!("{prefix}.bwd"), e, d);
    }
    out
}

/// Name and shape of every tensor a model with `config` owns.
pub fn param_shapes(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    layout(config).into_iter().map(|(n, s, _)| (n, s)).collect()
}

/// Seeded initialisation: Glorot-uniform weights, zero biases, forget-gate
/// biases at +1.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ParamStore> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    for (name, shape, init) in layout(config) {
        let value = match init {
            Init::Glorot => ParamStore::glorot(&shape, &mut rng),
            Init::Zero => Tensor::zeros(&shape),
            Init::LstmBias => {
                let mut t = Tensor::zeros(&shape);
                let hidden = shape[0] / 4;
                for v in &mut t.data_mut()[hidden..2 * hidden] {
                    *v = 1.0;
                }
                t
            }
        };
        store.insert(name, value);
    }
    Ok(store)
}

/// Checks that `store` holds exactly the tensors `config` expects.
pub fn validate_params(config: &ModelConfig, store: &ParamStore) -> Result<()> {
    let expected = param_shapes(config);
    for (name, shape) in &expected {
        match store.get(name) {
            None => return Err(Error::Config(format!("missing parameter tensor \"{name}\""))),
            Some(t) if t.shape() != shape.as_slice() => {
                return Err(Error::ShapeMismatch {
                    name: name.clone(),
                    expected: shape.clone(),
                    found: t.shape().to_vec(),
                })
            }
            Some(_) => {}
        }
    }
    if store.len() != expected.len() {
        let extra = store
            .names()
            .find(|n| !expected.iter().any(|(e, _)| e == n))
            .unwrap_or_default();
        return Err(Error::Config(format!("unexpected parameter tensor \"{extra}\"")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ModelConfig {
        ModelConfig {
            embed_dim: 4,
            hidden_dim: 4,
            vocab_size: 9,
            ..Default::default()
        }
    }

    #[test]
    fn init_is_seeded_and_valid() {
        let a = init_params(&config(), 3).unwrap();
        let b = init_params(&config(), 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_params(&config(), 4).unwrap());
        validate_params(&config(), &a).unwrap();
        assert!(a.all_finite());
    }

    #[test]
    fn forget_bias_and_bounds() {
        let p = init_params(&config(), 0).unwrap();
        let b = p.get("enc.fwd.b").unwrap().data();
        assert_eq!(&b[..4], &[0.0; 4]);
        assert_eq!(&b[4..8], &[1.0; 4]);
        assert_eq!(&b[8..], &[0.0; 8]);
        let w = p.get("att.w").unwrap();
        let bound = (6.0f64 / (8.0 + 4.0)).sqrt();
        assert!(w.data().iter().all(|v| v.abs() <= bound));
        assert_eq!(p.get(OUTPUT_EMBEDDING).unwrap().shape(), &[4, 9]);
    }

    #[test]
    fn shared_ensemble_drops_tensors() {
        let shared = ModelConfig {
            share_ensemble: true,
            ..config()
        };
        let n_shared = param_shapes(&shared).len();
        assert_eq!(param_shapes(&config()).len(), n_shared + 6);
    }

    #[test]
    fn validate_names_mismatched_tensor() {
        let big = ModelConfig {
            embed_dim: 8,
            hidden_dim: 8,
            ..config()
        };
        let p = init_params(&config(), 0).unwrap();
        match validate_params(&big, &p) {
            Err(Error::ShapeMismatch { name, .. }) => assert_eq!(name, INPUT_EMBEDDING),
            other => panic!("{other:?}"),
        }
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cues::{rule_classify, CuePhraseList};
use super::{Label, LabelSource, LabeledSentence, SentenceLabel};
use crate::corpus::{TokenizerKind, Vocabulary};
use crate::error::{Error, Result};
use crate::model::BiLstm;
use crate::numkit::{accumulate_grads, scale_grads, Adagrad, Grads, ParamStore, Tape, Tensor, Var};

const EMBEDDING: &str = "cls.embed";
const ENCODER: &str = "cls";
const HEAD_W: &str = "cls.head.w";
const HEAD_B: &str = "cls.head.b";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Probabilities at or above this value mean supplement.
    pub threshold: f64,
    pub tokenizer: TokenizerKind,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            embed_dim: 16,
            hidden_dim: 16,
            epochs: 15,
            batch_size: 8,
            lr: 0.05,
            seed: 0,
            threshold: 0.5,
            tokenizer: TokenizerKind::CharBigram,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "classifier embed_dim, hidden_dim and batch_size must be >= 1".into(),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "classifier threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Adagrad::new(self.lr, 1e-8).map(|_| ())
    }
}

/// Trained sentence classifier: token embeddings, a BiLSTM with max-pooling
/// and a logistic head.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    pub config: ClassifierConfig,
    pub vocab: Vocabulary,
    pub params: ParamStore,
    pub cues: CuePhraseList,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

fn init(config: &ClassifierConfig, vocab_size: usize) -> ParamStore {
    let (e, d) = (config.embed_dim, config.hidden_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut store = ParamStore::new();
    store.insert(EMBEDDING, ParamStore::glorot(&[vocab_size, e], &mut rng));
    for dir in ["fwd", "bwd"] {
        let prefix = format!("{ENCODER}.{dir}");
        store.insert(format!("{prefix}.w_x"), ParamStore::glorot(&[4 * d, e], &mut rng));
        store.insert(format!("{prefix}.w_h"), ParamStore::glorot(&[4 * d, d], &mut rng));
        let mut b = Tensor::zeros(&[4 * d]);
        b.data_mut()[d..2 * d].fill(1.0);
        store.insert(format!("{prefix}.b"), b);
    }
    store.insert(HEAD_W, ParamStore::glorot(&[2 * d], &mut rng));
    store.insert(HEAD_B, Tensor::zeros(&[1]));
    store
}

/// Logit `w·O^a + b` of the supplement class.
fn logit(tape: &mut Tape<'_>, ids: &[usize]) -> Result<Var> {
    let table = tape.param(EMBEDDING)?;
    let inputs = ids
        .iter()
        .map(|&id| tape.gather(table, id))
        .collect::<Result<Vec<_>>>()?;
    let encoder = BiLstm::bind(tape, ENCODER)?;
    let (_, pooled) = encoder.embed(tape, &inputs)?;
    let w = tape.param(HEAD_W)?;
    let b = tape.param(HEAD_B)?;
    let score = tape.dot(w, pooled)?;
    tape.add(score, b)
}

/// Binary cross-entropy as a two-way softmax over `[0, z]`.
fn example_loss(tape: &mut Tape<'_>, ids: &[usize], label: Label) -> Result<Var> {
    let z = logit(tape, ids)?;
    let zero = tape.constant(Tensor::zeros(&[1]))?;
    let pair = tape.concat(&[zero, z])?;
    tape.neg_log_softmax(pair, usize::from(label == Label::Supplement))
}

impl Classifier {
    /// Minimises binary cross-entropy with AdaGrad over seeded mini-batches.
    pub fn train(
        labeled: &[LabeledSentence],
        config: &ClassifierConfig,
        cues: CuePhraseList,
    ) -> Result<Classifier> {
        config.validate()?;
        if labeled.is_empty() {
            return Err(Error::EmptyInput("labeled sentences"));
        }
        let supplements = labeled.iter().filter(|l| l.label == Label::Supplement).count();
        if supplements == 0 || supplements == labeled.len() {
            return Err(Error::DegenerateData(
                "classifier training needs both conclusion and supplement examples".into(),
            ));
        }
        let texts: Vec<String> = labeled.iter().map(|l| l.sentence.clone()).collect();
        let vocab = Vocabulary::build_from_texts(texts.iter(), 1, config.tokenizer)?;
        let encoded = labeled
            .iter()
            .map(|l| Ok((vocab.encode(&l.sentence)?.0, l.label)))
            .collect::<Result<Vec<_>>>()?;

        let mut params = init(config, vocab.len());
        let opt = Adagrad::new(config.lr, 1e-8)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut loss_history = Vec::with_capacity(config.epochs);
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let mut grads = Grads::new();
                for &i in chunk {
                    let (ids, label) = &encoded[i];
                    let mut tape = Tape::new(&params);
                    let loss = example_loss(&mut tape, ids, *label)?;
                    epoch_loss += tape.scalar(loss);
                    accumulate_grads(&mut grads, &tape.backward(loss)?);
                }
                scale_grads(&mut grads, 1.0 / chunk.len() as f64);
                opt.step(&mut params, &grads)?;
            }
            loss_history.push(epoch_loss / encoded.len() as f64);
        }
        Ok(Classifier {
            config: config.clone(),
            vocab,
            params,
            cues,
            loss_history,
        })
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }

    /// Model probability of the supplement class, ignoring cue rules.
    pub fn probability(&self, sentence: &str) -> Result<f64> {
        let ids = self.vocab.encode(sentence)?.0;
        let mut tape = Tape::new(&self.params);
        let z = logit(&mut tape, &ids)?;
        let z = tape.sigmoid(z)?;
        Ok(tape.scalar(z))
    }

    /// Cue rules first, then the model with a `≥ threshold` boundary.
    pub fn classify(&self, sentence: &str) -> Result<SentenceLabel> {
        if sentence.trim().is_empty() {
            return Err(Error::EmptyInput("sentence"));
        }
        if let Some(label) = rule_classify(sentence, &self.cues) {
            return Ok(label);
        }
        let probability = self.probability(sentence)?;
        let label = if probability >= self.config.threshold {
            Label::Supplement
        } else {
            Label::Conclusion
        };
        Ok(SentenceLabel {
            label,
            probability,
            source: LabelSource::Model,
        })
    }

    /// Fraction of `labeled` whose label `classify` reproduces.
    pub fn accuracy(&self, labeled: &[LabeledSentence]) -> Result<f64> {
        if labeled.is_empty() {
            return Err(Error::EmptyInput("labeled sentences"));
        }
        let mut hits = 0usize;
        for l in labeled {
            if self.classify(&l.sentence)?.label == l.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / labeled.len() as f64)
    }
}

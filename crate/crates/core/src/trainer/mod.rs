//! Mini-batch AdaGrad training with one sampled negative per example.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedTriple, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{init_params, save_checkpoint, Checkpoint, LossParts, ModelConfig, Nagm};
use crate::numkit::{accumulate_grads, scale_grads, Adagrad, Grads, ParamStore};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    /// Passes over the corpus.
    pub iterations: usize,
    pub seed: u64,
    /// Write a checkpoint every this many iterations; 0 writes only the
    /// final one.
    pub checkpoint_interval: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.05,
            batch_size: 16,
            iterations: 100,
            seed: 0,
            checkpoint_interval: 0,
            checkpoint_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mean losses over one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub l_w: f64,
    pub l_s: f64,
    pub ce: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    /// Excluded from the CSV so that logs of equal runs compare equal.
    pub wall_clock_secs: f64,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "iteration,l_w,l_s,ce";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", r.iteration, r.l_w, r.l_s, r.ce));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ParamStore,
    pub log: TrainLog,
}

/// Uniform choice among batch members with a different id, falling back to
/// the whole corpus when the batch offers none.
pub fn sample_negative(
    batch: &[usize],
    positive: usize,
    corpus: &[EncodedTriple],
    rng: &mut impl Rng,
) -> Result<usize> {
    let id = &corpus[positive].id;
    let in_batch: Vec<usize> = batch.iter().copied().filter(|&j| corpus[j].id != *id).collect();
    if let Some(&j) = in_batch.choose(rng) {
        return Ok(j);
    }
    let all: Vec<usize> = (0..corpus.len()).filter(|&j| corpus[j].id != *id).collect();
    all.choose(rng).copied().ok_or_else(|| {
        Error::DegenerateData(format!("no negative available for triple \"{id}\""))
    })
}

/// Mean `L_w` over a batch and the matching mean gradient. Per-example
/// gradients run in parallel and are summed in batch order.
pub fn batch_gradient(
    model: &Nagm,
    params: &ParamStore,
    corpus: &[EncodedTriple],
    pairs: &[(usize, usize)],
) -> Result<(LossParts, Grads)> {
    let results: Vec<Result<(LossParts, Grads)>> = pairs
        .par_iter()
        .map(|&(pos, neg)| model.example_gradient(params, &corpus[pos], &corpus[neg]))
        .collect();
    let mut grads = Grads::new();
    let mut mean = LossParts::default();
    for r in results {
        let (parts, g) = r?;
        mean.total += parts.total;
        mean.closeness += parts.closeness;
        mean.cross_entropy += parts.cross_entropy;
        accumulate_grads(&mut grads, &g);
    }
    let n = pairs.len() as f64;
    mean.total /= n;
    mean.closeness /= n;
    mean.cross_entropy /= n;
    scale_grads(&mut grads, 1.0 / n);
    Ok((mean, grads))
}

fn diverged(iteration: usize, batch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite { .. } | Error::Training(_) => Error::Diverged {
            iteration,
            batch,
            msg: e.to_string(),
        },
        other => other,
    }
}

/// Trains from a seeded initialisation. Checkpoints (if a path is set) are
/// written at the configured interval and after the last iteration.
pub fn fit(
    corpus: &[EncodedTriple],
    vocab: &Vocabulary,
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let model = Nagm::new(model_config.clone())?;
    if model_config.vocab_size != vocab.len() {
        return Err(Error::Config(format!(
            "vocab_size {} does not match the vocabulary ({} entries)",
            model_config.vocab_size,
            vocab.len()
        )));
    }
    if corpus.len() < 2 {
        return Err(Error::Config(format!(
            "training needs at least 2 triples for negative sampling, got {}",
            corpus.len()
        )));
    }
    let start = Instant::now();
    let mut params = init_params(model_config, config.seed)?;
    let opt = Adagrad::new(config.lr, 1e-8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut records = Vec::with_capacity(config.iterations);

    for iteration in 1..=config.iterations {
        order.shuffle(&mut rng);
        let mut sums = LossParts::default();
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let pairs = batch
                .iter()
                .map(|&pos| Ok((pos, sample_negative(batch, pos, corpus, &mut rng)?)))
                .collect::<Result<Vec<_>>>()?;
            let (mean, grads) = batch_gradient(&model, &params, corpus, &pairs)
                .map_err(|e| diverged(iteration, b, e))?;
            let n = batch.len() as f64;
            sums.total += mean.total * n;
            sums.closeness += mean.closeness * n;
            sums.cross_entropy += mean.cross_entropy * n;
            opt.step(&mut params, &grads)
                .map_err(|e| diverged(iteration, b, e))?;
        }
        let n = corpus.len() as f64;
        records.push(IterationRecord {
            iteration,
            l_w: sums.total / n,
            l_s: sums.closeness / n,
            ce: sums.cross_entropy / n,
        });
        let due = config.checkpoint_interval > 0 && iteration % config.checkpoint_interval == 0;
        if due || iteration == config.iterations {
            if let Some(path) = &config.checkpoint_path {
                let ckpt = Checkpoint {
                    model: model_config.clone(),
                    vocab: vocab.clone(),
                    train: serde_json::to_value(config)?,
                    iteration,
                    params: params.clone(),
                };
                save_checkpoint(path, &ckpt)?;
            }
        }
    }
    Ok(TrainOutcome {
        params,
        log: TrainLog {
            seed: config.seed,
            records,
            wall_clock_secs: start.elapsed().as_secs_f64(),
        },
    })
}

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{config_hash, evaluate_params, EvalReport};
use crate::corpus::{encode_all, QCSTriple, TokenizerKind, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, Nagm};
use crate::trainer::{fit, TrainConfig};

/// Seeded split; the test part gets `round(n · test_fraction)` triples,
/// at least one, and the train part keeps at least two.
pub fn train_test_split(
    triples: &[QCSTriple],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<QCSTriple>, Vec<QCSTriple>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = triples.len();
    let n_test = ((n as f64 * test_fraction).round() as usize).max(1);
    if n < n_test + 2 {
        return Err(Error::Config(format!("{n} triples are too few to split")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test_idx, train_idx) = order.split_at(n_test);
    let pick = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| triples[i].clone()).collect()
    };
    Ok((pick(train_idx), pick(test_idx)))
}

/// Everything shared by the runs of one experiment table.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub train: Vec<QCSTriple>,
    pub test: Vec<QCSTriple>,
    pub tokenizer: TokenizerKind,
    pub min_count: usize,
    /// `vocab_size` is filled from the training vocabulary.
    pub model: ModelConfig,
    pub train_config: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub variant_or_alpha: String,
    pub rouge_l: f64,
    pub bleu_4: f64,
    pub seed: u64,
    pub config_hash: String,
}

pub const TABLE_HEADER: &str = "variant_or_alpha,rouge_l,bleu_4,seed,config_hash";

pub fn table_csv(rows: &[ExperimentRow]) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{},{}",
            r.variant_or_alpha, r.rouge_l, r.bleu_4, r.seed, r.config_hash
        );
    }
    out
}

pub fn write_table(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    std::fs::write(path, table_csv(rows)).map_err(|e| Error::io(path, e))
}

impl Experiment {
    fn vocab(&self) -> Result<Vocabulary> {
        Vocabulary::build(&self.train, self.min_count, self.tokenizer)
    }

    /// Trains with `model` and scores the test split.
    pub fn run(&self, model: &ModelConfig) -> Result<EvalReport> {
        let vocab = self.vocab()?;
        let model = ModelConfig {
            vocab_size: vocab.len(),
            ..model.clone()
        };
        let corpus = encode_all(&self.train, &vocab)?;
        let outcome = fit(&corpus, &vocab, &model, &self.train_config)?;
        let config = serde_json::json!({
            "model": model,
            "train": self.train_config,
            "tokenizer": self.tokenizer,
            "min_count": self.min_count,
        });
        evaluate_params(&Nagm::new(model)?, &outcome.params, &vocab, &self.test, config)
    }

    fn row(&self, label: String, report: &EvalReport) -> ExperimentRow {
        ExperimentRow {
            variant_or_alpha: label,
            rouge_l: report.rouge_l,
            bleu_4: report.bleu_4,
            seed: self.train_config.seed,
            config_hash: report.config_hash.clone(),
        }
    }
}

/// One model per α with a shared seed, sorted by α.
pub fn alpha_sweep(exp: &Experiment, alphas: &[f64]) -> Result<Vec<ExperimentRow>> {
    if alphas.is_empty() {
        return Err(Error::Config("alpha list is empty".into()));
    }
    let mut alphas = alphas.to_vec();
    alphas.sort_by(f64::total_cmp);
    alphas
        .iter()
        .map(|&alpha| {
            let report = exp.run(&ModelConfig {
                alpha,
                ..exp.model.clone()
            })?;
            Ok(exp.row(format!("{alpha}"), &report))
        })
        .collect()
}

pub const VARIANTS: [&str; 3] = ["NAGM", "NAGMWA", "w/o ste"];

/// The full model, the model without attention and the model without
/// sentence-type vectors, all on the same data and seed.
pub fn ablation_run(exp: &Experiment) -> Result<Vec<ExperimentRow>> {
    let base = ModelConfig {
        use_attention: true,
        use_sentence_type: true,
        ..exp.model.clone()
    };
    let variants = [
        base.clone(),
        ModelConfig {
            use_attention: false,
            ..base.clone()
        },
        ModelConfig {
            use_sentence_type: false,
            ..base
        },
    ];
    VARIANTS
        .iter()
        .zip(variants)
        .map(|(name, model)| {
            let report = exp.run(&model)?;
            Ok(exp.row(name.to_string(), &report))
        })
        .collect()
}

/// Fingerprint of an experiment's shared settings.
pub fn experiment_hash(exp: &Experiment) -> Result<String> {
    config_hash(&serde_json::json!({
        "model": exp.model,
        "train": exp.train_config,
        "tokenizer": exp.tokenizer,
        "min_count": exp.min_count,
    }))
}

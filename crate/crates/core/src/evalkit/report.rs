use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{bleu_4, rouge_l, Smoothing};
use crate::corpus::{QCSTriple, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{Checkpoint, Nagm};
use crate::numkit::ParamStore;

/// Short hex SHA-256 of the canonical JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    // `serde_json::Value` keeps object keys sorted, so this is canonical.
    let canonical = serde_json::to_vec(&serde_json::to_value(value)?)?;
    let digest = Sha256::digest(&canonical);
    Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub rouge_l: f64,
    pub bleu_4: f64,
}

impl Scores {
    fn of(candidate: &[usize], reference: &[usize]) -> Result<Self> {
        Ok(Scores {
            rouge_l: rouge_l(candidate, reference)?,
            bleu_4: bleu_4(candidate, reference, Smoothing::AddOne)?,
        })
    }

    fn mean(items: impl Iterator<Item = Scores>) -> Scores {
        let mut sum = Scores::default();
        let mut n = 0usize;
        for s in items {
            sum.rouge_l += s.rouge_l;
            sum.bleu_4 += s.bleu_4;
            n += 1;
        }
        if n > 0 {
            sum.rouge_l /= n as f64;
            sum.bleu_4 /= n as f64;
        }
        sum
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub id: String,
    pub question: String,
    pub generated_conclusion: String,
    pub generated_supplement: String,
    pub reference_conclusion: String,
    pub reference_supplement: String,
    /// Conclusion followed by supplement.
    pub answer: Scores,
    pub conclusion: Scores,
    pub supplement: Scores,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rouge_l: f64,
    pub bleu_4: f64,
    pub conclusion: Scores,
    pub supplement: Scores,
    pub examples: Vec<ExampleReport>,
    /// Model and training configuration of the evaluated checkpoint.
    pub config: serde_json::Value,
    pub config_hash: String,
}

impl EvalReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Generates an answer for every test question and scores it on the same
/// tokens the model emits.
pub fn evaluate_params(
    model: &Nagm,
    params: &ParamStore,
    vocab: &Vocabulary,
    test: &[QCSTriple],
    config: serde_json::Value,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test triples"));
    }
    let examples = test
        .par_iter()
        .map(|t| {
            let question = vocab.encode(&t.question)?;
            let gen = model.generate(params, question.ids())?;
            let ref_c = vocab.encode(&t.conclusion)?.content();
            let ref_s = vocab.encode(&t.supplement)?.content();
            let cand: Vec<usize> = gen.conclusion.iter().chain(&gen.supplement).copied().collect();
            let refr: Vec<usize> = ref_c.iter().chain(&ref_s).copied().collect();
            Ok(ExampleReport {
                id: t.id.clone(),
                question: t.question.clone(),
                generated_conclusion: vocab.decode(&gen.conclusion)?,
                generated_supplement: vocab.decode(&gen.supplement)?,
                reference_conclusion: t.conclusion.clone(),
                reference_supplement: t.supplement.clone(),
                answer: Scores::of(&cand, &refr)?,
                conclusion: Scores::of(&gen.conclusion, &ref_c)?,
                supplement: Scores::of(&gen.supplement, &ref_s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let answer = Scores::mean(examples.iter().map(|e| e.answer));
    Ok(EvalReport {
        rouge_l: answer.rouge_l,
        bleu_4: answer.bleu_4,
        conclusion: Scores::mean(examples.iter().map(|e| e.conclusion)),
        supplement: Scores::mean(examples.iter().map(|e| e.supplement)),
        examples,
        config_hash: config_hash(&config)?,
        config,
    })
}

pub fn evaluate_corpus(ckpt: &Checkpoint, test: &[QCSTriple]) -> Result<EvalReport> {
    let model = Nagm::new(ckpt.model.clone())?;
    let config = serde_json::json!({ "model": ckpt.model, "train": ckpt.train });
    evaluate_params(&model, &ckpt.params, &ckpt.vocab, test, config)
}

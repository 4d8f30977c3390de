use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS F-measure `(1+β²)PR / (R + β²P)`; 0 for an empty candidate or no
/// overlap.
pub fn rouge_l_beta<T: PartialEq>(candidate: &[T], reference: &[T], beta: f64) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::domain("rouge_l", "empty reference"));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::domain("rouge_l", format!("beta must be > 0, got {beta}")));
    }
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return Ok(0.0);
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    let b2 = beta * beta;
    Ok((1.0 + b2) * p * r / (r + b2 * p))
}

pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T]) -> Result<f64> {
    rouge_l_beta(candidate, reference, 1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// Add one to numerator and denominator of the 2- to 4-gram precisions.
    #[default]
    AddOne,
    None,
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram matches and candidate n-gram total.
fn modified_precision<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len().saturating_sub(n - 1))
}

/// Sentence BLEU-4: geometric mean of modified 1- to 4-gram precisions
/// times the brevity penalty. An empty candidate scores 0.
pub fn bleu_4<T: Eq + Hash>(candidate: &[T], reference: &[T], smoothing: Smoothing) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::domain("bleu_4", "empty reference"));
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let (m, t) = modified_precision(candidate, reference, n);
        let p = match smoothing {
            Smoothing::AddOne if n >= 2 => (m as f64 + 1.0) / (t as f64 + 1.0),
            _ if m == 0 || t == 0 => return Ok(0.0),
            _ => m as f64 / t as f64,
        };
        log_sum += p.ln();
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    Ok(bp * (log_sum / 4.0).exp())
}

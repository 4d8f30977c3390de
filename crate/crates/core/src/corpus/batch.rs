use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::vocab::{Vocabulary, PAD};
use super::QCSTriple;
use crate::error::{Error, Result};

/// One triple as EOS-terminated id sequences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedTriple {
    pub id: String,
    pub question: Vec<usize>,
    pub conclusion: Vec<usize>,
    pub supplement: Vec<usize>,
}

impl EncodedTriple {
    pub fn encode(triple: &QCSTriple, vocab: &Vocabulary) -> Result<Self> {
        Ok(EncodedTriple {
            id: triple.id.clone(),
            question: vocab.encode(&triple.question)?.0,
            conclusion: vocab.encode(&triple.conclusion)?.0,
            supplement: vocab.encode(&triple.supplement)?.0,
        })
    }
}

pub fn encode_all(triples: &[QCSTriple], vocab: &Vocabulary) -> Result<Vec<EncodedTriple>> {
    triples.iter().map(|t| EncodedTriple::encode(t, vocab)).collect()
}

/// Right-padded id matrix with its mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Padded {
    pub ids: Vec<Vec<usize>>,
    pub mask: Vec<Vec<bool>>,
    pub lengths: Vec<usize>,
}

impl Padded {
    fn from_rows(rows: Vec<&[usize]>) -> Self {
        let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut ids = Vec::with_capacity(rows.len());
        let mut mask = Vec::with_capacity(rows.len());
        let mut lengths = Vec::with_capacity(rows.len());
        for row in rows {
            let mut r = row.to_vec();
            r.resize(width, PAD);
            let mut m = vec![true; row.len()];
            m.resize(width, false);
            ids.push(r);
            mask.push(m);
            lengths.push(row.len());
        }
        Padded { ids, mask, lengths }
    }

    pub fn width(&self) -> usize {
        self.ids.first().map_or(0, Vec::len)
    }

    /// Unpadded row `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.ids[i][..self.lengths[i]]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    /// Positions of the members in the source corpus.
    pub indices: Vec<usize>,
    pub ids: Vec<String>,
    pub questions: Padded,
    pub conclusions: Padded,
    pub supplements: Padded,
}

impl Batch {
    pub fn from_encoded(indices: Vec<usize>, members: &[&EncodedTriple]) -> Self {
        Batch {
            indices,
            ids: members.iter().map(|m| m.id.clone()).collect(),
            questions: Padded::from_rows(members.iter().map(|m| m.question.as_slice()).collect()),
            conclusions: Padded::from_rows(
                members.iter().map(|m| m.conclusion.as_slice()).collect(),
            ),
            supplements: Padded::from_rows(
                members.iter().map(|m| m.supplement.as_slice()).collect(),
            ),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn example(&self, i: usize) -> EncodedTriple {
        EncodedTriple {
            id: self.ids[i].clone(),
            question: self.questions.row(i).to_vec(),
            conclusion: self.conclusions.row(i).to_vec(),
            supplement: self.supplements.row(i).to_vec(),
        }
    }
}

/// Seeded shuffle into batches of `batch_size`; the final batch may be short.
pub fn make_batches(
    triples: &[QCSTriple],
    vocab: &Vocabulary,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<Batch>> {
    let encoded = encode_all(triples, vocab)?;
    batches_from_encoded(&encoded, batch_size, seed)
}

pub fn batches_from_encoded(
    encoded: &[EncodedTriple],
    batch_size: usize,
    seed: u64,
) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(order
        .chunks(batch_size)
        .map(|chunk| {
            let members: Vec<&EncodedTriple> = chunk.iter().map(|&i| &encoded[i]).collect();
            Batch::from_encoded(chunk.to_vec(), &members)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenizerKind;
    use proptest::prelude::*;

    fn corpus(n: usize) -> Vec<QCSTriple> {
        (0..n)
            .map(|i| QCSTriple {
                id: format!("t{i}"),
                question: "x".repeat(i + 1),
                conclusion: "yy".repeat(i + 1),
                supplement: "z".into(),
            })
            .collect()
    }

    #[test]
    fn sizes_and_padding() {
        let c = corpus(5);
        let v = Vocabulary::build(&c, 1, TokenizerKind::CharBigram).unwrap();
        let batches = make_batches(&c, &v, 2, 3).unwrap();
        let sizes: Vec<usize> = batches.iter().map(Batch::len).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        for b in &batches {
            for side in [&b.questions, &b.conclusions, &b.supplements] {
                for ((ids, mask), &len) in side.ids.iter().zip(&side.mask).zip(&side.lengths) {
                    assert_eq!(ids.len(), side.width());
                    for (k, (&id, &m)) in ids.iter().zip(mask).enumerate() {
                        assert_eq!(m, k < len);
                        if !m {
                            assert_eq!(id, PAD);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn seeded_determinism() {
        let c = corpus(7);
        let v = Vocabulary::build(&c, 1, TokenizerKind::CharBigram).unwrap();
        assert_eq!(make_batches(&c, &v, 3, 9).unwrap(), make_batches(&c, &v, 3, 9).unwrap());
        assert!(make_batches(&c, &v, 0, 9).is_err());
    }

    #[test]
    fn example_strips_padding() {
        let c = corpus(3);
        let v = Vocabulary::build(&c, 1, TokenizerKind::CharBigram).unwrap();
        let enc = encode_all(&c, &v).unwrap();
        let b = batches_from_encoded(&enc, 3, 0).unwrap().remove(0);
        for i in 0..b.len() {
            assert_eq!(b.example(i), enc[b.indices[i]]);
        }
    }

    proptest! {
        #[test]
        fn batches_partition_corpus(n in 1usize..30, bs in 1usize..8, seed in 0u64..50) {
            let c = corpus(n);
            let v = Vocabulary::build(&c, 1, TokenizerKind::CharBigram).unwrap();
            let mut ids: Vec<String> = make_batches(&c, &v, bs, seed)
                .unwrap()
                .into_iter()
                .flat_map(|b| b.ids)
                .collect();
            ids.sort();
            let mut expected: Vec<String> = c.iter().map(|t| t.id.clone()).collect();
            expected.sort();
            prop_assert_eq!(ids, expected);
        }
    }
}

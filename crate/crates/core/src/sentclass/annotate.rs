use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::classifier::Classifier;
use super::cues::CuePhraseList;
use super::{Label, LabeledSentence};
use crate::corpus::{read_objects, string_field, Family, QCSTriple, CONTENT_WORDS, DISTINCT_FAMILIES};
use crate::error::{Error, Result};

/// A question with its pre-split answer sentences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub question: String,
    pub sentences: Vec<String>,
}

/// Reads raw records (`question`, `sentences`, optional `id`) from JSONL.
/// Records without an id are numbered by line.
pub fn load_raw_records(path: &Path) -> Result<Vec<RawRecord>> {
    read_objects(path)?
        .into_iter()
        .map(|(line, map)| {
            let question = string_field(&map, "question", line)?;
            let sentences = match map.get("sentences") {
                None => {
                    return Err(Error::Schema {
                        line,
                        key: "sentences".into(),
                    })
                }
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => Ok(s.clone()),
                        other => Err(Error::Parse {
                            line,
                            msg: format!("sentence must be a string, found {other}"),
                        }),
                    })
                    .collect::<Result<Vec<_>>>()?,
                Some(other) => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("\"sentences\" must be an array, found {other}"),
                    })
                }
            };
            if sentences.is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: "record has no sentences".into(),
                });
            }
            let id = match map.get("id") {
                Some(_) => string_field(&map, "id", line)?,
                None => format!("raw-{line:05}"),
            };
            Ok(RawRecord {
                id,
                question,
                sentences,
            })
        })
        .collect()
}

/// Reads `{"sentence": .., "label": "conclusion"|"supplement"}` lines.
pub fn load_labeled(path: &Path) -> Result<Vec<LabeledSentence>> {
    read_objects(path)?
        .into_iter()
        .map(|(line, map)| {
            let sentence = string_field(&map, "sentence", line)?;
            let label = string_field(&map, "label", line)?;
            let label = match label.as_str() {
                "conclusion" => Label::Conclusion,
                "supplement" => Label::Supplement,
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown label \"{other}\""),
                    })
                }
            };
            Ok(LabeledSentence { sentence, label })
        })
        .collect()
}

/// Weak labels for unlabeled records: cue-prefixed sentences are
/// supplements, and a record's first sentence is its conclusion unless it
/// carries a cue itself.
pub fn bootstrap_labels(records: &[RawRecord], cues: &CuePhraseList) -> Vec<LabeledSentence> {
    let mut out = Vec::new();
    for record in records {
        for (i, sentence) in record.sentences.iter().enumerate() {
            let label = if cues.matches(sentence) {
                Label::Supplement
            } else if i == 0 {
                Label::Conclusion
            } else {
                continue;
            };
            out.push(LabeledSentence {
                sentence: sentence.clone(),
                label,
            });
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub triples: Vec<QCSTriple>,
    /// Ids of records left without a conclusion or a supplement.
    pub dropped: Vec<String>,
}

impl Annotation {
    pub fn dropped_count(&self) -> usize {
        self.dropped.len()
    }
}

/// Labels every sentence and joins each class, in order, with single spaces.
pub fn annotate(records: &[RawRecord], classifier: &Classifier) -> Result<Annotation> {
    let mut out = Annotation::default();
    for record in records {
        let mut conclusion = Vec::new();
        let mut supplement = Vec::new();
        for sentence in &record.sentences {
            let target = match classifier.classify(sentence)?.label {
                Label::Conclusion => &mut conclusion,
                Label::Supplement => &mut supplement,
            };
            target.push(sentence.trim());
        }
        if conclusion.is_empty() || supplement.is_empty() || record.question.trim().is_empty() {
            out.dropped.push(record.id.clone());
            continue;
        }
        out.triples.push(QCSTriple {
            id: record.id.clone(),
            question: record.question.clone(),
            conclusion: conclusion.join(" "),
            supplement: supplement.join(" "),
        });
    }
    Ok(out)
}

/// Alternating conclusion and supplement sentences from the synthetic
/// grammar.
pub fn synthetic_labeled(n: usize, seed: u64) -> Vec<LabeledSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let family = Family(rng.gen_range(0..DISTINCT_FAMILIES));
            let word = CONTENT_WORDS[rng.gen_range(0..CONTENT_WORDS.len())];
            if i % 2 == 0 {
                LabeledSentence {
                    sentence: family.conclusion(word),
                    label: Label::Conclusion,
                }
            } else {
                LabeledSentence {
                    sentence: family.supplement(word),
                    label: Label::Supplement,
                }
            }
        })
        .collect()
}

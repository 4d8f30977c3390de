//! Splits raw answers into conclusion and supplement sentences: cue-phrase
//! rules first, then a BiLSTM sentence classifier.

mod annotate;
mod classifier;
mod cues;

pub use annotate::{
    annotate, bootstrap_labels, load_labeled, load_raw_records, synthetic_labeled, Annotation,
    RawRecord,
};
pub use classifier::{Classifier, ClassifierConfig};
pub use cues::{rule_classify, CuePhraseList, DEFAULT_CUES};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Conclusion,
    Supplement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Rule,
    Model,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceLabel {
    pub label: Label,
    /// Probability of the supplement class; 1.0 for rule matches.
    pub probability: f64,
    pub source: LabelSource,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub sentence: String,
    pub label: Label,
}

use std::fs;
use std::path::Path;

use super::{Label, LabelSource, SentenceLabel};
use crate::corpus::normalize;
use crate::error::{Error, Result};

pub const DEFAULT_CUES: [&str; 4] = ["this is because", "therefore", "that's because", "the reason is"];

/// Ordered cue phrases that mark a sentence as a supplement when it starts
/// with one of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuePhraseList {
    phrases: Vec<String>,
}

impl Default for CuePhraseList {
    fn default() -> Self {
        CuePhraseList {
            phrases: DEFAULT_CUES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl CuePhraseList {
    pub fn new<S: AsRef<str>>(phrases: &[S]) -> Result<Self> {
        let phrases: Vec<String> = phrases.iter().map(|p| normalize(p.as_ref())).collect();
        if phrases.is_empty() {
            return Err(Error::Config("cue phrase list is empty".into()));
        }
        if phrases.iter().any(String::is_empty) {
            return Err(Error::Config("cue phrases must be non-empty".into()));
        }
        Ok(CuePhraseList { phrases })
    }

    /// One phrase per line; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let phrases: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        Self::new(&phrases)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn matches(&self, sentence: &str) -> bool {
        let s = normalize(sentence);
        self.phrases.iter().any(|p| s.starts_with(p.as_str()))
    }
}

/// Supplement with probability 1 when the sentence opens with a cue.
pub fn rule_classify(sentence: &str, cues: &CuePhraseList) -> Option<SentenceLabel> {
    cues.matches(sentence).then_some(SentenceLabel {
        label: Label::Supplement,
        probability: 1.0,
        source: LabelSource::Rule,
    })
}

//! Template grammar for desk-scale q-c-s corpora.
//!
//! A family fixes the question frame, the advice verb phrase of the
//! conclusion and the supplement frame. Every triple fills one content word
//! into all three parts, so the supplement is tied to its conclusion. Even
//! families open their supplement with a cue phrase.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::QCSTriple;
use crate::error::{Error, Result};

pub const CONTENT_WORDS: [&str; 8] = ["cat", "dog", "son", "boss", "wife", "friend", "mom", "team"];

const OPENERS: [&str; 4] = ["help, my", "so my", "why is my", "what if my"];
const SITUATIONS: [&str; 8] = [
    "is sad", "is angry", "is late", "is quiet", "is lost", "is tired", "is cold", "is bored",
];
const ADVICE: [&str; 6] = [
    "talk to your",
    "call your",
    "give your",
    "be kind to your",
    "wait for your",
    "hug your",
];
const ADVICE_TAIL: [&str; 6] = ["", " now", " time", "", " a bit", " today"];
const REASONS: [&str; 6] = [
    "needs you",
    "will smile",
    "feels alone",
    "wants care",
    "will calm down",
    "misses you",
];
const CUES: [&str; 2] = ["this is because", "therefore"];

/// Number of families with pairwise distinct question frames.
pub const DISTINCT_FAMILIES: usize = OPENERS.len() * SITUATIONS.len();

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_templates: usize,
    pub n_triples: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Family(pub usize);

impl Family {
    pub fn has_cue(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn question(self, word: &str) -> String {
        let opener = OPENERS[self.0 % OPENERS.len()];
        let situation = SITUATIONS[(self.0 / OPENERS.len()) % SITUATIONS.len()];
        format!("{opener} {word} {situation}")
    }

    pub fn conclusion(self, word: &str) -> String {
        let k = self.0 % ADVICE.len();
        format!("{} {word}{}", ADVICE[k], ADVICE_TAIL[k])
    }

    pub fn supplement(self, word: &str) -> String {
        let reason = REASONS[(self.0 / 2) % REASONS.len()];
        if self.has_cue() {
            let cue = CUES[(self.0 / 2) % CUES.len()];
            format!("{cue} your {word} {reason}")
        } else {
            format!("your {word} {reason}")
        }
    }
}

/// Generates `n_triples` triples; the first `n_templates` use each family once.
///
/// Question frames are unique for up to [`DISTINCT_FAMILIES`] families, so
/// each question determines its answer.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<QCSTriple>> {
    if spec.n_templates < 2 {
        return Err(Error::Config("n_templates must be >= 2".into()));
    }
    if spec.n_triples < spec.n_templates {
        return Err(Error::Config("n_triples must be >= n_templates".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.n_triples)
        .map(|i| {
            let family = if i < spec.n_templates {
                Family(i)
            } else {
                Family(rng.gen_range(0..spec.n_templates))
            };
            let word = CONTENT_WORDS[rng.gen_range(0..CONTENT_WORDS.len())];
            QCSTriple {
                id: format!("syn-{i:05}"),
                question: family.question(word),
                conclusion: family.conclusion(word),
                supplement: family.supplement(word),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashMap};

    fn words(s: &str) -> BTreeSet<&str> {
        s.split([' ', ',']).filter(|w| CONTENT_WORDS.contains(w)).collect()
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec {
            n_templates: 2,
            n_triples: 4,
            seed: 7,
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn supplements_share_content_word() {
        let spec = SyntheticSpec {
            n_templates: 12,
            n_triples: 200,
            seed: 1,
        };
        for t in generate_synthetic(&spec).unwrap() {
            let (c, s) = (words(&t.conclusion), words(&t.supplement));
            assert!(c.intersection(&s).next().is_some(), "{t:?}");
        }
    }

    #[test]
    fn every_template_used() {
        let spec = SyntheticSpec {
            n_templates: 10,
            n_triples: 100,
            seed: 3,
        };
        let triples = generate_synthetic(&spec).unwrap();
        assert_eq!(triples.len(), 100);
        let questions: BTreeSet<String> = (0..10)
            .flat_map(|f| CONTENT_WORDS.map(|w| Family(f).question(w)))
            .collect();
        for f in 0..10 {
            let fam: BTreeSet<String> = CONTENT_WORDS.map(|w| Family(f).question(w)).into();
            assert!(triples.iter().any(|t| fam.contains(&t.question)), "family {f} unused");
        }
        assert!(triples.iter().all(|t| questions.contains(&t.question)));
    }

    #[test]
    fn question_determines_answer() {
        let spec = SyntheticSpec {
            n_templates: DISTINCT_FAMILIES,
            n_triples: 400,
            seed: 5,
        };
        let mut seen: HashMap<String, (String, String)> = HashMap::new();
        for t in generate_synthetic(&spec).unwrap() {
            let answer = (t.conclusion.clone(), t.supplement.clone());
            assert_eq!(seen.entry(t.question).or_insert(answer.clone()), &answer);
        }
    }

    #[test]
    fn half_the_families_carry_a_cue() {
        let cued = (0..10).filter(|&f| Family(f).has_cue()).count();
        assert_eq!(cued, 5);
        assert!(Family(0).supplement("cat").starts_with("this is because"));
        assert!(Family(2).supplement("cat").starts_with("therefore"));
        assert!(Family(1).supplement("cat").starts_with("your cat"));
    }

    #[test]
    fn rejects_bad_settings() {
        let bad = SyntheticSpec {
            n_templates: 1,
            n_triples: 4,
            seed: 0,
        };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SyntheticSpec {
            n_templates: 4,
            n_triples: 3,
            seed: 0,
        };
        assert!(generate_synthetic(&bad).is_err());
    }
}

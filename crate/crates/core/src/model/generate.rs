use super::network::{Feed, ForwardVars, Nagm, SentenceType};
use super::trace::ForwardTrace;
use crate::error::Result;
use crate::numkit::{ParamStore, Tape};

/// Greedy answer for one question.
#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    /// Conclusion ids without the terminating EOS.
    pub conclusion: Vec<usize>,
    pub supplement: Vec<usize>,
    pub trace: ForwardTrace,
}

impl Nagm {
    /// Encodes with both sentence types, greedily decodes the conclusion,
    /// embeds its realised soft outputs as `O_c`, then greedily decodes the
    /// supplement against that context.
    pub fn generate(&self, params: &ParamStore, question: &[usize]) -> Result<Generation> {
        let mut tape = Tape::new(params);
        let tape = &mut tape;
        let max_len = self.config().max_decode_len;
        let question_c = self.encode_question(tape, question, SentenceType::Conclusion)?;
        let question_s = self.encode_question(tape, question, SentenceType::Supplement)?;
        let joint = tape.concat(&[question_c.embedding, question_s.embedding])?;

        let conclusion =
            self.decode_conclusion(tape, Feed::Greedy { max_len }, question_c.embedding)?;
        let conclusion_embedding =
            self.sequence_embedding(tape, &conclusion.soft, SentenceType::Conclusion)?;
        let supplement = self.decode_supplement(
            tape,
            Feed::Greedy { max_len },
            question_s.embedding,
            conclusion_embedding,
        )?;
        let supplement_embedding =
            self.sequence_embedding(tape, &supplement.soft, SentenceType::Supplement)?;

        let vars = ForwardVars {
            question_c,
            question_s,
            question: joint,
            conclusion,
            supplement,
            conclusion_embedding,
            supplement_embedding,
            negative: None,
            losses: None,
        };
        let trace = ForwardTrace::collect(tape, &vars);
        Ok(Generation {
            conclusion: vars.conclusion.emitted,
            supplement: vars.supplement.emitted,
            trace,
        })
    }
}

//! Encoder, twin decoders and the ensemble network that couples them.

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::lstm::{BiLstm, CellOut, LstmCell};
use super::params::{
    ATTENTION_V, ATTENTION_W, CONCLUSION_DECODER, CONCLUSION_ENSEMBLE, ENCODER_BWD, ENCODER_FWD,
    INPUT_EMBEDDING, OUTPUT_EMBEDDING, SUPPLEMENT_DECODER, SUPPLEMENT_ENSEMBLE, TYPE_CONCLUSION,
    TYPE_SUPPLEMENT,
};
use super::trace::{ForwardTrace, LossParts};
use crate::corpus::{EncodedTriple, BOS, EOS};
use crate::error::{Error, Result};
use crate::numkit::{Grads, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceType {
    Conclusion,
    Supplement,
}

/// Encoder states and their max-pooled embedding `O^c_q` or `O^s_q`.
#[derive(Clone, Debug)]
pub struct EncodedQuestion {
    pub states: Vec<Var>,
    pub embedding: Var,
}

/// How a decoder picks its next input token.
#[derive(Clone, Copy, Debug)]
pub enum Feed<'a> {
    /// Gold EOS-terminated targets; inputs are BOS followed by the targets
    /// shifted right.
    Teacher(&'a [usize]),
    /// Argmax of each step, stopping at EOS or after `max_len` steps.
    Greedy { max_len: usize },
}

/// Everything one decoder pass produced.
#[derive(Clone, Debug, Default)]
pub struct DecoderRun {
    pub states: Vec<Var>,
    pub cells: Vec<Var>,
    pub logits: Vec<Var>,
    /// `U · softmax(logits_t)` per step.
    pub soft: Vec<Var>,
    pub attention: Vec<Var>,
    pub context: Vec<Var>,
    /// Greedy emissions without the terminating EOS.
    pub emitted: Vec<usize>,
}

/// One supplement-decoder update.
#[derive(Clone, Copy, Debug)]
pub struct SupplementStep {
    pub cell: CellOut,
    pub logits: Var,
}

pub(crate) struct ForwardVars {
    pub question_c: EncodedQuestion,
    pub question_s: EncodedQuestion,
    pub question: Var,
    pub conclusion: DecoderRun,
    pub supplement: DecoderRun,
    pub conclusion_embedding: Var,
    pub supplement_embedding: Var,
    pub negative: Option<(Var, Var)>,
    pub losses: Option<(Var, Var, Var)>,
}

/// Greedy choice over a logit vector. PAD and BOS are never emitted; ties
/// go to the lowest id.
pub fn greedy_token(logits: &Tensor) -> usize {
    let data = logits.data();
    let mut best = EOS;
    for (id, &v) in data.iter().enumerate().skip(EOS + 1) {
        if v > data[best] {
            best = id;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct Nagm {
    config: ModelConfig,
}

impl Nagm {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Nagm { config })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn type_vector(&self, tape: &mut Tape<'_>, stype: SentenceType) -> Result<Var> {
        if !self.config.use_sentence_type {
            return tape.constant(Tensor::zeros(&[self.config.embed_dim]));
        }
        tape.param(match stype {
            SentenceType::Conclusion => TYPE_CONCLUSION,
            SentenceType::Supplement => TYPE_SUPPLEMENT,
        })
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.config.vocab_size) {
            return Err(Error::Corruption(format!(
                "token id {bad} outside vocabulary of size {}",
                self.config.vocab_size
            )));
        }
        Ok(())
    }

    /// Composite input `[embedding(token), type vector]`.
    fn composite(&self, tape: &mut Tape<'_>, token: usize, type_vec: Var) -> Result<Var> {
        let table = tape.param(INPUT_EMBEDDING)?;
        let word = tape.gather(table, token)?;
        tape.concat(&[word, type_vec])
    }

    /// BiLSTM over `[q_i, type]` inputs, max-pooled to a `2·hidden` vector.
    pub fn encode_question(
        &self,
        tape: &mut Tape<'_>,
        question: &[usize],
        stype: SentenceType,
    ) -> Result<EncodedQuestion> {
        if question.is_empty() {
            return Err(Error::domain("encode_question", "empty question"));
        }
        self.check_ids(question)?;
        let type_vec = self.type_vector(tape, stype)?;
        let inputs = question
            .iter()
            .map(|&id| self.composite(tape, id, type_vec))
            .collect::<Result<Vec<_>>>()?;
        let encoder = BiLstm {
            forward: LstmCell::bind(tape, ENCODER_FWD, false)?,
            backward: LstmCell::bind(tape, ENCODER_BWD, false)?,
        };
        let (states, embedding) = encoder.embed(tape, &inputs)?;
        Ok(EncodedQuestion { states, embedding })
    }

    /// Decoder start state as an affine map of the question embedding.
    fn initial_state(&self, tape: &mut Tape<'_>, prefix: &str, embedding: Var) -> Result<(Var, Var)> {
        let wh = tape.param(&format!("{prefix}.init_h.w"))?;
        let bh = tape.param(&format!("{prefix}.init_h.b"))?;
        let wc = tape.param(&format!("{prefix}.init_c.w"))?;
        let bc = tape.param(&format!("{prefix}.init_c.b"))?;
        let h = tape.affine(embedding, wh, bh)?;
        let c = tape.affine(embedding, wc, bc)?;
        Ok((h, c))
    }

    /// `logits = Uᵀ h` and the soft embedding `U · softmax(logits)`.
    fn project(&self, tape: &mut Tape<'_>, hidden: Var) -> Result<(Var, Var)> {
        let u = tape.param(OUTPUT_EMBEDDING)?;
        let logits = tape.matvec_t(u, hidden)?;
        let probs = tape.softmax(logits)?;
        let soft = tape.matvec(u, probs)?;
        Ok((logits, soft))
    }

    fn run_decoder<F>(&self, tape: &mut Tape<'_>, feed: Feed<'_>, mut step: F) -> Result<DecoderRun>
    where
        F: FnMut(&mut Tape<'_>, usize, &DecoderRun) -> Result<(CellOut, Option<(Var, Var)>)>,
    {
        let mut run = DecoderRun::default();
        let (n_steps, teacher) = match feed {
            Feed::Teacher(gold) => {
                if gold.is_empty() {
                    return Err(Error::domain("decode", "empty gold sequence"));
                }
                self.check_ids(gold)?;
                (gold.len(), Some(gold))
            }
            Feed::Greedy { max_len } => (max_len.max(1), None),
        };
        let mut prev = BOS;
        for t in 0..n_steps {
            let (out, attention) = step(tape, prev, &run)?;
            let (logits, soft) = self.project(tape, out.hidden)?;
            run.states.push(out.hidden);
            run.cells.push(out.cell);
            run.logits.push(logits);
            run.soft.push(soft);
            if let Some((alpha, cx)) = attention {
                run.attention.push(alpha);
                run.context.push(cx);
            }
            prev = match teacher {
                Some(gold) => gold[t],
                None => {
                    let next = greedy_token(tape.value(logits));
                    if next == EOS {
                        break;
                    }
                    run.emitted.push(next);
                    next
                }
            };
        }
        Ok(run)
    }

    /// Conclusion decoder over `[c_{t-1}, C]`, started from `O^c_q`.
    pub fn decode_conclusion(
        &self,
        tape: &mut Tape<'_>,
        feed: Feed<'_>,
        question_c: Var,
    ) -> Result<DecoderRun> {
        let cell = LstmCell::bind(tape, CONCLUSION_DECODER, false)?;
        let type_vec = self.type_vector(tape, SentenceType::Conclusion)?;
        let (h0, c0) = self.initial_state(tape, CONCLUSION_DECODER, question_c)?;
        self.run_decoder(tape, feed, |tape, prev, run| {
            let h = run.states.last().copied().unwrap_or(h0);
            let c = run.cells.last().copied().unwrap_or(c0);
            let x = self.composite(tape, prev, type_vec)?;
            Ok((cell.step(tape, x, h, c, None)?, None))
        })
    }

    /// Sentence embedding `O_c` / `O_s`: dedicated BiLSTM over the soft
    /// outputs, max-pooled.
    pub fn sequence_embedding(
        &self,
        tape: &mut Tape<'_>,
        soft: &[Var],
        side: SentenceType,
    ) -> Result<Var> {
        if soft.is_empty() {
            return Err(Error::domain("sequence_embedding", "empty sequence"));
        }
        let prefix = match side {
            SentenceType::Supplement if !self.config.share_ensemble => SUPPLEMENT_ENSEMBLE,
            _ => CONCLUSION_ENSEMBLE,
        };
        let net = BiLstm::bind(tape, prefix)?;
        Ok(net.embed(tape, soft)?.1)
    }

    /// `α_t = σ(V_aᵀ tanh(W_a h″_{t−1} + O_c))`, `cx_t = α_t · O_c`.
    pub fn attention_context(
        &self,
        tape: &mut Tape<'_>,
        prev_hidden: Var,
        conclusion_embedding: Var,
    ) -> Result<(Var, Var)> {
        let w = tape.param(ATTENTION_W)?;
        let v = tape.param(ATTENTION_V)?;
        let projected = tape.matvec(w, prev_hidden)?;
        let summed = tape.add(projected, conclusion_embedding)?;
        let squashed = tape.tanh(summed)?;
        let score = tape.dot(v, squashed)?;
        let alpha = tape.sigmoid(score)?;
        let cx = tape.scale_by(alpha, conclusion_embedding)?;
        Ok((alpha, cx))
    }

    fn supplement_update(
        &self,
        tape: &mut Tape<'_>,
        cell: &LstmCell,
        type_vec: Var,
        prev_embedding: Var,
        prev_hidden: Var,
        prev_cell: Var,
        context: Option<Var>,
    ) -> Result<CellOut> {
        let x = tape.concat(&[prev_embedding, type_vec])?;
        let context = if self.config.use_attention { context } else { None };
        cell.step(tape, x, prev_hidden, prev_cell, context)
    }

    /// One gated supplement update with input `[y_{t−1}, T]` and optional
    /// context `cx_t`; the context is ignored when attention is disabled.
    pub fn supplement_step(
        &self,
        tape: &mut Tape<'_>,
        prev_embedding: Var,
        prev_hidden: Var,
        prev_cell: Var,
        context: Option<Var>,
    ) -> Result<SupplementStep> {
        let cell = LstmCell::bind(tape, SUPPLEMENT_DECODER, self.config.use_attention)?;
        let type_vec = self.type_vector(tape, SentenceType::Supplement)?;
        let out = self.supplement_update(
            tape,
            &cell,
            type_vec,
            prev_embedding,
            prev_hidden,
            prev_cell,
            context,
        )?;
        let u = tape.param(OUTPUT_EMBEDDING)?;
        let logits = tape.matvec_t(u, out.hidden)?;
        Ok(SupplementStep { cell: out, logits })
    }

    /// Supplement decoder started from `O^s_q`, attending to `O_c` unless
    /// attention is disabled.
    pub fn decode_supplement(
        &self,
        tape: &mut Tape<'_>,
        feed: Feed<'_>,
        question_s: Var,
        conclusion_embedding: Var,
    ) -> Result<DecoderRun> {
        let cell = LstmCell::bind(tape, SUPPLEMENT_DECODER, self.config.use_attention)?;
        let type_vec = self.type_vector(tape, SentenceType::Supplement)?;
        let (h0, c0) = self.initial_state(tape, SUPPLEMENT_DECODER, question_s)?;
        let table = tape.param(INPUT_EMBEDDING)?;
        self.run_decoder(tape, feed, |tape, prev, run| {
            let h = run.states.last().copied().unwrap_or(h0);
            let c = run.cells.last().copied().unwrap_or(c0);
            let attention = if self.config.use_attention {
                Some(self.attention_context(tape, h, conclusion_embedding)?)
            } else {
                None
            };
            let word = tape.gather(table, prev)?;
            let context = attention.map(|(_, cx)| cx);
            let out = self.supplement_update(tape, &cell, type_vec, word, h, c, context)?;
            Ok((out, attention))
        })
    }

    /// Sum of `−ln p(target)` over all steps.
    pub fn cross_entropy(&self, tape: &mut Tape<'_>, logits: &[Var], targets: &[usize]) -> Result<Var> {
        if logits.len() != targets.len() {
            return Err(Error::domain(
                "cross_entropy",
                format!("{} steps for {} targets", logits.len(), targets.len()),
            ));
        }
        let terms = logits
            .iter()
            .zip(targets)
            .map(|(&l, &t)| tape.neg_log_softmax(l, t))
            .collect::<Result<Vec<_>>>()?;
        tape.sum(&terms)
    }

    /// Combination hinge loss
    /// `Σ_a max(0, M − (cos(O_q, [O⁺_c, O⁺_s]) − cos(O_q, O_a)))` over
    /// `a ∈ {[O⁺_c, O⁻_s], [O⁻_c, O⁺_s], [O⁻_c, O⁻_s]}`.
    pub fn loss_closeness(
        tape: &mut Tape<'_>,
        question: Var,
        pos_c: Var,
        pos_s: Var,
        neg_c: Var,
        neg_s: Var,
        margin: f64,
    ) -> Result<Var> {
        let positive = tape.concat(&[pos_c, pos_s])?;
        let pos_cos = tape.cosine(question, positive)?;
        let mut terms = Vec::with_capacity(3);
        for (c, s) in [(pos_c, neg_s), (neg_c, pos_s), (neg_c, neg_s)] {
            let combo = tape.concat(&[c, s])?;
            let cos = tape.cosine(question, combo)?;
            let gap = tape.scale(pos_cos, -1.0)?;
            let gap = tape.add(gap, cos)?;
            let shifted = tape.add_scalar(gap, margin)?;
            terms.push(tape.relu(shifted)?);
        }
        tape.sum(&terms)
    }

    pub(crate) fn forward(
        &self,
        tape: &mut Tape<'_>,
        example: &EncodedTriple,
        negative: Option<&EncodedTriple>,
    ) -> Result<ForwardVars> {
        let question_c = self.encode_question(tape, &example.question, SentenceType::Conclusion)?;
        let question_s = self.encode_question(tape, &example.question, SentenceType::Supplement)?;
        let question = tape.concat(&[question_c.embedding, question_s.embedding])?;

        let conclusion =
            self.decode_conclusion(tape, Feed::Teacher(&example.conclusion), question_c.embedding)?;
        let conclusion_embedding =
            self.sequence_embedding(tape, &conclusion.soft, SentenceType::Conclusion)?;
        let supplement = self.decode_supplement(
            tape,
            Feed::Teacher(&example.supplement),
            question_s.embedding,
            conclusion_embedding,
        )?;
        let supplement_embedding =
            self.sequence_embedding(tape, &supplement.soft, SentenceType::Supplement)?;

        let (negative, losses) = match negative {
            None => (None, None),
            Some(neg) => {
                let neg_conc = self.decode_conclusion(
                    tape,
                    Feed::Teacher(&neg.conclusion),
                    question_c.embedding,
                )?;
                let neg_c = self.sequence_embedding(tape, &neg_conc.soft, SentenceType::Conclusion)?;
                let neg_supp = self.decode_supplement(
                    tape,
                    Feed::Teacher(&neg.supplement),
                    question_s.embedding,
                    neg_c,
                )?;
                let neg_s = self.sequence_embedding(tape, &neg_supp.soft, SentenceType::Supplement)?;
                let closeness = Self::loss_closeness(
                    tape,
                    question,
                    conclusion_embedding,
                    supplement_embedding,
                    neg_c,
                    neg_s,
                    self.config.margin,
                )?;
                let ce_c = self.cross_entropy(tape, &conclusion.logits, &example.conclusion)?;
                let ce_s = self.cross_entropy(tape, &supplement.logits, &example.supplement)?;
                let ce = tape.add(ce_c, ce_s)?;
                let weighted = tape.scale(closeness, self.config.alpha)?;
                let total = tape.add(weighted, ce)?;
                (Some((neg_c, neg_s)), Some((total, closeness, ce)))
            }
        };
        Ok(ForwardVars {
            question_c,
            question_s,
            question,
            conclusion,
            supplement,
            conclusion_embedding,
            supplement_embedding,
            negative,
            losses,
        })
    }

    /// Joint loss `L_w = α·L_s + CE` for one example against one negative.
    /// CE runs over the merged conclusion-then-supplement targets.
    pub fn loss_total(
        &self,
        tape: &mut Tape<'_>,
        example: &EncodedTriple,
        negative: &EncodedTriple,
    ) -> Result<(Var, ForwardTrace)> {
        let vars = self.forward(tape, example, Some(negative))?;
        let (total, _, _) = vars.losses.expect("losses computed with a negative");
        let trace = ForwardTrace::collect(tape, &vars);
        if !tape.scalar(total).is_finite() {
            return Err(Error::Training("non-finite loss".into()));
        }
        Ok((total, trace))
    }

    /// Loss components and parameter gradients for one example.
    pub fn example_gradient(
        &self,
        params: &ParamStore,
        example: &EncodedTriple,
        negative: &EncodedTriple,
    ) -> Result<(LossParts, Grads)> {
        let mut tape = Tape::new(params);
        let vars = self.forward(&mut tape, example, Some(negative))?;
        let (total, closeness, ce) = vars.losses.expect("losses computed with a negative");
        let parts = LossParts {
            total: tape.scalar(total),
            closeness: tape.scalar(closeness),
            cross_entropy: tape.scalar(ce),
        };
        if !parts.total.is_finite() {
            return Err(Error::Training("non-finite loss".into()));
        }
        Ok((parts, tape.backward(total)?))
    }
}

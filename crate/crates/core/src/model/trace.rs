use serde::{Deserialize, Serialize};

use super::network::{DecoderRun, ForwardVars};
use crate::numkit::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    /// `L_w`.
    pub total: f64,
    /// `L_s`.
    pub closeness: f64,
    pub cross_entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embeddings {
    pub question_c: Tensor,
    pub question_s: Tensor,
    /// `[O^c_q, O^s_q]`.
    pub question: Tensor,
    pub conclusion: Tensor,
    pub supplement: Tensor,
    pub negative_conclusion: Option<Tensor>,
    pub negative_supplement: Option<Tensor>,
}

/// Activations of one forward pass, copied off the tape.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrace {
    pub encoder_states_c: Vec<Tensor>,
    pub encoder_states_s: Vec<Tensor>,
    pub conclusion_states: Vec<Tensor>,
    pub supplement_states: Vec<Tensor>,
    pub conclusion_soft: Vec<Tensor>,
    pub supplement_soft: Vec<Tensor>,
    pub conclusion_logits: Vec<Tensor>,
    pub supplement_logits: Vec<Tensor>,
    pub attention: Vec<f64>,
    pub context: Vec<Tensor>,
    pub embeddings: Option<Embeddings>,
    pub losses: Option<LossParts>,
}

fn values(tape: &Tape<'_>, vars: &[Var]) -> Vec<Tensor> {
    vars.iter().map(|&v| tape.value(v).clone()).collect()
}

impl ForwardTrace {
    pub(crate) fn from_runs(
        tape: &Tape<'_>,
        conclusion: &DecoderRun,
        supplement: &DecoderRun,
    ) -> Self {
        ForwardTrace {
            conclusion_states: values(tape, &conclusion.states),
            supplement_states: values(tape, &supplement.states),
            conclusion_soft: values(tape, &conclusion.soft),
            supplement_soft: values(tape, &supplement.soft),
            conclusion_logits: values(tape, &conclusion.logits),
            supplement_logits: values(tape, &supplement.logits),
            attention: supplement.attention.iter().map(|&a| tape.scalar(a)).collect(),
            context: values(tape, &supplement.context),
            ..Default::default()
        }
    }

    pub(crate) fn collect(tape: &Tape<'_>, vars: &ForwardVars) -> Self {
        let mut trace = Self::from_runs(tape, &vars.conclusion, &vars.supplement);
        trace.encoder_states_c = values(tape, &vars.question_c.states);
        trace.encoder_states_s = values(tape, &vars.question_s.states);
        trace.embeddings = Some(Embeddings {
            question_c: tape.value(vars.question_c.embedding).clone(),
            question_s: tape.value(vars.question_s.embedding).clone(),
            question: tape.value(vars.question).clone(),
            conclusion: tape.value(vars.conclusion_embedding).clone(),
            supplement: tape.value(vars.supplement_embedding).clone(),
            negative_conclusion: vars.negative.map(|(c, _)| tape.value(c).clone()),
            negative_supplement: vars.negative.map(|(_, s)| tape.value(s).clone()),
        });
        trace.losses = vars.losses.map(|(total, closeness, ce)| LossParts {
            total: tape.scalar(total),
            closeness: tape.scalar(closeness),
            cross_entropy: tape.scalar(ce),
        });
        trace
    }
}

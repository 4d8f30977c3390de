use crate::error::Result;
use crate::numkit::{Tape, Tensor, Var};

/// Gate activations of one step.
#[derive(Clone, Copy, Debug)]
pub struct Gates {
    pub input: Var,
    pub forget: Var,
    pub output: Var,
    pub candidate: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct CellOut {
    pub hidden: Var,
    pub cell: Var,
    pub gates: Gates,
}

/// LSTM weights bound on a tape. `w_att` scores an extra context input.
#[derive(Clone, Copy, Debug)]
pub struct LstmCell {
    w_x: Var,
    w_h: Var,
    b: Var,
    w_att: Option<Var>,
    hidden: usize,
}

impl LstmCell {
    pub fn bind(tape: &mut Tape<'_>, prefix: &str, with_context: bool) -> Result<Self> {
        let w_x = tape.param(&format!("{prefix}.w_x"))?;
        let w_h = tape.param(&format!("{prefix}.w_h"))?;
        let b = tape.param(&format!("{prefix}.b"))?;
        let w_att = if with_context {
            Some(tape.param(&format!("{prefix}.w_att"))?)
        } else {
            None
        };
        let hidden = tape.value(w_h).shape()[1];
        Ok(LstmCell {
            w_x,
            w_h,
            b,
            w_att,
            hidden,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// `z = σ(W_x x + W_h h + W_att cx + b)` per gate, `l̃ = tanh(…)`,
    /// `l = i∗l̃ + f∗l_prev`, `h = o∗tanh(l)`.
    pub fn step(
        &self,
        tape: &mut Tape<'_>,
        x: Var,
        h: Var,
        c: Var,
        context: Option<Var>,
    ) -> Result<CellOut> {
        let from_x = tape.affine(x, self.w_x, self.b)?;
        let from_h = tape.matvec(self.w_h, h)?;
        let pre = match (self.w_att, context) {
            (Some(w_att), Some(cx)) => {
                let from_cx = tape.matvec(w_att, cx)?;
                tape.sum(&[from_x, from_h, from_cx])?
            }
            _ => tape.add(from_x, from_h)?,
        };
        let d = self.hidden;
        let i = tape.slice(pre, 0, d)?;
        let f = tape.slice(pre, d, d)?;
        let o = tape.slice(pre, 2 * d, d)?;
        let g = tape.slice(pre, 3 * d, d)?;
        let input = tape.sigmoid(i)?;
        let forget = tape.sigmoid(f)?;
        let output = tape.sigmoid(o)?;
        let candidate = tape.tanh(g)?;
        let kept = tape.mul(forget, c)?;
        let written = tape.mul(input, candidate)?;
        let cell = tape.add(written, kept)?;
        let squashed = tape.tanh(cell)?;
        let hidden = tape.mul(output, squashed)?;
        Ok(CellOut {
            hidden,
            cell,
            gates: Gates {
                input,
                forget,
                output,
                candidate,
            },
        })
    }

    pub fn zero_state(&self, tape: &mut Tape<'_>) -> Result<(Var, Var)> {
        let h = tape.constant(Tensor::zeros(&[self.hidden]))?;
        let c = tape.constant(Tensor::zeros(&[self.hidden]))?;
        Ok((h, c))
    }
}

/// Forward and backward cells run over one sequence.
#[derive(Clone, Copy, Debug)]
pub struct BiLstm {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

impl BiLstm {
    pub fn bind(tape: &mut Tape<'_>, prefix: &str) -> Result<Self> {
        Ok(BiLstm {
            forward: LstmCell::bind(tape, &format!("{prefix}.fwd"), false)?,
            backward: LstmCell::bind(tape, &format!("{prefix}.bwd"), false)?,
        })
    }

    /// Per-position `[h_fwd, h_bwd]`.
    pub fn run(&self, tape: &mut Tape<'_>, inputs: &[Var]) -> Result<Vec<Var>> {
        let n = inputs.len();
        let mut fwd = Vec::with_capacity(n);
        let (mut h, mut c) = self.forward.zero_state(tape)?;
        for &x in inputs {
            let out = self.forward.step(tape, x, h, c, None)?;
            h = out.hidden;
            c = out.cell;
            fwd.push(h);
        }
        let mut bwd = vec![h; n];
        let (mut h, mut c) = self.backward.zero_state(tape)?;
        for (t, &x) in inputs.iter().enumerate().rev() {
            let out = self.backward.step(tape, x, h, c, None)?;
            h = out.hidden;
            c = out.cell;
            bwd[t] = h;
        }
        fwd.iter()
            .zip(&bwd)
            .map(|(&f, &b)| tape.concat(&[f, b]))
            .collect()
    }

    /// BiLSTM states max-pooled over time.
    pub fn embed(&self, tape: &mut Tape<'_>, inputs: &[Var]) -> Result<(Vec<Var>, Var)> {
        let states = self.run(tape, inputs)?;
        let mask = vec![true; states.len()];
        let pooled = tape.max_pool_time(&states, &mask)?;
        Ok((states, pooled))
    }
}

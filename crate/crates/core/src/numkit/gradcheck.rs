//! Central finite-difference check of tape gradients.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Denominator floor for the relative error.
pub const REL_ERR_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    pub eps: f64,
    /// Coordinates checked per tensor; smaller tensors are checked fully.
    pub samples_per_tensor: usize,
    pub seed: u64,
    /// Combine the differences at `eps` and `eps/2` as `(4·D(eps/2) − D(eps)) / 3`,
    /// cancelling the `eps²` truncation term.
    pub extrapolate: bool,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-3,
            samples_per_tensor: 32,
            seed: 0,
            extrapolate: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorCheck {
    pub name: String,
    pub coords_checked: usize,
    /// Coordinates whose perturbation crossed a non-smooth point and were
    /// replaced by other coordinates.
    pub coords_skipped: usize,
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub loss: f64,
    pub eps: f64,
    pub max_rel_err: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&TensorCheck> {
        self.tensors
            .iter()
            .max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

fn evaluate<F>(params: &ParamStore, f: &F) -> Result<(f64, Vec<usize>)>
where
    F: for<'p> Fn(&mut Tape<'p>) -> Result<Var>,
{
    let mut tape = Tape::new(params);
    let loss = f(&mut tape)?;
    let value = tape.scalar(loss);
    if !value.is_finite() {
        return Err(Error::Evaluation("objective is not finite".into()));
    }
    Ok((value, tape.branch_signature()))
}

/// Compares the tape gradient of the scalar built by `f` against
/// `(f(θ+eps) − f(θ−eps)) / 2eps` on every tensor in `params`.
///
/// A central difference that straddles a kink (a max-pool winner or ReLU
/// switching) measures no derivative at all, so such coordinates are
/// skipped and another coordinate of the same tensor is drawn instead.
pub fn grad_check<F>(params: &ParamStore, f: F, opts: GradCheckOptions) -> Result<GradCheckReport>
where
    F: for<'p> Fn(&mut Tape<'p>) -> Result<Var>,
{
    if !(1e-6..=1e-3).contains(&opts.eps) {
        return Err(Error::Config(format!(
            "finite-difference eps must lie in [1e-6, 1e-3], got {}",
            opts.eps
        )));
    }
    let (loss, grads, base_sig) = {
        let mut tape = Tape::new(params);
        let loss = f(&mut tape)?;
        let value = tape.scalar(loss);
        if !value.is_finite() {
            return Err(Error::Evaluation("objective is not finite".into()));
        }
        (value, tape.backward(loss)?, tape.branch_signature())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut perturbed = params.clone();
    let mut tensors = Vec::new();
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in names {
        let len = params.get(&name).map(|t| t.len()).unwrap_or(0);
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(&mut rng);
        let mut check = TensorCheck {
            name: name.clone(),
            coords_checked: 0,
            coords_skipped: 0,
            max_rel_err: f64::NEG_INFINITY,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for idx in order {
            if check.coords_checked == opts.samples_per_tensor {
                break;
            }
            let original = params.get(&name).unwrap().data()[idx];
            let mut central = |h: f64| -> Result<Option<f64>> {
                perturbed.get_mut(&name).unwrap().data_mut()[idx] = original + h;
                let (plus, plus_sig) = evaluate(&perturbed, &f)?;
                perturbed.get_mut(&name).unwrap().data_mut()[idx] = original - h;
                let (minus, minus_sig) = evaluate(&perturbed, &f)?;
                perturbed.get_mut(&name).unwrap().data_mut()[idx] = original;
                let smooth = plus_sig == base_sig && minus_sig == base_sig;
                Ok(smooth.then(|| (plus - minus) / (2.0 * h)))
            };
            let numeric = if opts.extrapolate {
                match (central(opts.eps)?, central(opts.eps / 2.0)?) {
                    (Some(wide), Some(narrow)) => Some((4.0 * narrow - wide) / 3.0),
                    _ => None,
                }
            } else {
                central(opts.eps)?
            };
            let Some(numeric) = numeric else {
                check.coords_skipped += 1;
                continue;
            };
            check.coords_checked += 1;

            let analytic = grads.get(&name).map(|g| g.data()[idx]).unwrap_or(0.0);
            let err = relative_error(analytic, numeric);
            if err > check.max_rel_err {
                check.max_rel_err = err;
                check.worst_index = idx;
                check.analytic = analytic;
                check.numeric = numeric;
            }
        }
        check.max_rel_err = check.max_rel_err.max(0.0);
        tensors.push(check);
    }
    let max_rel_err = tensors.iter().map(|t| t.max_rel_err).fold(0.0, f64::max);
    Ok(GradCheckReport {
        loss,
        eps: opts.eps,
        max_rel_err,
        tensors,
    })
}

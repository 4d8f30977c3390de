use std::collections::BTreeMap;

use rand::Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Gradients keyed by parameter name.
pub type Grads = BTreeMap<String, Tensor>;

/// Adds `g` into `total`, key by key.
pub fn accumulate_grads(total: &mut Grads, g: &Grads) {
    for (name, t) in g {
        match total.get_mut(name) {
            Some(acc) => acc.add_scaled(t, 1.0),
            None => {
                total.insert(name.clone(), t.clone());
            }
        }
    }
}

pub fn scale_grads(grads: &mut Grads, factor: f64) {
    for t in grads.values_mut() {
        for v in t.data_mut() {
            *v *= factor;
        }
    }
}

/// Named trainable tensors plus their AdaGrad accumulators.
///
/// Both maps always carry the same keys and shapes; accumulators start at
/// zero and only grow.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: BTreeMap<String, Tensor>,
    accumulators: BTreeMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        let name = name.into();
        self.accumulators
            .insert(name.clone(), Tensor::zeros(value.shape()));
        self.params.insert(name, value);
    }

    /// Inserts a tensor together with a previously accumulated AdaGrad state.
    pub fn insert_with_accumulator(
        &mut self,
        name: impl Into<String>,
        value: Tensor,
        accumulator: Tensor,
    ) -> Result<()> {
        let name = name.into();
        if accumulator.shape() != value.shape() {
            return Err(Error::ShapeMismatch {
                name,
                expected: value.shape().to_vec(),
                found: accumulator.shape().to_vec(),
            });
        }
        self.accumulators.insert(name.clone(), accumulator);
        self.params.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.get_mut(name)
    }

    pub fn accumulator(&self, name: &str) -> Option<&Tensor> {
        self.accumulators.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_values(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params.values().all(Tensor::all_finite)
    }

    /// Uniform Glorot initialisation, `±sqrt(6 / (fan_in + fan_out))`.
    ///
    /// Matrices use `(rows, cols)` as `(fan_out, fan_in)`; vectors are treated
    /// as a single row.
    pub fn glorot(shape: &[usize], rng: &mut impl Rng) -> Tensor {
        let (fan_out, fan_in) = match shape {
            [n] => (1, *n),
            [r, c] => (*r, *c),
            _ => (shape[0], shape[1..].iter().product()),
        };
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
        Tensor::new(shape.to_vec(), data).expect("shape product matches")
    }
}

/// Per-coordinate AdaGrad:
/// `acc += g²; θ -= lr · g / (sqrt(acc) + eps)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adagrad {
    pub lr: f64,
    pub eps: f64,
}

impl Default for Adagrad {
    fn default() -> Self {
        Adagrad {
            lr: 0.05,
            eps: 1e-8,
        }
    }
}

impl Adagrad {
    pub fn new(lr: f64, eps: f64) -> Result<Self> {
        if !(lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be > 0, got {lr}")));
        }
        if !(eps >= 0.0) {
            return Err(Error::Config(format!("adagrad eps must be >= 0, got {eps}")));
        }
        Ok(Adagrad { lr, eps })
    }

    /// Parameters without an entry in `grads` are left untouched.
    pub fn step(&self, store: &mut ParamStore, grads: &Grads) -> Result<()> {
        for (name, g) in grads {
            if !g.all_finite() {
                return Err(Error::Training(format!("non-finite gradient for {name}")));
            }
            let (Some(param), Some(acc)) =
                (store.params.get_mut(name), store.accumulators.get_mut(name))
            else {
                return Err(Error::Training(format!("gradient for unknown parameter {name}")));
            };
            if param.shape() != g.shape() {
                return Err(Error::Dimension {
                    op: "adagrad_step",
                    left: param.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
            for ((p, a), &gi) in param
                .data_mut()
                .iter_mut()
                .zip(acc.data_mut().iter_mut())
                .zip(g.data())
            {
                if gi == 0.0 {
                    continue;
                }
                *a += gi * gi;
                *p -= self.lr * gi / (a.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

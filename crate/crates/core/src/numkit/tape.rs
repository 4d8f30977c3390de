//! Reverse-mode differentiation over a linear tape of tensor operations.
//!
//! A [`Tape`] borrows a [`ParamStore`]; every call to [`Tape::param`] binds
//! a named parameter to a leaf node (once per name). Operations append nodes
//! in execution order, and [`Tape::backward`] replays their adjoints in
//! reverse, returning a gradient for every parameter that took part.

use std::collections::HashMap;

use super::params::{Grads, ParamStore};
use super::tensor::{self, sigmoid_scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Norm floor below which a cosine operand is treated as degenerate.
pub const COSINE_EPS: f64 = 1e-12;

#[derive(Debug)]
enum Op {
    Constant,
    Param(String),
    Affine { x: Var, w: Var, b: Var },
    MatVec { w: Var, x: Var },
    MatVecT { w: Var, x: Var },
    Add(Var, Var),
    Sum(Vec<Var>),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    ScaleBy { s: Var, v: Var },
    Dot(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Concat(Vec<Var>),
    Slice { a: Var, start: usize },
    Gather { table: Var, row: usize },
    Softmax(Var),
    NegLogSoftmax { logits: Var, target: usize, probs: Vec<f64> },
    MaxPool { inputs: Vec<Var>, winners: Vec<usize> },
    Cosine { a: Var, b: Var, na: f64, nb: f64, a_floored: bool, b_floored: bool },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    bound: HashMap<String, Var>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::with_capacity(1024),
            bound: HashMap::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, op: &'static str, value: Tensor, node_op: Op, needs_grad: bool) -> Result<Var> {
        if !value.all_finite() {
            return Err(Error::NonFinite { op });
        }
        self.nodes.push(Node {
            value,
            op: node_op,
            needs_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn dim_err(&self, op: &'static str, a: Var, b: Var) -> Error {
        Error::Dimension {
            op,
            left: self.shape(a).to_vec(),
            right: self.shape(b).to_vec(),
        }
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(self.dim_err(op, a, b));
        }
        Ok(())
    }

    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.push("constant", value, Op::Constant, false)
    }

    /// Leaf bound to the named parameter; repeated calls return the same node.
    pub fn param(&mut self, name: &str) -> Result<Var> {
        if let Some(&v) = self.bound.get(name) {
            return Ok(v);
        }
        let value = self
            .params
            .get(name)
            .ok_or_else(|| Error::Evaluation(format!("unknown parameter {name}")))?
            .clone();
        let v = self.push("param", value, Op::Param(name.to_string()), true)?;
        self.bound.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let out = tensor::affine(self.value(x), self.value(w), self.value(b))
            .map_err(|_| self.dim_err("affine", w, x))?;
        if out.shape() != self.shape(b) {
            return Err(self.dim_err("affine", w, b));
        }
        let ng = self.needs(x) || self.needs(w) || self.needs(b);
        self.push("affine", out, Op::Affine { x, w, b }, ng)
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let out = tensor::matvec(self.value(w), self.value(x))?;
        let ng = self.needs(x) || self.needs(w);
        self.push("matvec", out, Op::MatVec { w, x }, ng)
    }

    /// `Wᵀ x`.
    pub fn matvec_t(&mut self, w: Var, x: Var) -> Result<Var> {
        let out = tensor::matvec_t(self.value(w), self.value(x))?;
        let ng = self.needs(x) || self.needs(w);
        self.push("matvec_t", out, Op::MatVecT { w, x }, ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let mut out = self.value(a).clone();
        out.add_scaled(self.value(b), 1.0);
        let ng = self.needs(a) || self.needs(b);
        self.push("add", out, Op::Add(a, b), ng)
    }

    /// Elementwise sum of equally shaped tensors.
    pub fn sum(&mut self, terms: &[Var]) -> Result<Var> {
        let (&first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::domain("sum", "no terms"))?;
        let mut out = self.value(first).clone();
        for &t in rest {
            self.same_shape("sum", first, t)?;
            out.add_scaled(self.value(t), 1.0);
        }
        let ng = terms.iter().any(|&t| self.needs(t));
        self.push("sum", out, Op::Sum(terms.to_vec()), ng)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .collect();
        let out = Tensor::new(self.shape(a).to_vec(), data)?;
        let ng = self.needs(a) || self.needs(b);
        self.push("mul", out, Op::Mul(a, b), ng)
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let out = self.value(a).map(|v| v * factor);
        let ng = self.needs(a);
        self.push("scale", out, Op::Scale(a, factor), ng)
    }

    pub fn add_scalar(&mut self, a: Var, offset: f64) -> Result<Var> {
        let out = self.value(a).map(|v| v + offset);
        let ng = self.needs(a);
        self.push("add_scalar", out, Op::AddScalar(a), ng)
    }

    /// Scalar node `s` times tensor `v`.
    pub fn scale_by(&mut self, s: Var, v: Var) -> Result<Var> {
        if self.value(s).len() != 1 {
            return Err(self.dim_err("scale_by", s, v));
        }
        let k = self.scalar(s);
        let out = self.value(v).map(|x| x * k);
        let ng = self.needs(s) || self.needs(v);
        self.push("scale_by", out, Op::ScaleBy { s, v }, ng)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if !self.value(a).is_vector() {
            return Err(self.dim_err("dot", a, b));
        }
        self.same_shape("dot", a, b)?;
        let out = Tensor::scalar(self.value(a).dot(self.value(b)));
        let ng = self.needs(a) || self.needs(b);
        self.push("dot", out, Op::Dot(a, b), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid_scalar);
        let ng = self.needs(a);
        self.push("sigmoid", out, Op::Sigmoid(a), ng)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::tanh);
        let ng = self.needs(a);
        self.push("tanh", out, Op::Tanh(a), ng)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|v| v.max(0.0));
        let ng = self.needs(a);
        self.push("relu", out, Op::Relu(a), ng)
    }

    /// Concatenation of vectors.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::domain("concat", "no parts"));
        }
        let mut data = Vec::new();
        for &p in parts {
            if !self.value(p).is_vector() {
                return Err(self.dim_err("concat", parts[0], p));
            }
            data.extend_from_slice(self.value(p).data());
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        self.push("concat", Tensor::vector(data), Op::Concat(parts.to_vec()), ng)
    }

    /// Contiguous sub-vector `[start, start + len)`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let src = self.value(a);
        if !src.is_vector() || len == 0 || start + len > src.len() {
            return Err(Error::Dimension {
                op: "slice",
                left: src.shape().to_vec(),
                right: vec![start, len],
            });
        }
        let out = Tensor::vector(src.data()[start..start + len].to_vec());
        let ng = self.needs(a);
        self.push("slice", out, Op::Slice { a, start }, ng)
    }

    /// Row `row` of a matrix, as a vector.
    pub fn gather(&mut self, table: Var, row: usize) -> Result<Var> {
        let t = self.value(table);
        if !t.is_matrix() || row >= t.shape()[0] {
            return Err(Error::Dimension {
                op: "gather",
                left: t.shape().to_vec(),
                right: vec![row],
            });
        }
        let out = Tensor::vector(t.row(row).to_vec());
        let ng = self.needs(table);
        self.push("gather", out, Op::Gather { table, row }, ng)
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let out = tensor::softmax(self.value(a))?;
        let ng = self.needs(a);
        self.push("softmax", out, Op::Softmax(a), ng)
    }

    /// `-ln softmax(logits)[target]`, computed through log-sum-exp.
    pub fn neg_log_softmax(&mut self, logits: Var, target: usize) -> Result<Var> {
        let x = self.value(logits);
        if !x.is_vector() || target >= x.len() {
            return Err(Error::Dimension {
                op: "neg_log_softmax",
                left: x.shape().to_vec(),
                right: vec![target],
            });
        }
        let max = x.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = x.data().iter().map(|v| (v - max).exp()).sum();
        let lse = max + total.ln();
        let value = lse - x.data()[target];
        let probs = x.data().iter().map(|v| (v - lse).exp()).collect();
        let ng = self.needs(logits);
        self.push(
            "neg_log_softmax",
            Tensor::scalar(value),
            Op::NegLogSoftmax {
                logits,
                target,
                probs,
            },
            ng,
        )
    }

    /// Per-coordinate maximum over the unmasked states. The adjoint goes to
    /// the earliest position attaining each maximum.
    pub fn max_pool_time(&mut self, states: &[Var], mask: &[bool]) -> Result<Var> {
        if states.len() != mask.len() {
            return Err(Error::domain(
                "max_pool_time",
                format!("{} states but {} mask entries", states.len(), mask.len()),
            ));
        }
        let active: Vec<Var> = states
            .iter()
            .zip(mask)
            .filter_map(|(&s, &m)| m.then_some(s))
            .collect();
        let Some(&first) = active.first() else {
            return Err(Error::domain("max_pool_time", "all positions masked"));
        };
        for &s in &active {
            if !self.value(s).is_vector() {
                return Err(self.dim_err("max_pool_time", first, s));
            }
            self.same_shape("max_pool_time", first, s)?;
        }
        let dim = self.value(first).len();
        let mut out = self.value(first).data().to_vec();
        let mut winners = vec![0usize; dim];
        for (j, &s) in active.iter().enumerate().skip(1) {
            for (k, &v) in self.value(s).data().iter().enumerate() {
                if v > out[k] {
                    out[k] = v;
                    winners[k] = j;
                }
            }
        }
        let ng = active.iter().any(|&s| self.needs(s));
        self.push(
            "max_pool_time",
            Tensor::vector(out),
            Op::MaxPool {
                inputs: active,
                winners,
            },
            ng,
        )
    }

    /// `u·v / (‖u‖‖v‖)`. A norm at or below [`COSINE_EPS`] is clamped to it;
    /// both norms that small is an error.
    pub fn cosine(&mut self, a: Var, b: Var) -> Result<Var> {
        if !self.value(a).is_vector() {
            return Err(self.dim_err("cosine", a, b));
        }
        self.same_shape("cosine", a, b)?;
        let (u, v) = (self.value(a), self.value(b));
        let (ra, rb) = (u.norm(), v.norm());
        if ra <= COSINE_EPS && rb <= COSINE_EPS {
            return Err(Error::DegenerateVector { eps: COSINE_EPS });
        }
        let (na, a_floored) = if ra <= COSINE_EPS { (COSINE_EPS, true) } else { (ra, false) };
        let (nb, b_floored) = if rb <= COSINE_EPS { (COSINE_EPS, true) } else { (rb, false) };
        let c = (u.dot(v) / (na * nb)).clamp(-1.0, 1.0);
        let ng = self.needs(a) || self.needs(b);
        self.push(
            "cosine",
            Tensor::scalar(c),
            Op::Cosine {
                a,
                b,
                na,
                nb,
                a_floored,
                b_floored,
            },
            ng,
        )
    }

    /// Gradients of scalar `loss` with respect to every bound parameter that
    /// reached it.
    /// Discrete choices made by non-smooth ops: max-pool winners, ReLU
    /// active sets and cosine norm floors. Two evaluations with equal
    /// signatures lie on the same smooth piece of the function.
    pub fn branch_signature(&self) -> Vec<usize> {
        let mut sig = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            match &node.op {
                Op::MaxPool { winners, .. } => {
                    sig.push(i);
                    sig.extend_from_slice(winners);
                }
                Op::Relu(a) => {
                    sig.push(i);
                    sig.extend(self.value(*a).data().iter().map(|&v| usize::from(v > 0.0)));
                }
                Op::Cosine {
                    a_floored,
                    b_floored,
                    ..
                } => sig.extend([i, usize::from(*a_floored), usize::from(*b_floored)]),
                _ => {}
            }
        }
        sig
    }

    pub fn backward(&self, loss: Var) -> Result<Grads> {
        if self.value(loss).len() != 1 {
            return Err(Error::domain("backward", "loss must be a scalar"));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let mut out = Grads::new();

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            match &node.op {
                Op::Constant => {}
                Op::Param(name) => {
                    out.insert(name.clone(), g);
                }
                Op::Affine { x, w, b } => {
                    self.backprop_matvec(&mut grads, *w, *x, &g);
                    self.accumulate(&mut grads, *b, |buf| add_into(buf, g.data()));
                }
                Op::MatVec { w, x } => self.backprop_matvec(&mut grads, *w, *x, &g),
                Op::MatVecT { w, x } => {
                    // y = Wᵀx: dW[r][c] += x[r] g[c], dx = W g
                    let wv = self.value(*w);
                    let xv = self.value(*x).data().to_vec();
                    let cols = wv.shape()[1];
                    if self.needs(*w) {
                        self.accumulate(&mut grads, *w, |buf| {
                            for (r, &xr) in xv.iter().enumerate() {
                                if xr == 0.0 {
                                    continue;
                                }
                                let row = &mut buf[r * cols..(r + 1) * cols];
                                for (d, &gc) in row.iter_mut().zip(g.data()) {
                                    *d += xr * gc;
                                }
                            }
                        });
                    }
                    if self.needs(*x) {
                        let dx = tensor::matvec(wv, &g).expect("shapes checked in forward");
                        self.accumulate(&mut grads, *x, |buf| add_into(buf, dx.data()));
                    }
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut grads, *a, |buf| add_into(buf, g.data()));
                    self.accumulate(&mut grads, *b, |buf| add_into(buf, g.data()));
                }
                Op::Sum(terms) => {
                    for &t in terms {
                        self.accumulate(&mut grads, t, |buf| add_into(buf, g.data()));
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                    self.accumulate(&mut grads, *a, |buf| {
                        for ((d, gi), bi) in buf.iter_mut().zip(g.data()).zip(bv) {
                            *d += gi * bi;
                        }
                    });
                    self.accumulate(&mut grads, *b, |buf| {
                        for ((d, gi), ai) in buf.iter_mut().zip(g.data()).zip(av) {
                            *d += gi * ai;
                        }
                    });
                }
                Op::Scale(a, k) => {
                    self.accumulate(&mut grads, *a, |buf| {
                        for (d, gi) in buf.iter_mut().zip(g.data()) {
                            *d += k * gi;
                        }
                    });
                }
                Op::AddScalar(a) => {
                    self.accumulate(&mut grads, *a, |buf| add_into(buf, g.data()));
                }
                Op::ScaleBy { s, v } => {
                    let k = self.scalar(*s);
                    let ds = self.value(*v).dot(&g);
                    self.accumulate(&mut grads, *s, |buf| buf[0] += ds);
                    self.accumulate(&mut grads, *v, |buf| {
                        for (d, gi) in buf.iter_mut().zip(g.data()) {
                            *d += k * gi;
                        }
                    });
                }
                Op::Dot(a, b) => {
                    let gs = g.item();
                    let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                    self.accumulate(&mut grads, *a, |buf| {
                        for (d, bi) in buf.iter_mut().zip(bv) {
                            *d += gs * bi;
                        }
                    });
                    self.accumulate(&mut grads, *b, |buf| {
                        for (d, ai) in buf.iter_mut().zip(av) {
                            *d += gs * ai;
                        }
                    });
                }
                Op::Sigmoid(a) => {
                    let y = node.value.data();
                    self.accumulate(&mut grads, *a, |buf| {
                        for ((d, gi), yi) in buf.iter_mut().zip(g.data()).zip(y) {
                            *d += gi * yi * (1.0 - yi);
                        }
                    });
                }
                Op::Tanh(a) => {
                    let y = node.value.data();
                    self.accumulate(&mut grads, *a, |buf| {
                        for ((d, gi), yi) in buf.iter_mut().zip(g.data()).zip(y) {
                            *d += gi * (1.0 - yi * yi);
                        }
                    });
                }
                Op::Relu(a) => {
                    let x = self.value(*a).data();
                    self.accumulate(&mut grads, *a, |buf| {
                        for ((d, gi), xi) in buf.iter_mut().zip(g.data()).zip(x) {
                            if *xi > 0.0 {
                                *d += gi;
                            }
                        }
                    });
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let n = self.value(p).len();
                        let seg = &g.data()[offset..offset + n];
                        self.accumulate(&mut grads, p, |buf| add_into(buf, seg));
                        offset += n;
                    }
                }
                Op::Slice { a, start } => {
                    let start = *start;
                    self.accumulate(&mut grads, *a, |buf| {
                        add_into(&mut buf[start..start + g.len()], g.data())
                    });
                }
                Op::Gather { table, row } => {
                    let cols = self.shape(*table)[1];
                    let row = *row;
                    self.accumulate(&mut grads, *table, |buf| {
                        add_into(&mut buf[row * cols..(row + 1) * cols], g.data())
                    });
                }
                Op::Softmax(a) => {
                    let y = node.value.data();
                    let width = *node.value.shape().last().unwrap();
                    self.accumulate(&mut grads, *a, |buf| {
                        for ((drow, grow), yrow) in buf
                            .chunks_mut(width)
                            .zip(g.data().chunks(width))
                            .zip(y.chunks(width))
                        {
                            let gy: f64 = grow.iter().zip(yrow).map(|(a, b)| a * b).sum();
                            for ((d, gi), yi) in drow.iter_mut().zip(grow).zip(yrow) {
                                *d += yi * (gi - gy);
                            }
                        }
                    });
                }
                Op::NegLogSoftmax {
                    logits,
                    target,
                    probs,
                } => {
                    let gs = g.item();
                    let target = *target;
                    self.accumulate(&mut grads, *logits, |buf| {
                        for (k, (d, p)) in buf.iter_mut().zip(probs).enumerate() {
                            let onehot = if k == target { 1.0 } else { 0.0 };
                            *d += gs * (p - onehot);
                        }
                    });
                }
                Op::MaxPool { inputs, winners } => {
                    for (j, &input) in inputs.iter().enumerate() {
                        if !winners.contains(&j) {
                            continue;
                        }
                        self.accumulate(&mut grads, input, |buf| {
                            for (k, &w) in winners.iter().enumerate() {
                                if w == j {
                                    buf[k] += g.data()[k];
                                }
                            }
                        });
                    }
                }
                Op::Cosine {
                    a,
                    b,
                    na,
                    nb,
                    a_floored,
                    b_floored,
                } => {
                    let gs = g.item();
                    let c = node.value.item();
                    let (u, v) = (self.value(*a).data(), self.value(*b).data());
                    let inv = 1.0 / (na * nb);
                    self.accumulate(&mut grads, *a, |buf| {
                        for ((d, ui), vi) in buf.iter_mut().zip(u).zip(v) {
                            let radial = if *a_floored { 0.0 } else { c * ui / (na * na) };
                            *d += gs * (vi * inv - radial);
                        }
                    });
                    self.accumulate(&mut grads, *b, |buf| {
                        for ((d, ui), vi) in buf.iter_mut().zip(u).zip(v) {
                            let radial = if *b_floored { 0.0 } else { c * vi / (nb * nb) };
                            *d += gs * (ui * inv - radial);
                        }
                    });
                }
            }
        }
        Ok(out)
    }

    fn backprop_matvec(&self, grads: &mut [Option<Tensor>], w: Var, x: Var, g: &Tensor) {
        // y = W x: dW[r][c] += g[r] x[c], dx = Wᵀ g
        let wv = self.value(w);
        let cols = wv.shape()[1];
        if self.needs(w) {
            let xv = self.value(x).data();
            self.accumulate(grads, w, |buf| {
                for (r, &gr) in g.data().iter().enumerate() {
                    if gr == 0.0 {
                        continue;
                    }
                    let row = &mut buf[r * cols..(r + 1) * cols];
                    for (d, xc) in row.iter_mut().zip(xv) {
                        *d += gr * xc;
                    }
                }
            });
        }
        if self.needs(x) {
            let dx = tensor::matvec_t(wv, g).expect("shapes checked in forward");
            self.accumulate(grads, x, |buf| add_into(buf, dx.data()));
        }
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.needs(v) {
            return;
        }
        let slot = &mut grads[v.0];
        let buf = slot.get_or_insert_with(|| Tensor::zeros(self.nodes[v.0].value.shape()));
        f(buf.data_mut());
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> ParamStore {
        ParamStore::new()
    }

    #[test]
    fn elementwise_basics() {
        let store = empty();
        let mut t = Tape::new(&store);
        let z = t.constant(Tensor::vector(vec![0.0])).unwrap();
        let s = t.sigmoid(z).unwrap();
        let th = t.tanh(z).unwrap();
        assert_eq!(t.scalar(s), 0.5);
        assert_eq!(t.scalar(th), 0.0);
        let a = t.constant(Tensor::vector(vec![1.0, 2.0])).unwrap();
        let b = t.constant(Tensor::vector(vec![3.0])).unwrap();
        let c = t.concat(&[a, b]).unwrap();
        assert_eq!(t.value(c).data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn mul_shape_mismatch() {
        let store = empty();
        let mut t = Tape::new(&store);
        let a = t.constant(Tensor::vector(vec![1.0, 2.0])).unwrap();
        let b = t.constant(Tensor::vector(vec![3.0])).unwrap();
        assert!(matches!(t.mul(a, b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn max_pool_examples() {
        let store = empty();
        let mut t = Tape::new(&store);
        let s1 = t.constant(Tensor::vector(vec![1.0, 4.0])).unwrap();
        let s2 = t.constant(Tensor::vector(vec![3.0, 2.0])).unwrap();
        let p = t.max_pool_time(&[s1, s2], &[true, true]).unwrap();
        assert_eq!(t.value(p).data(), &[3.0, 4.0]);

        let s3 = t.constant(Tensor::vector(vec![5.0, 5.0])).unwrap();
        let s4 = t.constant(Tensor::vector(vec![0.0, 9.0])).unwrap();
        let p = t.max_pool_time(&[s3, s4], &[true, false]).unwrap();
        assert_eq!(t.value(p).data(), &[5.0, 5.0]);

        let p = t.max_pool_time(&[s3], &[true]).unwrap();
        assert_eq!(t.value(p).data(), t.value(s3).data());

        assert!(matches!(
            t.max_pool_time(&[s3, s4], &[false, false]),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn max_pool_ties_route_to_earliest() {
        let mut store = ParamStore::new();
        store.insert("a", Tensor::vector(vec![2.0]));
        store.insert("b", Tensor::vector(vec![2.0]));
        let mut t = Tape::new(&store);
        let a = t.param("a").unwrap();
        let b = t.param("b").unwrap();
        let p = t.max_pool_time(&[a, b], &[true, true]).unwrap();
        let g = t.backward(p).unwrap();
        assert_eq!(g["a"].item(), 1.0);
        assert!(!g.contains_key("b"));
    }

    #[test]
    fn cosine_examples() {
        let store = empty();
        let mut t = Tape::new(&store);
        let v = t.constant(Tensor::vector(vec![0.3, -2.0, 5.0])).unwrap();
        let c = t.cosine(v, v).unwrap();
        assert!((t.scalar(c) - 1.0).abs() < 1e-15);
        let e1 = t.constant(Tensor::vector(vec![1.0, 0.0])).unwrap();
        let e2 = t.constant(Tensor::vector(vec![0.0, 1.0])).unwrap();
        let c = t.cosine(e1, e2).unwrap();
        assert_eq!(t.scalar(c), 0.0);
        let d = t.constant(Tensor::vector(vec![1.0, 1.0])).unwrap();
        let c = t.cosine(d, e1).unwrap();
        assert!((t.scalar(c) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        let z = t.constant(Tensor::zeros(&[2])).unwrap();
        assert!(matches!(t.cosine(z, z), Err(Error::DegenerateVector { .. })));
        let c = t.cosine(z, e1).unwrap();
        assert_eq!(t.scalar(c), 0.0);
    }

    #[test]
    fn softmax_empty_never_constructible() {
        // Tensor::new rejects zero-length shapes, so an empty softmax input
        // cannot reach the tape.
        assert!(Tensor::new(vec![0], vec![]).is_err());
    }

    #[test]
    fn param_bound_once() {
        let mut store = ParamStore::new();
        store.insert("w", Tensor::vector(vec![3.0]));
        let mut t = Tape::new(&store);
        let a = t.param("w").unwrap();
        let b = t.param("w").unwrap();
        assert_eq!(a, b);
        let sq = t.mul(a, b).unwrap();
        let g = t.backward(sq).unwrap();
        assert_eq!(g["w"].item(), 6.0);
    }

    #[test]
    fn unused_param_has_no_gradient() {
        let mut store = ParamStore::new();
        store.insert("used", Tensor::vector(vec![1.0]));
        store.insert("unused", Tensor::vector(vec![1.0]));
        let mut t = Tape::new(&store);
        let u = t.param("used").unwrap();
        let _ = t.param("unused").unwrap();
        let y = t.scale(u, 2.0).unwrap();
        let g = t.backward(y).unwrap();
        assert_eq!(g["used"].item(), 2.0);
        assert!(!g.contains_key("unused"));
    }

    #[test]
    fn non_finite_output_rejected() {
        let store = empty();
        let mut t = Tape::new(&store);
        let a = t.constant(Tensor::vector(vec![1e308])).unwrap();
        assert!(matches!(t.scale(a, 10.0), Err(Error::NonFinite { .. })));
    }
}

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;

use super::tensor::{ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};

static NEXT_TAPE_ID: AtomicUsize = AtomicUsize::new(1);

/// Numeric precision of values recorded on a tape.
///
/// `Single` rounds every intermediate result through `f32`; storage stays `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum Precision {
    #[default]
    Double,
    Single,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var {
    tape: usize,
    idx: usize,
}

impl Var {
    pub fn index(self) -> usize {
        self.idx
    }
}

/// Derivative of an elementwise map, given input `x` and output `y`.
pub type ElementwiseDerivative = fn(x: f64, y: f64) -> f64;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    Param(ParamId),
    ParamRow(ParamId, usize),
    Linear { terms: Vec<(Var, Var)>, bias: Option<Var> },
    Add(Vec<Var>),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Map { input: Var, deriv: ElementwiseDerivative },
    Max { inputs: Vec<Var>, argmax: Vec<usize> },
    Concat(Vec<Var>),
    Sum(Var),
    SoftmaxCrossEntropy { logits: Var, gold: usize, probs: Vec<f64> },
}

impl Op {
    fn kind(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Constant => "constant",
            Op::Param(_) => "param",
            Op::ParamRow(..) => "param_row",
            Op::Linear { .. } => "linear",
            Op::Add(_) => "add",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Map { .. } => "map",
            Op::Max { .. } => "max",
            Op::Concat(_) => "concat",
            Op::Sum(_) => "sum",
            Op::SoftmaxCrossEntropy { .. } => "softmax_cross_entropy",
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    shape: Vec<usize>,
    // Empty for `Op::Param`; those read through the parameter set.
    value: Vec<f64>,
    requires_grad: bool,
}

/// Append-only record of a forward computation, replayed in reverse by
/// [`Tape::backward`].
///
/// Inputs of node `n` always have indices `< n`, so index order is a
/// topological order of the computation DAG.
pub struct Tape<'p> {
    id: usize,
    params: &'p ParamSet,
    precision: Precision,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
    grads: Vec<Option<Vec<f64>>>,
    visits: Vec<u32>,
    backward_done: bool,
}

fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Tape {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            params,
            precision: Precision::Double,
            nodes: Vec::new(),
            param_vars: vec![None; params.len()],
            grads: Vec::new(),
            visits: Vec::new(),
            backward_done: false,
        }
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, v: Var) -> Result<&Node> {
        if v.tape != self.id || v.idx >= self.nodes.len() {
            return Err(Error::usage("variable does not belong to this tape"));
        }
        Ok(&self.nodes[v.idx])
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let node = &self.nodes[v.idx];
        match node.op {
            Op::Param(pid) => self.params.get(pid).values(),
            _ => &node.value,
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.idx].shape
    }

    /// Scalar value of a one-element variable.
    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    pub fn to_tensor(&self, v: Var) -> Tensor {
        Tensor::new(self.shape(v).to_vec(), self.value(v).to_vec())
            .expect("tape nodes keep shape and values consistent")
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, mut value: Vec<f64>, requires_grad: bool) -> Var {
        if self.precision == Precision::Single {
            for x in &mut value {
                *x = *x as f32 as f64;
            }
        }
        self.nodes.push(Node { op, shape, value, requires_grad });
        Var { tape: self.id, idx: self.nodes.len() - 1 }
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.idx].requires_grad
    }

    // ---- leaves ----

    /// A differentiable input that is not a parameter (used by gradient checks).
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        self.push(Op::Leaf, t.shape().to_vec(), t.values().to_vec(), true)
    }

    pub fn constant(&mut self, t: &Tensor) -> Var {
        self.push(Op::Constant, t.shape().to_vec(), t.values().to_vec(), false)
    }

    pub fn constant_vector(&mut self, values: Vec<f64>) -> Var {
        let n = values.len();
        self.push(Op::Constant, vec![n], values, false)
    }

    pub fn zeros(&mut self, n: usize) -> Var {
        self.constant_vector(vec![0.0; n])
    }

    /// The node for a whole parameter tensor; created once per tape.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let t = self.params.get(id);
        let v = self.push(Op::Param(id), t.shape().to_vec(), Vec::new(), self.params.is_trainable(id));
        self.param_vars[id.0] = Some(v);
        v
    }

    /// One row of a matrix parameter (embedding lookup).
    pub fn param_row(&mut self, id: ParamId, row: usize) -> Result<Var> {
        let t = self.params.get(id);
        if t.shape().len() != 2 || row >= t.shape()[0] {
            return Err(Error::Shape { op: "param_row", left: t.shape().to_vec(), right: vec![row] });
        }
        let values = t.row(row).to_vec();
        let cols = t.shape()[1];
        let rg = self.params.is_trainable(id);
        Ok(self.push(Op::ParamRow(id, row), vec![cols], values, rg))
    }

    // ---- arithmetic ----

    /// `Σ W_i x_i + b`. Every `W_i` is `[m, n_i]`, `x_i` is `[n_i]`, `b` is `[m]`.
    pub fn linear(&mut self, terms: &[(Var, Var)], bias: Option<Var>) -> Result<Var> {
        let rows = match (terms.first(), bias) {
            (Some(&(w, _)), _) => {
                let shape = self.check(w)?.shape.clone();
                if shape.len() != 2 {
                    return Err(Error::Shape { op: "linear", left: shape, right: vec![] });
                }
                shape[0]
            }
            (None, Some(b)) => self.check(b)?.shape.iter().product(),
            (None, None) => return Err(Error::usage("linear needs at least one term or a bias")),
        };
        let mut out = vec![0.0; rows];
        let mut rg = false;
        for &(w, x) in terms {
            let ws = self.check(w)?.shape.clone();
            let xs = self.check(x)?.shape.clone();
            if ws.len() != 2 || ws[0] != rows || xs != [ws[1]] {
                return Err(Error::Shape { op: "linear", left: ws, right: xs });
            }
            let cols = ws[1];
            let wv = self.value(w);
            let xv = self.value(x);
            for (r, o) in out.iter_mut().enumerate() {
                let row = &wv[r * cols..(r + 1) * cols];
                *o += row.iter().zip(xv).map(|(a, b)| a * b).sum::<f64>();
            }
            rg |= self.rg(w) || self.rg(x);
        }
        if let Some(b) = bias {
            let bs = self.check(b)?.shape.clone();
            if bs != [rows] {
                return Err(Error::Shape { op: "linear bias", left: vec![rows], right: bs });
            }
            for (o, bv) in out.iter_mut().zip(self.value(b)) {
                *o += bv;
            }
            rg |= self.rg(b);
        }
        Ok(self.push(Op::Linear { terms: terms.to_vec(), bias }, vec![rows], out, rg))
    }

    pub fn affine(&mut self, w: Var, x: Var, b: Var) -> Result<Var> {
        self.linear(&[(w, x)], Some(b))
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        self.linear(&[(w, x)], None)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<Vec<usize>> {
        let sa = self.check(a)?.shape.clone();
        let sb = self.check(b)?.shape.clone();
        if sa != sb {
            return Err(Error::Shape { op, left: sa, right: sb });
        }
        Ok(sa)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.add_all(&[a, b])
    }

    pub fn add_all(&mut self, inputs: &[Var]) -> Result<Var> {
        let first = *inputs.first().ok_or_else(|| Error::usage("add of an empty list"))?;
        let mut rg = false;
        for &v in inputs {
            self.same_shape("add", first, v)?;
            rg |= self.rg(v);
        }
        let mut out = self.value(first).to_vec();
        for &v in &inputs[1..] {
            for (o, x) in out.iter_mut().zip(self.value(v)) {
                *o += x;
            }
        }
        let shape = self.shape(first).to_vec();
        Ok(self.push(Op::Add(inputs.to_vec()), shape, out, rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = self.same_shape("elementwise_mul", a, b)?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Mul(a, b), shape, out, rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let shape = self.check(a)?.shape.clone();
        let out = self.value(a).iter().map(|x| x * factor).collect();
        let rg = self.rg(a);
        Ok(self.push(Op::Scale(a, factor), shape, out, rg))
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Result<Var> {
        let shape = self.check(a)?.shape.clone();
        let out = self.value(a).iter().map(|&x| f(x)).collect();
        let rg = self.rg(a);
        Ok(self.push(op, shape, out, rg))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.unary(a, Op::Sigmoid(a), sigmoid_scalar)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.unary(a, Op::Relu(a), |x| x.max(0.0))
    }

    /// Elementwise `f` with a caller-supplied derivative.
    pub fn map(&mut self, a: Var, f: fn(f64) -> f64, deriv: ElementwiseDerivative) -> Result<Var> {
        self.unary(a, Op::Map { input: a, deriv }, f)
    }

    /// Coordinatewise maximum over same-shape inputs.
    ///
    /// The gradient of each coordinate flows entirely to the input holding the
    /// maximum; ties go to the earliest input in `inputs`.
    pub fn max(&mut self, inputs: &[Var]) -> Result<Var> {
        let first = *inputs.first().ok_or_else(|| Error::usage("elementwise max of an empty list"))?;
        let mut rg = false;
        for &v in inputs {
            self.same_shape("elementwise_max", first, v)?;
            rg |= self.rg(v);
        }
        let mut out = self.value(first).to_vec();
        let mut argmax = vec![0usize; out.len()];
        for (k, &v) in inputs.iter().enumerate().skip(1) {
            for (j, &x) in self.value(v).iter().enumerate() {
                if x > out[j] {
                    out[j] = x;
                    argmax[j] = k;
                }
            }
        }
        let shape = self.shape(first).to_vec();
        Ok(self.push(Op::Max { inputs: inputs.to_vec(), argmax }, shape, out, rg))
    }

    /// Concatenation of vectors.
    pub fn concat(&mut self, inputs: &[Var]) -> Result<Var> {
        let mut out = Vec::new();
        let mut rg = false;
        for &v in inputs {
            let s = self.check(v)?.shape.clone();
            if s.len() != 1 {
                return Err(Error::Shape { op: "concat", left: s, right: vec![] });
            }
            out.extend_from_slice(self.value(v));
            rg |= self.rg(v);
        }
        let n = out.len();
        Ok(self.push(Op::Concat(inputs.to_vec()), vec![n], out, rg))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.check(a)?;
        let s = self.value(a).iter().sum();
        let rg = self.rg(a);
        Ok(self.push(Op::Sum(a), Vec::new(), vec![s], rg))
    }

    /// Mean of scalar variables.
    pub fn mean(&mut self, scalars: &[Var]) -> Result<Var> {
        let total = self.add_all(scalars)?;
        self.scale(total, 1.0 / scalars.len() as f64)
    }

    /// Returns the loss `-ln p[gold]` and the softmax probabilities.
    pub fn softmax_cross_entropy(&mut self, logits: Var, gold: usize) -> Result<(Var, Vec<f64>)> {
        let s = self.check(logits)?.shape.clone();
        let n = self.value(logits).len();
        if s.len() != 1 {
            return Err(Error::Shape { op: "softmax_cross_entropy", left: s, right: vec![] });
        }
        if gold >= n {
            return Err(Error::usage(format!("gold class {gold} out of range for {n} classes")));
        }
        let probs = softmax(self.value(logits));
        let z = self.value(logits);
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        let loss = lse - z[gold];
        let rg = self.rg(logits);
        let v = self.push(Op::SoftmaxCrossEntropy { logits, gold, probs: probs.clone() }, Vec::new(), vec![loss], rg);
        Ok((v, probs))
    }

    /// Inverted dropout: zero each coordinate with probability `rate`, scale the rest.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, rate: f64, rng: &mut R) -> Result<Var> {
        if rate <= 0.0 {
            return Ok(a);
        }
        if rate >= 1.0 {
            let n = self.value(a).len();
            let zeros = self.zeros(n);
            return self.mul(a, zeros);
        }
        let keep = 1.0 / (1.0 - rate);
        let n = self.value(a).len();
        let mask: Vec<f64> = (0..n).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect();
        let m = self.constant_vector(mask);
        self.mul(a, m)
    }

    // ---- reverse pass ----

    /// Back-propagates from the scalar `root`, filling gradients for every
    /// node that requires one. Call [`Tape::reset_grads`] before calling again.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        if root.tape != self.id || root.idx >= self.nodes.len() {
            return Err(Error::usage("backward root is not on this tape"));
        }
        if self.value(root).len() != 1 {
            return Err(Error::usage(format!("backward root must be a scalar, got shape {:?}", self.shape(root))));
        }
        if self.backward_done {
            return Err(Error::usage("backward already ran on this tape; reset gradients first"));
        }
        self.backward_done = true;

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        self.visits = vec![0; self.nodes.len()];
        grads[root.idx] = Some(vec![1.0]);

        for i in (0..=root.idx).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.visits[i] += 1;
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let y = &node.value;
        match &node.op {
            Op::Leaf | Op::Constant | Op::Param(_) | Op::ParamRow(..) => {}
            Op::Linear { terms, bias } => {
                for &(w, x) in terms {
                    let cols = self.nodes[w.idx].shape[1];
                    if self.rg(w) {
                        let xv = self.value(x);
                        let gw = self.slot(grads, w);
                        for (r, gr) in g.iter().enumerate() {
                            if *gr == 0.0 {
                                continue;
                            }
                            for (gwc, xc) in gw[r * cols..(r + 1) * cols].iter_mut().zip(xv) {
                                *gwc += gr * xc;
                            }
                        }
                    }
                    if self.rg(x) {
                        let wv = self.value(w);
                        let gx = self.slot(grads, x);
                        for (r, gr) in g.iter().enumerate() {
                            if *gr == 0.0 {
                                continue;
                            }
                            for (gxc, wc) in gx.iter_mut().zip(&wv[r * cols..(r + 1) * cols]) {
                                *gxc += gr * wc;
                            }
                        }
                    }
                }
                if let Some(b) = *bias {
                    self.add_into(grads, b, g);
                }
            }
            Op::Add(inputs) => {
                for &v in inputs {
                    self.add_into(grads, v, g);
                }
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                if self.rg(a) {
                    let bv = self.value(b);
                    let ga = self.slot(grads, a);
                    for ((o, gi), bi) in ga.iter_mut().zip(g).zip(bv) {
                        *o += gi * bi;
                    }
                }
                if self.rg(b) {
                    let av = self.value(a);
                    let gb = self.slot(grads, b);
                    for ((o, gi), ai) in gb.iter_mut().zip(g).zip(av) {
                        *o += gi * ai;
                    }
                }
            }
            Op::Scale(a, f) => {
                let f = *f;
                let ga = self.slot(grads, *a);
                for (o, gi) in ga.iter_mut().zip(g) {
                    *o += gi * f;
                }
            }
            Op::Sigmoid(a) => {
                let ga = self.slot(grads, *a);
                for ((o, gi), s) in ga.iter_mut().zip(g).zip(y) {
                    *o += gi * s * (1.0 - s);
                }
            }
            Op::Tanh(a) => {
                let ga = self.slot(grads, *a);
                for ((o, gi), t) in ga.iter_mut().zip(g).zip(y) {
                    *o += gi * (1.0 - t * t);
                }
            }
            Op::Relu(a) => {
                let ga = self.slot(grads, *a);
                for ((o, gi), t) in ga.iter_mut().zip(g).zip(y) {
                    if *t > 0.0 {
                        *o += gi;
                    }
                }
            }
            Op::Map { input, deriv } => {
                let xv = self.value(*input);
                let ga = self.slot(grads, *input);
                for (((o, gi), x), yv) in ga.iter_mut().zip(g).zip(xv).zip(y) {
                    *o += gi * deriv(*x, *yv);
                }
            }
            Op::Max { inputs, argmax } => {
                for (k, &v) in inputs.iter().enumerate() {
                    if !self.rg(v) || !argmax.contains(&k) {
                        continue;
                    }
                    let gv = self.slot(grads, v);
                    for (j, &sel) in argmax.iter().enumerate() {
                        if sel == k {
                            gv[j] += g[j];
                        }
                    }
                }
            }
            Op::Concat(inputs) => {
                let mut offset = 0;
                for &v in inputs {
                    let n = self.nodes[v.idx].shape[0];
                    if self.rg(v) {
                        self.add_into(grads, v, &g[offset..offset + n]);
                    }
                    offset += n;
                }
            }
            Op::Sum(a) => {
                let ga = self.slot(grads, *a);
                for o in ga.iter_mut() {
                    *o += g[0];
                }
            }
            Op::SoftmaxCrossEntropy { logits, gold, probs } => {
                let gl = self.slot(grads, *logits);
                for (c, (o, p)) in gl.iter_mut().zip(probs).enumerate() {
                    let onehot = if c == *gold { 1.0 } else { 0.0 };
                    *o += g[0] * (p - onehot);
                }
            }
        }
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> &'g mut Vec<f64> {
        let n = self.value(v).len();
        grads[v.idx].get_or_insert_with(|| vec![0.0; n])
    }

    fn add_into(&self, grads: &mut [Option<Vec<f64>>], v: Var, g: &[f64]) {
        if !self.rg(v) {
            return;
        }
        for (o, gi) in self.slot(grads, v).iter_mut().zip(g) {
            *o += gi;
        }
    }

    /// d root / d v after [`Tape::backward`]; `None` if `v` received no gradient.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.idx).and_then(|g| g.as_deref())
    }

    /// Clears stored gradients so `backward` may run again.
    pub fn reset_grads(&mut self) {
        self.grads.clear();
        self.visits.clear();
        self.backward_done = false;
    }

    /// Per-node visit counts of the last backward pass.
    pub fn visit_counts(&self) -> &[u32] {
        &self.visits
    }

    /// Name of the operation that produced `v`.
    pub fn op_name(&self, v: Var) -> &'static str {
        self.nodes[v.idx].op.kind()
    }

    /// Gradients gathered per parameter (rows from embedding lookups included).
    pub fn param_grads(&self) -> ParamGrads {
        let mut out: Vec<Option<Vec<f64>>> = vec![None; self.params.len()];
        for (node, g) in self.nodes.iter().zip(&self.grads) {
            let Some(g) = g else { continue };
            match node.op {
                Op::Param(pid) => {
                    let slot = out[pid.0].get_or_insert_with(|| vec![0.0; g.len()]);
                    for (o, x) in slot.iter_mut().zip(g) {
                        *o += x;
                    }
                }
                Op::ParamRow(pid, row) => {
                    let t = self.params.get(pid);
                    let cols = t.shape()[1];
                    let slot = out[pid.0].get_or_insert_with(|| vec![0.0; t.numel()]);
                    for (o, x) in slot[row * cols..(row + 1) * cols].iter_mut().zip(g) {
                        *o += x;
                    }
                }
                _ => {}
            }
        }
        ParamGrads { grads: out }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Gradient buffers indexed by [`ParamId`]; `None` means no gradient reached it.
#[derive(Debug, Clone, Default)]
pub struct ParamGrads {
    grads: Vec<Option<Vec<f64>>>,
}

impl ParamGrads {
    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.grads.get(id.0).and_then(|g| g.as_deref())
    }

    pub fn global_norm(&self) -> f64 {
        self.grads.iter().flatten().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            for x in g.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.grads.iter().flatten().all(|g| g.iter().all(|x| x.is_finite()))
    }

    /// Accumulates into each parameter tensor's gradient slot.
    pub fn apply_to(&self, params: &mut ParamSet) -> Result<()> {
        for (i, g) in self.grads.iter().enumerate() {
            if let Some(g) = g {
                params.get_mut(ParamId(i)).accumulate_grad(g)?;
            }
        }
        Ok(())
    }
}

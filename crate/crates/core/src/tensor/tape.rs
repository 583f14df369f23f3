use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use super::params::{Gradients, ParamId, ParamStore};
use super::{dot, matmul_into, Shape, Tensor, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub(crate) usize);

enum Value<'p> {
    Owned(Vec<f64>),
    Borrowed(&'p [f64]),
}

impl Deref for Value<'_> {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        match self {
            Value::Owned(v) => v,
            Value::Borrowed(v) => v,
        }
    }
}

enum Op {
    Leaf,
    MatMul { a: Var, b: Var, m: usize, k: usize, n: usize },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    AddBias { x: Var, bias: Var, cols: usize },
    Mul { a: Var, b: Var },
    Div { a: Var, b: Var },
    MulConst { x: Var, factors: Vec<f64> },
    Scale { x: Var, factor: f64 },
    AddScalar { x: Var },
    Softmax { x: Var, outer: usize, n: usize, inner: usize },
    LogSoftmax { x: Var, outer: usize, n: usize, inner: usize },
    Sigmoid { x: Var },
    Tanh { x: Var },
    Gelu { x: Var },
    Exp { x: Var },
    Log { x: Var },
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Vec<f64>, rstd: Vec<f64> },
    Embedding { table: Var, ids: Vec<usize>, cols: usize },
    Concat { parts: Vec<(Var, usize)>, outer: usize, total: usize, inner: usize },
    Slice { x: Var, outer: usize, extent: usize, start: usize, len: usize, inner: usize },
    Transpose { x: Var, rows: usize, cols: usize },
    MaskedFill { x: Var, mask: Vec<bool> },
    Sum { x: Var, outer: usize, n: usize, inner: usize, mean: bool },
    SumAll { x: Var },
    Gather { x: Var, cols: usize, idx: Vec<usize> },
    Reshape { x: Var },
}

struct Node<'p> {
    shape: Shape,
    value: Value<'p>,
    op: Op,
    requires_grad: bool,
}

/// Records a forward computation for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so every operand precedes the
/// node that consumes it and the reverse sweep in [`Tape::backward`] needs
/// no sorting.
pub struct Tape<'p> {
    store: Option<&'p ParamStore>,
    nodes: Vec<Node<'p>>,
    param_vars: Vec<Option<Var>>,
    grad_enabled: bool,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Tape {
            store: None,
            nodes: Vec::new(),
            param_vars: Vec::new(),
            grad_enabled: true,
        }
    }

    /// A tape whose [`Tape::param`] leaves borrow from `store`.
    pub fn with_params(store: &'p ParamStore) -> Self {
        Tape {
            store: Some(store),
            nodes: Vec::new(),
            param_vars: vec![None; store.len()],
            grad_enabled: true,
        }
    }

    /// Inference mode: values are computed but nothing requires a gradient.
    pub fn no_grad(mut self) -> Self {
        self.grad_enabled = false;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &Shape {
        &self.nodes[v.0].shape
    }

    pub fn dims(&self, v: Var) -> &[usize] {
        self.nodes[v.0].shape.dims()
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        Tensor::new(self.shape(v).clone(), self.value(v).to_vec()).expect("node shape is consistent")
    }

    /// First element of a node; meaningful for scalars.
    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    fn push(&mut self, shape: Shape, value: Vec<f64>, op: Op, inputs_need_grad: bool) -> Var {
        debug_assert_eq!(shape.numel(), value.len());
        let requires_grad = self.grad_enabled && inputs_need_grad;
        let op = if requires_grad { op } else { Op::Leaf };
        self.nodes.push(Node {
            shape,
            value: Value::Owned(value),
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Records an input tensor. `requires_grad` leaves show up in the
    /// [`Gradients`] returned by [`Tape::backward`].
    pub fn leaf(&mut self, t: Tensor, requires_grad: bool) -> Var {
        let requires_grad = requires_grad && self.grad_enabled;
        let Tensor { shape, data } = t;
        self.nodes.push(Node {
            shape,
            value: Value::Owned(data),
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.leaf(t, false)
    }

    /// The stored parameter as a leaf. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars.get(id.0).copied().flatten() {
            return v;
        }
        let store = self.store.expect("tape was not created with a parameter store");
        let t = store.get(id);
        self.nodes.push(Node {
            shape: t.shape().clone(),
            value: Value::Borrowed(t.data()),
            op: Op::Leaf,
            requires_grad: self.grad_enabled,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.0] = Some(v);
        v
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::ShapeMismatch {
                op,
                left: self.shape(a).clone(),
                right: self.shape(b).clone(),
            });
        }
        Ok(())
    }

    fn matrix(&self, op: &'static str, v: Var) -> Result<(usize, usize), TensorError> {
        match self.dims(v) {
            [r, c] => Ok((*r, *c)),
            _ => Err(TensorError::ShapeMismatch {
                op,
                left: self.shape(v).clone(),
                right: Shape::from([0, 0]),
            }),
        }
    }

    fn zip_map(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let out: Vec<f64> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.shape(a).clone();
        let need = self.needs(a) || self.needs(b);
        self.push(shape, out, op, need)
    }

    fn map(&mut self, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let out: Vec<f64> = self.value(x).iter().map(|&v| f(v)).collect();
        let shape = self.shape(x).clone();
        let need = self.needs(x);
        self.push(shape, out, op, need)
    }

    /// `(m x k) · (k x n)`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (m, k) = self.matrix("matmul", a)?;
        let (k2, n) = self.matrix("matmul", b)?;
        if k != k2 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                left: self.shape(a).clone(),
                right: self.shape(b).clone(),
            });
        }
        let mut out = vec![0.0; m * n];
        matmul_into(self.value(a), self.value(b), &mut out, m, k, n);
        let need = self.needs(a) || self.needs(b);
        Ok(self.push(Shape::from([m, n]), out, Op::MatMul { a, b, m, k, n }, need))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("add", a, b)?;
        Ok(self.zip_map(a, b, Op::Add { a, b }, |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("sub", a, b)?;
        Ok(self.zip_map(a, b, Op::Sub { a, b }, |x, y| x - y))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("mul", a, b)?;
        Ok(self.zip_map(a, b, Op::Mul { a, b }, |x, y| x * y))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("div", a, b)?;
        Ok(self.zip_map(a, b, Op::Div { a, b }, |x, y| x / y))
    }

    /// Adds a vector of length `d` to every trailing row of `x` (`... x d`).
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, TensorError> {
        let cols = *self.dims(x).last().unwrap_or(&1);
        if self.dims(bias) != [cols] {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                left: self.shape(x).clone(),
                right: self.shape(bias).clone(),
            });
        }
        let b = self.value(bias);
        let out: Vec<f64> = self
            .value(x)
            .iter()
            .enumerate()
            .map(|(i, &v)| v + b[i % cols])
            .collect();
        let shape = self.shape(x).clone();
        let need = self.needs(x) || self.needs(bias);
        Ok(self.push(shape, out, Op::AddBias { x, bias, cols }, need))
    }

    /// Elementwise product with fixed factors (dropout masks, indicators).
    pub fn mul_const(&mut self, x: Var, factors: Vec<f64>) -> Result<Var, TensorError> {
        if factors.len() != self.value(x).len() {
            return Err(TensorError::ShapeMismatch {
                op: "mul_const",
                left: self.shape(x).clone(),
                right: Shape::from([factors.len()]),
            });
        }
        let out: Vec<f64> = self.value(x).iter().zip(&factors).map(|(a, b)| a * b).collect();
        let shape = self.shape(x).clone();
        let need = self.needs(x);
        Ok(self.push(shape, out, Op::MulConst { x, factors }, need))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        self.map(x, Op::Scale { x, factor }, |v| v * factor)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        self.map(x, Op::AddScalar { x }, |v| v + c)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.map(x, Op::Sigmoid { x }, sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.map(x, Op::Tanh { x }, libm::tanh)
    }

    /// Tanh approximation of the Gaussian error linear unit.
    pub fn gelu(&mut self, x: Var) -> Var {
        self.map(x, Op::Gelu { x }, |v| {
            0.5 * v * (1.0 + libm::tanh(GELU_C * (v + GELU_A * v * v * v)))
        })
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.map(x, Op::Exp { x }, libm::exp)
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.map(x, Op::Log { x }, libm::log)
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var, TensorError> {
        let (outer, n, inner) = self.shape(x).around(axis)?;
        let mut out = self.value(x).to_vec();
        for_each_lane(outer, n, inner, |idx| {
            let max = idx.clone().map(|i| out[i]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for i in idx.clone() {
                out[i] = libm::exp(out[i] - max);
                total += out[i];
            }
            for i in idx {
                out[i] /= total;
            }
        });
        let shape = self.shape(x).clone();
        let need = self.needs(x);
        Ok(self.push(shape, out, Op::Softmax { x, outer, n, inner }, need))
    }

    pub fn log_softmax(&mut self, x: Var, axis: usize) -> Result<Var, TensorError> {
        let (outer, n, inner) = self.shape(x).around(axis)?;
        let mut out = self.value(x).to_vec();
        for_each_lane(outer, n, inner, |idx| {
            let max = idx.clone().map(|i| out[i]).fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = idx.clone().map(|i| libm::exp(out[i] - max)).sum();
            let lse = max + libm::log(total);
            for i in idx {
                out[i] -= lse;
            }
        });
        let shape = self.shape(x).clone();
        let need = self.needs(x);
        Ok(self.push(shape, out, Op::LogSoftmax { x, outer, n, inner }, need))
    }

    /// Normalizes each trailing row to zero mean and unit variance, then
    /// applies the learned gain and bias (both of length `d`).
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var, TensorError> {
        let d = *self.dims(x).last().unwrap_or(&1);
        for p in [gamma, beta] {
            if self.dims(p) != [d] {
                return Err(TensorError::ShapeMismatch {
                    op: "layer_norm",
                    left: self.shape(x).clone(),
                    right: self.shape(p).clone(),
                });
            }
        }
        let xs = self.value(x);
        let rows = xs.len() / d;
        let mut xhat = vec![0.0; xs.len()];
        let mut rstd = vec![0.0; rows];
        for r in 0..rows {
            let row = &xs[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let s = 1.0 / libm::sqrt(var + eps);
            rstd[r] = s;
            for (h, v) in xhat[r * d..(r + 1) * d].iter_mut().zip(row) {
                *h = (v - mean) * s;
            }
        }
        let g = self.value(gamma);
        let b = self.value(beta);
        let out: Vec<f64> = xhat
            .iter()
            .enumerate()
            .map(|(i, h)| h * g[i % d] + b[i % d])
            .collect();
        let shape = self.shape(x).clone();
        let need = self.needs(x) || self.needs(gamma) || self.needs(beta);
        Ok(self.push(shape, out, Op::LayerNorm { x, gamma, beta, xhat, rstd }, need))
    }

    /// Rows of a `V x d` table picked by `ids`, giving `len(ids) x d`.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var, TensorError> {
        let (vocab, cols) = self.matrix("embedding", table)?;
        let t = self.value(table);
        let mut out = Vec::with_capacity(ids.len() * cols);
        for &id in ids {
            if id >= vocab {
                return Err(TensorError::IndexOutOfRange {
                    op: "embedding",
                    index: id,
                    extent: vocab,
                });
            }
            out.extend_from_slice(&t[id * cols..(id + 1) * cols]);
        }
        let need = self.needs(table);
        Ok(self.push(
            Shape::from([ids.len(), cols]),
            out,
            Op::Embedding {
                table,
                ids: ids.to_vec(),
                cols,
            },
            need,
        ))
    }

    /// Joins tensors along `axis`; all other extents must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, TensorError> {
        let first = *parts.first().ok_or(TensorError::EmptyTape)?;
        let base = self.shape(first).clone();
        let (outer, _, inner) = base.around(axis)?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.shape(p);
            let ok = s.rank() == base.rank()
                && s.dims().iter().zip(base.dims()).enumerate().all(|(i, (a, b))| i == axis || a == b);
            if !ok {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    left: base.clone(),
                    right: s.clone(),
                });
            }
            widths.push((p, s.dims()[axis]));
        }
        let total: usize = widths.iter().map(|w| w.1).sum();
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &(p, w) in &widths {
                let v = self.value(p);
                out.extend_from_slice(&v[o * w * inner..(o + 1) * w * inner]);
            }
        }
        let mut dims = base.0.clone();
        dims[axis] = total;
        let need = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(
            Shape(dims),
            out,
            Op::Concat {
                parts: widths,
                outer,
                total,
                inner,
            },
            need,
        ))
    }

    /// `len` consecutive entries along `axis`, starting at `start`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var, TensorError> {
        let (outer, extent, inner) = self.shape(x).around(axis)?;
        if start + len > extent {
            return Err(TensorError::IndexOutOfRange {
                op: "slice",
                index: start + len,
                extent,
            });
        }
        let v = self.value(x);
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * extent * inner + start * inner;
            out.extend_from_slice(&v[base..base + len * inner]);
        }
        let mut dims = self.shape(x).0.clone();
        dims[axis] = len;
        let need = self.needs(x);
        Ok(self.push(
            Shape(dims),
            out,
            Op::Slice {
                x,
                outer,
                extent,
                start,
                len,
                inner,
            },
            need,
        ))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var, TensorError> {
        let (rows, cols) = self.matrix("transpose", x)?;
        let v = self.value(x);
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                out[c * rows + r] = v[r * cols + c];
            }
        }
        let need = self.needs(x);
        Ok(self.push(Shape::from([cols, rows]), out, Op::Transpose { x, rows, cols }, need))
    }

    /// Replaces entries where `mask` is set by `value`; those entries pass
    /// no gradient back.
    pub fn masked_fill(&mut self, x: Var, mask: &[bool], value: f64) -> Result<Var, TensorError> {
        if mask.len() != self.value(x).len() {
            return Err(TensorError::ShapeMismatch {
                op: "masked_fill",
                left: self.shape(x).clone(),
                right: Shape::from([mask.len()]),
            });
        }
        let out: Vec<f64> = self
            .value(x)
            .iter()
            .zip(mask)
            .map(|(&v, &m)| if m { value } else { v })
            .collect();
        let shape = self.shape(x).clone();
        let need = self.needs(x);
        Ok(self.push(
            shape,
            out,
            Op::MaskedFill {
                x,
                mask: mask.to_vec(),
            },
            need,
        ))
    }

    fn reduce(&mut self, x: Var, axis: usize, mean: bool) -> Result<Var, TensorError> {
        let (outer, n, inner) = self.shape(x).around(axis)?;
        let v = self.value(x);
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for t in 0..n {
                let src = &v[(o * n + t) * inner..(o * n + t + 1) * inner];
                for (d, s) in out[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
        if mean {
            for d in &mut out {
                *d /= n as f64;
            }
        }
        let mut dims = self.shape(x).0.clone();
        dims.remove(axis);
        let need = self.needs(x);
        Ok(self.push(
            Shape(dims),
            out,
            Op::Sum {
                x,
                outer,
                n,
                inner,
                mean,
            },
            need,
        ))
    }

    /// Sum along `axis`, dropping it from the shape.
    pub fn sum(&mut self, x: Var, axis: usize) -> Result<Var, TensorError> {
        self.reduce(x, axis, false)
    }

    pub fn mean(&mut self, x: Var, axis: usize) -> Result<Var, TensorError> {
        self.reduce(x, axis, true)
    }

    /// Sum of every element as a rank-0 scalar.
    pub fn sum_all(&mut self, x: Var) -> Var {
        let total = self.value(x).iter().sum();
        let need = self.needs(x);
        self.push(Shape::default(), vec![total], Op::SumAll { x }, need)
    }

    /// Picks `x[r, idx[r]]` from each row of a matrix, giving a vector.
    pub fn gather(&mut self, x: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let (rows, cols) = self.matrix("gather", x)?;
        if idx.len() != rows {
            return Err(TensorError::ShapeMismatch {
                op: "gather",
                left: self.shape(x).clone(),
                right: Shape::from([idx.len()]),
            });
        }
        let v = self.value(x);
        let mut out = Vec::with_capacity(rows);
        for (r, &c) in idx.iter().enumerate() {
            if c >= cols {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather",
                    index: c,
                    extent: cols,
                });
            }
            out.push(v[r * cols + c]);
        }
        let need = self.needs(x);
        Ok(self.push(
            Shape::from([rows]),
            out,
            Op::Gather {
                x,
                cols,
                idx: idx.to_vec(),
            },
            need,
        ))
    }

    pub fn reshape(&mut self, x: Var, shape: impl Into<Shape>) -> Result<Var, TensorError> {
        let shape = shape.into();
        if shape.numel() != self.value(x).len() {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                left: self.shape(x).clone(),
                right: shape,
            });
        }
        let out = self.value(x).to_vec();
        let need = self.needs(x);
        Ok(self.push(shape, out, Op::Reshape { x }, need))
    }

    /// Reverse sweep from a scalar `loss`. Consumes the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients, TensorError> {
        if self.nodes.is_empty() {
            return Err(TensorError::EmptyTape);
        }
        let loss_node = &self.nodes[loss.0];
        if loss_node.value.len() != 1 {
            return Err(TensorError::NonScalarLoss(loss_node.shape.clone()));
        }
        let nodes = self.nodes;
        let mut grads: Vec<Option<Vec<f64>>> = (0..nodes.len()).map(|_| None).collect();
        if nodes[loss.0].requires_grad {
            grads[loss.0] = Some(vec![1.0]);
        }

        for i in (0..=loss.0).rev() {
            let node = &nodes[i];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let out: &[f64] = &node.value;
            let mut acc = Accum {
                nodes: &nodes,
                grads: &mut grads,
            };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul { a, b, m, k, n } => {
                    let (m, k, n) = (*m, *k, *n);
                    let av: &[f64] = &nodes[a.0].value;
                    let bv: &[f64] = &nodes[b.0].value;
                    acc.with(*a, |ga| {
                        for i in 0..m {
                            let g_row = &g[i * n..(i + 1) * n];
                            for p in 0..k {
                                ga[i * k + p] += dot(g_row, &bv[p * n..(p + 1) * n]);
                            }
                        }
                    });
                    acc.with(*b, |gb| {
                        for i in 0..m {
                            let g_row = &g[i * n..(i + 1) * n];
                            for p in 0..k {
                                let aip = av[i * k + p];
                                if aip == 0.0 {
                                    continue;
                                }
                                for (d, gv) in gb[p * n..(p + 1) * n].iter_mut().zip(g_row) {
                                    *d += aip * gv;
                                }
                            }
                        }
                    });
                }
                Op::Add { a, b } => {
                    acc.with(*a, |ga| add_into(ga, &g));
                    acc.with(*b, |gb| add_into(gb, &g));
                }
                Op::Sub { a, b } => {
                    acc.with(*a, |ga| add_into(ga, &g));
                    acc.with(*b, |gb| {
                        for (d, s) in gb.iter_mut().zip(&g) {
                            *d -= s;
                        }
                    });
                }
                Op::AddBias { x, bias, cols } => {
                    acc.with(*x, |gx| add_into(gx, &g));
                    acc.with(*bias, |gb| {
                        for (j, s) in g.iter().enumerate() {
                            gb[j % cols] += s;
                        }
                    });
                }
                Op::Mul { a, b } => {
                    let av: &[f64] = &nodes[a.0].value;
                    let bv: &[f64] = &nodes[b.0].value;
                    acc.with(*a, |ga| {
                        for ((d, s), y) in ga.iter_mut().zip(&g).zip(bv) {
                            *d += s * y;
                        }
                    });
                    acc.with(*b, |gb| {
                        for ((d, s), x) in gb.iter_mut().zip(&g).zip(av) {
                            *d += s * x;
                        }
                    });
                }
                Op::Div { a, b } => {
                    let av: &[f64] = &nodes[a.0].value;
                    let bv: &[f64] = &nodes[b.0].value;
                    acc.with(*a, |ga| {
                        for ((d, s), y) in ga.iter_mut().zip(&g).zip(bv) {
                            *d += s / y;
                        }
                    });
                    acc.with(*b, |gb| {
                        for (((d, s), x), y) in gb.iter_mut().zip(&g).zip(av).zip(bv) {
                            *d -= s * x / (y * y);
                        }
                    });
                }
                Op::MulConst { x, factors } => acc.with(*x, |gx| {
                    for ((d, s), f) in gx.iter_mut().zip(&g).zip(factors) {
                        *d += s * f;
                    }
                }),
                Op::Scale { x, factor } => acc.with(*x, |gx| {
                    for (d, s) in gx.iter_mut().zip(&g) {
                        *d += s * factor;
                    }
                }),
                Op::AddScalar { x } | Op::Reshape { x } => acc.with(*x, |gx| add_into(gx, &g)),
                Op::Softmax { x, outer, n, inner } => acc.with(*x, |gx| {
                    for_each_lane(*outer, *n, *inner, |idx| {
                        let s: f64 = idx.clone().map(|i| g[i] * out[i]).sum();
                        for i in idx {
                            gx[i] += out[i] * (g[i] - s);
                        }
                    });
                }),
                Op::LogSoftmax { x, outer, n, inner } => acc.with(*x, |gx| {
                    for_each_lane(*outer, *n, *inner, |idx| {
                        let s: f64 = idx.clone().map(|i| g[i]).sum();
                        for i in idx {
                            gx[i] += g[i] - libm::exp(out[i]) * s;
                        }
                    });
                }),
                Op::Sigmoid { x } => acc.with(*x, |gx| {
                    for ((d, s), y) in gx.iter_mut().zip(&g).zip(out) {
                        *d += s * y * (1.0 - y);
                    }
                }),
                Op::Tanh { x } => acc.with(*x, |gx| {
                    for ((d, s), y) in gx.iter_mut().zip(&g).zip(out) {
                        *d += s * (1.0 - y * y);
                    }
                }),
                Op::Gelu { x } => {
                    let xv: &[f64] = &nodes[x.0].value;
                    acc.with(*x, |gx| {
                        for ((d, s), &v) in gx.iter_mut().zip(&g).zip(xv) {
                            let t = libm::tanh(GELU_C * (v + GELU_A * v * v * v));
                            let dt = (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * v * v);
                            *d += s * (0.5 * (1.0 + t) + 0.5 * v * dt);
                        }
                    });
                }
                Op::Exp { x } => acc.with(*x, |gx| {
                    for ((d, s), y) in gx.iter_mut().zip(&g).zip(out) {
                        *d += s * y;
                    }
                }),
                Op::Log { x } => {
                    let xv: &[f64] = &nodes[x.0].value;
                    acc.with(*x, |gx| {
                        for ((d, s), v) in gx.iter_mut().zip(&g).zip(xv) {
                            *d += s / v;
                        }
                    });
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    rstd,
                } => {
                    let d = nodes[gamma.0].value.len();
                    let gam: &[f64] = &nodes[gamma.0].value;
                    acc.with(*gamma, |gg| {
                        for (j, (s, h)) in g.iter().zip(xhat).enumerate() {
                            gg[j % d] += s * h;
                        }
                    });
                    acc.with(*beta, |gb| {
                        for (j, s) in g.iter().enumerate() {
                            gb[j % d] += s;
                        }
                    });
                    acc.with(*x, |gx| {
                        for (r, &s) in rstd.iter().enumerate() {
                            let span = r * d..(r + 1) * d;
                            let gr = &g[span.clone()];
                            let hr = &xhat[span.clone()];
                            let mut m1 = 0.0;
                            let mut m2 = 0.0;
                            for j in 0..d {
                                let gh = gr[j] * gam[j];
                                m1 += gh;
                                m2 += gh * hr[j];
                            }
                            m1 /= d as f64;
                            m2 /= d as f64;
                            for j in 0..d {
                                gx[r * d + j] += s * (gr[j] * gam[j] - m1 - hr[j] * m2);
                            }
                        }
                    });
                }
                Op::Embedding { table, ids, cols } => acc.with(*table, |gt| {
                    for (r, &id) in ids.iter().enumerate() {
                        add_into(&mut gt[id * cols..(id + 1) * cols], &g[r * cols..(r + 1) * cols]);
                    }
                }),
                Op::Concat {
                    parts,
                    outer,
                    total,
                    inner,
                } => {
                    let mut offset = 0;
                    for &(p, w) in parts {
                        acc.with(p, |gp| {
                            for o in 0..*outer {
                                let src = o * total * inner + offset * inner;
                                add_into(&mut gp[o * w * inner..(o + 1) * w * inner], &g[src..src + w * inner]);
                            }
                        });
                        offset += w;
                    }
                }
                Op::Slice {
                    x,
                    outer,
                    extent,
                    start,
                    len,
                    inner,
                } => acc.with(*x, |gx| {
                    for o in 0..*outer {
                        let dst = o * extent * inner + start * inner;
                        add_into(&mut gx[dst..dst + len * inner], &g[o * len * inner..(o + 1) * len * inner]);
                    }
                }),
                Op::Transpose { x, rows, cols } => acc.with(*x, |gx| {
                    for r in 0..*rows {
                        for c in 0..*cols {
                            gx[r * cols + c] += g[c * rows + r];
                        }
                    }
                }),
                Op::MaskedFill { x, mask } => acc.with(*x, |gx| {
                    for ((d, s), &m) in gx.iter_mut().zip(&g).zip(mask) {
                        if !m {
                            *d += s;
                        }
                    }
                }),
                Op::Sum {
                    x,
                    outer,
                    n,
                    inner,
                    mean,
                } => {
                    let f = if *mean { 1.0 / *n as f64 } else { 1.0 };
                    acc.with(*x, |gx| {
                        for o in 0..*outer {
                            for t in 0..*n {
                                let dst = (o * n + t) * inner;
                                for (d, s) in gx[dst..dst + inner].iter_mut().zip(&g[o * inner..(o + 1) * inner]) {
                                    *d += s * f;
                                }
                            }
                        }
                    });
                }
                Op::SumAll { x } => acc.with(*x, |gx| {
                    for d in gx.iter_mut() {
                        *d += g[0];
                    }
                }),
                Op::Gather { x, cols, idx } => acc.with(*x, |gx| {
                    for (r, &c) in idx.iter().enumerate() {
                        gx[r * cols + c] += g[r];
                    }
                }),
            }
        }

        let mut param_nodes = vec![None; self.param_vars.len()];
        for (p, v) in self.param_vars.iter().enumerate() {
            param_nodes[p] = v.map(|v| v.0);
        }
        // keep only leaf gradients
        for (i, n) in nodes.iter().enumerate() {
            if !matches!(n.op, Op::Leaf) || !n.requires_grad {
                grads[i] = None;
            } else if grads[i].is_none() {
                grads[i] = Some(vec![0.0; n.value.len()]);
            }
        }
        Ok(Gradients {
            leaves: grads,
            param_nodes,
        })
    }
}

struct Accum<'a, 'p> {
    nodes: &'a [Node<'p>],
    grads: &'a mut [Option<Vec<f64>>],
}

impl Accum<'_, '_> {
    fn with(&mut self, v: Var, f: impl FnOnce(&mut [f64])) {
        let node = &self.nodes[v.0];
        if !node.requires_grad {
            return;
        }
        let slot = self.grads[v.0].get_or_insert_with(|| vec![0.0; node.value.len()]);
        f(slot);
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Visits every 1-D lane along the reduced axis as an index iterator.
fn for_each_lane(
    outer: usize,
    n: usize,
    inner: usize,
    mut f: impl FnMut(core::iter::StepBy<core::ops::Range<usize>>),
) {
    for o in 0..outer {
        for j in 0..inner {
            let start = o * n * inner + j;
            f((start..start + n * inner).step_by(inner));
        }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + libm::exp(-v))
    } else {
        let e = libm::exp(v);
        e / (1.0 + e)
    }
}

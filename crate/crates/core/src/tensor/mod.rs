//! Dense `f64` tensors and a reverse-mode gradient tape.
//!
//! Values live in row-major [`Tensor`]s. A [`Tape`] records every operation
//! applied during a forward pass; [`Tape::backward`] walks the record in
//! reverse and returns [`Gradients`] for every leaf that asked for one.
//! Learned weights sit in a [`ParamStore`] and enter a tape as borrowed leaves,
//! so a forward pass never copies the model.
//!
//! Broadcasting is limited to adding a trailing-dimension bias
//! ([`Tape::add_bias`]); every other binary op wants identical shapes.

mod gradcheck;
mod params;
mod tape;
#[cfg(test)]
mod tests;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport, GroupReport};
pub use params::{Gradients, ParamGrads, ParamId, ParamStore};
pub use tape::{Tape, Var};

/// Errors raised by tensor construction and tape operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    ShapeMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },
    #[error("shape {shape} does not hold {len} elements")]
    DataLength { shape: Shape, len: usize },
    #[error("axis {axis} out of range for shape {shape}")]
    BadAxis { axis: usize, shape: Shape },
    #[error("index {index} out of range for extent {extent} in {op}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        extent: usize,
    },
    #[error("backward needs a scalar loss, got shape {0}")]
    NonScalarLoss(Shape),
    #[error("tape is empty")]
    EmptyTape,
}

/// A tensor shape. Displays as `[2, 3]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Shape(pub Vec<usize>);

impl Shape {
    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Splits the shape around `axis` into `(outer, extent, inner)` element
    /// counts, which is all a reduction along one axis needs.
    pub(crate) fn around(&self, axis: usize) -> Result<(usize, usize, usize), TensorError> {
        if axis >= self.0.len() {
            return Err(TensorError::BadAxis {
                axis,
                shape: self.clone(),
            });
        }
        let outer = self.0[..axis].iter().product();
        let inner = self.0[axis + 1..].iter().product();
        Ok((outer, self.0[axis], inner))
    }
}

impl From<&[usize]> for Shape {
    fn from(dims: &[usize]) -> Self {
        Shape(dims.to_vec())
    }
}

impl<const N: usize> From<[usize; N]> for Shape {
    fn from(dims: [usize; N]) -> Self {
        Shape(dims.to_vec())
    }
}

impl From<Vec<usize>> for Shape {
    fn from(dims: Vec<usize>) -> Self {
        Shape(dims)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str("]")
    }
}

/// Row-major dense array of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: impl Into<Shape>, data: Vec<f64>) -> Result<Self, TensorError> {
        let shape = shape.into();
        if shape.numel() != data.len() {
            return Err(TensorError::DataLength {
                shape,
                len: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: impl Into<Shape>) -> Self {
        let shape = shape.into();
        let data = vec![0.0; shape.numel()];
        Tensor { shape, data }
    }

    pub fn filled(shape: impl Into<Shape>, value: f64) -> Self {
        let shape = shape.into();
        let data = vec![value; shape.numel()];
        Tensor { shape, data }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: Shape(Vec::new()),
            data: vec![value],
        }
    }

    pub fn from_fn(shape: impl Into<Shape>, mut f: impl FnMut(usize) -> f64) -> Self {
        let shape = shape.into();
        let data = (0..shape.numel()).map(&mut f).collect();
        Tensor { shape, data }
    }

    pub fn identity(n: usize) -> Self {
        Tensor::from_fn([n, n], |i| if i / n == i % n { 1.0 } else { 0.0 })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        &self.shape.0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row `i` of a rank-2 tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let cols = *self.shape.0.last().unwrap_or(&1);
        &self.data[i * cols..(i + 1) * cols]
    }
}

/// Plain (untracked) matrix product of an `m x k` and a `k x n` slice.
pub(crate) fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &aip) in a_row.iter().enumerate() {
            if aip == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod shape_tests {
    use super::*;

    #[test]
    fn shape_display_lists_extents() {
        let s = Shape::from([2, 3, 4]);
        assert_eq!(alloc::format!("{s}"), "[2, 3, 4]");
        assert_eq!(s.numel(), 24);
        assert_eq!(s.around(1).unwrap(), (2, 3, 4));
    }

    #[test]
    fn new_rejects_wrong_length() {
        let err = Tensor::new([2, 2], vec![1.0; 3]).unwrap_err();
        assert!(matches!(err, TensorError::DataLength { len: 3, .. }));
    }

    #[test]
    fn scalar_has_one_element() {
        let t = Tensor::scalar(4.0);
        assert_eq!(t.len(), 1);
        assert_eq!(t.dims(), &[] as &[usize]);
    }
}

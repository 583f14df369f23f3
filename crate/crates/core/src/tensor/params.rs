use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{Tensor, TensorError};

/// Handle to one named tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Ordered collection of named, trainable tensors.
///
/// Insertion order is the canonical order: checkpoints, gradient vectors and
/// optimizer moments are all laid out by it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Overwrites a parameter from an external source (checkpoint import).
    /// The replacement must keep the registered shape.
    pub fn assign(&mut self, name: &str, tensor: Tensor) -> Result<(), TensorError> {
        let Some(id) = self.find(name) else {
            return Err(TensorError::IndexOutOfRange {
                op: "assign",
                index: usize::MAX,
                extent: self.len(),
            });
        };
        let current = &self.tensors[id.0];
        if current.shape() != tensor.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "assign",
                left: current.shape().clone(),
                right: tensor.shape().clone(),
            });
        }
        self.tensors[id.0] = tensor;
        Ok(())
    }
}

/// Result of [`super::Tape::backward`]: gradients of every leaf that required one.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) leaves: Vec<Option<Vec<f64>>>,
    pub(crate) param_nodes: Vec<Option<usize>>,
}

impl Gradients {
    /// Gradient with respect to a leaf created on the tape, if it was reached.
    pub fn wrt(&self, var: super::Var) -> Option<&[f64]> {
        self.leaves.get(var.0).and_then(|g| g.as_deref())
    }

    /// Gradient with respect to a parameter; `None` when the parameter did not
    /// take part in the loss.
    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        let node = (*self.param_nodes.get(id.0)?)?;
        self.leaves[node].as_deref()
    }

    /// Dense per-parameter gradients laid out like `store`, zero where unused.
    pub fn into_param_grads(mut self, store: &ParamStore) -> ParamGrads {
        let grads = store
            .ids()
            .map(|id| {
                let node = self.param_nodes.get(id.0).copied().flatten();
                match node.and_then(|n| self.leaves[n].take()) {
                    Some(g) => g,
                    None => vec![0.0; store.get(id).len()],
                }
            })
            .collect();
        ParamGrads { grads }
    }
}

/// Dense gradients aligned with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub grads: Vec<Vec<f64>>,
}

impl ParamGrads {
    pub fn zeros(store: &ParamStore) -> Self {
        ParamGrads {
            grads: store.ids().map(|id| vec![0.0; store.get(id).len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            *g *= factor;
        }
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.grads.iter().flatten().map(|g| g * g).sum())
    }
}

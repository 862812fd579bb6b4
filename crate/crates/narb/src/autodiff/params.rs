//! Named, ordered parameter collections shared by all models.

use super::{NodeId, Tape, Tensor};
use rand::Rng;
use std::collections::HashMap;

/// Ordered map from parameter name to tensor. Order is insertion order and is
/// what the optimizer state and checkpoint format align to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor) {
        assert!(
            !self.index.contains_key(name),
            "duplicate parameter {name}"
        );
        self.index.insert(name.to_string(), self.tensors.len());
        self.names.push(name.to_string());
        self.tensors.push(tensor);
    }

    /// Glorot-uniform initialized matrix: uniform(-a, a), a = sqrt(6/(fan_in+fan_out)).
    pub fn insert_glorot<R: Rng>(&mut self, name: &str, rows: usize, cols: usize, rng: &mut R) {
        let a = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect();
        self.insert(name, Tensor::matrix(rows, cols, data));
    }

    pub fn insert_zero_vector(&mut self, name: &str, len: usize) {
        self.insert(name, Tensor::vector(vec![0.0; len]));
    }

    pub fn get(&self, name: &str) -> &Tensor {
        &self.tensors[*self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))]
    }

    pub fn try_get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &mut self.tensors[i]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total scalar count across all parameters.
    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter_mut())
    }

    /// Registers every parameter as a tracked leaf on the tape.
    pub fn register(&self, tape: &mut Tape) -> TapeParams {
        let ids = self
            .tensors
            .iter()
            .map(|t| tape.param(t.clone()))
            .collect();
        TapeParams {
            ids,
            index: self.index.clone(),
        }
    }

    /// Gradients of the last backward pass, aligned to parameter order.
    /// Untracked or unused parameters yield zero gradients.
    pub fn collect_grads(&self, tape: &Tape, tp: &TapeParams) -> Vec<Tensor> {
        self.tensors
            .iter()
            .zip(&tp.ids)
            .map(|(t, &id)| {
                tape.grad(id)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(t.dims()))
            })
            .collect()
    }
}

/// Per-tape node ids of a registered [`ParamSet`].
pub struct TapeParams {
    ids: Vec<NodeId>,
    index: HashMap<String, usize>,
}

impl TapeParams {
    pub fn id(&self, name: &str) -> NodeId {
        self.ids[*self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))]
    }
}

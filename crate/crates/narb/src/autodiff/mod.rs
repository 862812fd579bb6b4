//! Minimal dense-tensor reverse-mode differentiation with Adam, sufficient for
//! every model in this crate.
//!
//! Values live on a [`Tape`]: a topologically ordered record of executed
//! operations. Building an expression records its node; [`Tape::backward`]
//! walks the record once in reverse and accumulates gradients into every
//! tracked leaf. Tensors are 64-bit and at most two-dimensional.

mod adam;
mod checkpoint;
mod gradcheck;
mod params;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::{grad_check, max_rel_error};
pub use params::{ParamSet, TapeParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("embedding index {index} out of range for table with {rows} rows")]
    EmbedIndex { index: usize, rows: usize },
    #[error("backward requires a tracked scalar, got shape {0:?}")]
    NotScalarLoss(Vec<usize>),
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, AutodiffError>;

/// Dense 64-bit tensor, vector or matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn vector(data: Vec<f64>) -> Self {
        let dims = vec![data.len()];
        Tensor { dims, data }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Tensor {
            dims: vec![rows, cols],
            data,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::vector(vec![v])
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Tensor {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_vector(&self) -> bool {
        self.dims.len() == 1
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn item(&self) -> f64 {
        assert!(self.is_scalar(), "item() on non-scalar tensor");
        self.data[0]
    }

    fn rows(&self) -> usize {
        self.dims[0]
    }

    fn cols(&self) -> usize {
        self.dims[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Matmul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// Vector times a one-element vector (differentiable in both).
    BroadcastMul(NodeId, NodeId),
    Concat(Vec<NodeId>),
    Slice(NodeId, usize, usize),
    Relu(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    EmbedLookup(NodeId, usize),
    SoftmaxCrossEntropy(NodeId, usize),
    Softmax(NodeId),
    Sum(NodeId),
    Scale(NodeId, f64),
}

struct Node {
    op: Op,
    value: Tensor,
    grad: Option<Tensor>,
    tracked: bool,
}

/// Record of one forward computation; owns all intermediate values.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, op: Op, value: Tensor, tracked: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            grad: None,
            tracked,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Constant input; backward will not produce a gradient for it.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value, false)
    }

    /// Tracked input; after backward its gradient is available via [`Tape::grad`].
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value, true)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of the last backward pass, `None` for untracked nodes.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].grad.as_ref()
    }

    fn tracked(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].tracked)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        let value = match (ta.dims.len(), tb.dims.len()) {
            (2, 1) => {
                if ta.cols() != tb.len() {
                    return Err(shape("matmul", format!("{:?} x {:?}", ta.dims, tb.dims)));
                }
                let mut out = vec![0.0; ta.rows()];
                for r in 0..ta.rows() {
                    let row = &ta.data[r * ta.cols()..(r + 1) * ta.cols()];
                    out[r] = row.iter().zip(&tb.data).map(|(x, y)| x * y).sum();
                }
                Tensor::vector(out)
            }
            (2, 2) => {
                if ta.cols() != tb.rows() {
                    return Err(shape("matmul", format!("{:?} x {:?}", ta.dims, tb.dims)));
                }
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                let mut out = vec![0.0; m * n];
                for r in 0..m {
                    for kk in 0..k {
                        let av = ta.data[r * k + kk];
                        for c in 0..n {
                            out[r * n + c] += av * tb.data[kk * n + c];
                        }
                    }
                }
                Tensor::matrix(m, n, out)
            }
            (1, 1) => {
                if ta.len() != tb.len() {
                    return Err(shape("matmul", format!("{:?} x {:?}", ta.dims, tb.dims)));
                }
                Tensor::scalar(ta.data.iter().zip(&tb.data).map(|(x, y)| x * y).sum())
            }
            _ => return Err(shape("matmul", format!("{:?} x {:?}", ta.dims, tb.dims))),
        };
        let tracked = self.tracked(&[a, b]);
        Ok(self.push(Op::Matmul(a, b), value, tracked))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.dims != tb.dims {
            return Err(shape("add", format!("{:?} + {:?}", ta.dims, tb.dims)));
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x + y).collect();
        let value = Tensor {
            dims: ta.dims.clone(),
            data,
        };
        let tracked = self.tracked(&[a, b]);
        Ok(self.push(Op::Add(a, b), value, tracked))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.dims != tb.dims {
            return Err(shape("mul", format!("{:?} * {:?}", ta.dims, tb.dims)));
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x * y).collect();
        let value = Tensor {
            dims: ta.dims.clone(),
            data,
        };
        let tracked = self.tracked(&[a, b]);
        Ok(self.push(Op::Mul(a, b), value, tracked))
    }

    /// Multiplies a vector elementwise by a one-element vector.
    pub fn broadcast_mul(&mut self, v: NodeId, s: NodeId) -> Result<NodeId> {
        let (tv, ts) = (self.value(v), self.value(s));
        if !ts.is_scalar() {
            return Err(shape(
                "broadcast_mul",
                format!("scalar side has shape {:?}", ts.dims),
            ));
        }
        let c = ts.data[0];
        let value = Tensor {
            dims: tv.dims.clone(),
            data: tv.data.iter().map(|x| x * c).collect(),
        };
        let tracked = self.tracked(&[v, s]);
        Ok(self.push(Op::BroadcastMul(v, s), value, tracked))
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(shape("concat", "no inputs".into()));
        }
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if !t.is_vector() {
                return Err(shape("concat", format!("non-vector input {:?}", t.dims)));
            }
            data.extend_from_slice(&t.data);
        }
        let tracked = self.tracked(parts);
        Ok(self.push(Op::Concat(parts.to_vec()), Tensor::vector(data), tracked))
    }

    pub fn slice(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let t = self.value(a);
        if !t.is_vector() || end > t.len() || start > end {
            return Err(shape(
                "slice",
                format!("range {start}..{end} of shape {:?}", t.dims),
            ));
        }
        let value = Tensor::vector(t.data[start..end].to_vec());
        let tracked = self.tracked(&[a]);
        Ok(self.push(Op::Slice(a, start, end), value, tracked))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let value = Tensor {
            dims: t.dims.clone(),
            data: t.data.iter().map(|&x| x.max(0.0)).collect(),
        };
        let tracked = self.tracked(&[a]);
        self.push(Op::Relu(a), value, tracked)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let value = Tensor {
            dims: t.dims.clone(),
            data: t.data.iter().map(|&x| sigmoid(x)).collect(),
        };
        let tracked = self.tracked(&[a]);
        self.push(Op::Sigmoid(a), value, tracked)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let value = Tensor {
            dims: t.dims.clone(),
            data: t.data.iter().map(|&x| x.tanh()).collect(),
        };
        let tracked = self.tracked(&[a]);
        self.push(Op::Tanh(a), value, tracked)
    }

    /// Row lookup into an embedding matrix.
    pub fn embed_lookup(&mut self, table: NodeId, index: usize) -> Result<NodeId> {
        let t = self.value(table);
        if t.dims.len() != 2 {
            return Err(shape("embed_lookup", format!("table shape {:?}", t.dims)));
        }
        if index >= t.rows() {
            return Err(AutodiffError::EmbedIndex {
                index,
                rows: t.rows(),
            });
        }
        let cols = t.cols();
        let value = Tensor::vector(t.data[index * cols..(index + 1) * cols].to_vec());
        let tracked = self.tracked(&[table]);
        Ok(self.push(Op::EmbedLookup(table, index), value, tracked))
    }

    /// Scalar cross-entropy of a logit vector against a target class index.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, target: usize) -> Result<NodeId> {
        let t = self.value(logits);
        if !t.is_vector() || target >= t.len() {
            return Err(shape(
                "softmax_cross_entropy",
                format!("target {target} for shape {:?}", t.dims),
            ));
        }
        let probs = softmax(&t.data);
        let loss = -probs[target].max(1e-300).ln();
        let tracked = self.tracked(&[logits]);
        Ok(self.push(
            Op::SoftmaxCrossEntropy(logits, target),
            Tensor::scalar(loss),
            tracked,
        ))
    }

    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId> {
        let t = self.value(a);
        if !t.is_vector() {
            return Err(shape("softmax", format!("shape {:?}", t.dims)));
        }
        let value = Tensor::vector(softmax(&t.data));
        let tracked = self.tracked(&[a]);
        Ok(self.push(Op::Softmax(a), value, tracked))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let value = Tensor::scalar(t.data.iter().sum());
        let tracked = self.tracked(&[a]);
        self.push(Op::Sum(a), value, tracked)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let t = self.value(a);
        let value = Tensor {
            dims: t.dims.clone(),
            data: t.data.iter().map(|x| x * c).collect(),
        };
        let tracked = self.tracked(&[a]);
        self.push(Op::Scale(a, c), value, tracked)
    }

    /// Reverse pass from a tracked scalar loss. Gradients accumulate
    /// additively across all uses of a node.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        {
            let node = &self.nodes[loss.0];
            if !node.value.is_scalar() || !node.tracked {
                return Err(AutodiffError::NotScalarLoss(node.value.dims.clone()));
            }
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[loss.0].grad = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].tracked {
                continue;
            }
            let Some(out_grad) = self.nodes[i].grad.clone() else {
                continue;
            };
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::Matmul(a, b) => {
                    let ta = self.nodes[a.0].value.clone();
                    let tb = self.nodes[b.0].value.clone();
                    match (ta.dims.len(), tb.dims.len()) {
                        (2, 1) => {
                            // y = A x : dA = g xT, dx = AT g
                            let (r, c) = (ta.rows(), ta.cols());
                            let mut da = vec![0.0; r * c];
                            let mut dx = vec![0.0; c];
                            for rr in 0..r {
                                let g = out_grad.data[rr];
                                for cc in 0..c {
                                    da[rr * c + cc] += g * tb.data[cc];
                                    dx[cc] += g * ta.data[rr * c + cc];
                                }
                            }
                            self.accumulate(a, &da);
                            self.accumulate(b, &dx);
                        }
                        (2, 2) => {
                            let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                            let mut da = vec![0.0; m * k];
                            let mut db = vec![0.0; k * n];
                            for r in 0..m {
                                for c in 0..n {
                                    let g = out_grad.data[r * n + c];
                                    for kk in 0..k {
                                        da[r * k + kk] += g * tb.data[kk * n + c];
                                        db[kk * n + c] += g * ta.data[r * k + kk];
                                    }
                                }
                            }
                            self.accumulate(a, &da);
                            self.accumulate(b, &db);
                        }
                        (1, 1) => {
                            let g = out_grad.data[0];
                            let da: Vec<f64> = tb.data.iter().map(|y| g * y).collect();
                            let db: Vec<f64> = ta.data.iter().map(|x| g * x).collect();
                            self.accumulate(a, &da);
                            self.accumulate(b, &db);
                        }
                        _ => unreachable!(),
                    }
                }
                Op::Add(a, b) => {
                    self.accumulate(a, &out_grad.data);
                    self.accumulate(b, &out_grad.data);
                }
                Op::Mul(a, b) => {
                    let da: Vec<f64> = out_grad
                        .data
                        .iter()
                        .zip(&self.nodes[b.0].value.data)
                        .map(|(g, y)| g * y)
                        .collect();
                    let db: Vec<f64> = out_grad
                        .data
                        .iter()
                        .zip(&self.nodes[a.0].value.data)
                        .map(|(g, x)| g * x)
                        .collect();
                    self.accumulate(a, &da);
                    self.accumulate(b, &db);
                }
                Op::BroadcastMul(v, s) => {
                    let c = self.nodes[s.0].value.data[0];
                    let dv: Vec<f64> = out_grad.data.iter().map(|g| g * c).collect();
                    let ds: f64 = out_grad
                        .data
                        .iter()
                        .zip(&self.nodes[v.0].value.data)
                        .map(|(g, x)| g * x)
                        .sum();
                    self.accumulate(v, &dv);
                    self.accumulate(s, &[ds]);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = self.nodes[p.0].value.len();
                        let part = out_grad.data[offset..offset + len].to_vec();
                        self.accumulate(p, &part);
                        offset += len;
                    }
                }
                Op::Slice(a, start, _end) => {
                    let len = self.nodes[a.0].value.len();
                    let mut da = vec![0.0; len];
                    da[start..start + out_grad.len()].copy_from_slice(&out_grad.data);
                    self.accumulate(a, &da);
                }
                Op::Relu(a) => {
                    let da: Vec<f64> = out_grad
                        .data
                        .iter()
                        .zip(&self.nodes[a.0].value.data)
                        .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                        .collect();
                    self.accumulate(a, &da);
                }
                Op::Sigmoid(a) => {
                    let da: Vec<f64> = out_grad
                        .data
                        .iter()
                        .zip(&self.nodes[i].value.data)
                        .map(|(g, &s)| g * s * (1.0 - s))
                        .collect();
                    self.accumulate(a, &da);
                }
                Op::Tanh(a) => {
                    let da: Vec<f64> = out_grad
                        .data
                        .iter()
                        .zip(&self.nodes[i].value.data)
                        .map(|(g, &t)| g * (1.0 - t * t))
                        .collect();
                    self.accumulate(a, &da);
                }
                Op::EmbedLookup(table, index) => {
                    let cols = self.nodes[table.0].value.cols();
                    let rows = self.nodes[table.0].value.rows();
                    let mut dt = vec![0.0; rows * cols];
                    dt[index * cols..(index + 1) * cols].copy_from_slice(&out_grad.data);
                    self.accumulate(table, &dt);
                }
                Op::SoftmaxCrossEntropy(logits, target) => {
                    let g = out_grad.data[0];
                    let probs = softmax(&self.nodes[logits.0].value.data);
                    let dl: Vec<f64> = probs
                        .iter()
                        .enumerate()
                        .map(|(k, &p)| g * (p - f64::from(u8::from(k == target))))
                        .collect();
                    self.accumulate(logits, &dl);
                }
                Op::Softmax(a) => {
                    let s = &self.nodes[i].value.data;
                    let dot: f64 = out_grad.data.iter().zip(s.iter()).map(|(g, p)| g * p).sum();
                    let da: Vec<f64> = out_grad
                        .data
                        .iter()
                        .zip(s.iter())
                        .map(|(g, p)| p * (g - dot))
                        .collect();
                    self.accumulate(a, &da);
                }
                Op::Sum(a) => {
                    let g = out_grad.data[0];
                    let da = vec![g; self.nodes[a.0].value.len()];
                    self.accumulate(a, &da);
                }
                Op::Scale(a, c) => {
                    let da: Vec<f64> = out_grad.data.iter().map(|g| g * c).collect();
                    self.accumulate(a, &da);
                }
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, id: NodeId, grad: &[f64]) {
        let node = &mut self.nodes[id.0];
        if !node.tracked {
            return;
        }
        let g = node
            .grad
            .get_or_insert_with(|| Tensor::zeros(&node.value.dims));
        for (dst, src) in g.data.iter_mut().zip(grad) {
            *dst += src;
        }
    }
}

fn shape(op: &'static str, detail: String) -> AutodiffError {
    AutodiffError::Shape { op, detail }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Log-softmax of a logit slice, used by decoding where no gradient is needed.
pub(crate) fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_total = logits
        .iter()
        .map(|&x| (x - max).exp())
        .sum::<f64>()
        .ln();
    logits.iter().map(|&x| x - max - log_total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_forward() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::vector(vec![-1.0, 0.0, 2.0]));
        let y = tape.relu(x);
        assert_eq!(tape.value(y).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn matmul_identity() {
        let mut tape = Tape::new();
        let eye = tape.leaf(Tensor::matrix(
            3,
            3,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        ));
        let x = tape.leaf(Tensor::vector(vec![0.3, -1.5, 2.0]));
        let y = tape.matmul(eye, x).unwrap();
        assert_eq!(tape.value(y).data(), &[0.3, -1.5, 2.0]);
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let mut tape = Tape::new();
        let logits = tape.leaf(Tensor::vector(vec![0.0, 0.0, 0.0]));
        let loss = tape.softmax_cross_entropy(logits, 1).unwrap();
        assert!((tape.value(loss).item() - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_nonnegative_and_zero_at_certainty() {
        let mut tape = Tape::new();
        let certain = tape.leaf(Tensor::vector(vec![1000.0, 0.0]));
        let loss = tape.softmax_cross_entropy(certain, 0).unwrap();
        assert!(tape.value(loss).item() >= 0.0);
        assert!(tape.value(loss).item() < 1e-12);
    }

    #[test]
    fn backward_of_sum_of_squares() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::vector(vec![1.0, 2.0]));
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.sum(sq);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[2.0, 4.0]);
    }

    #[test]
    fn grads_accumulate_across_uses() {
        // loss = sum(x) + sum(2x) -> grad 3 per element
        let mut tape = Tape::new();
        let x = tape.param(Tensor::vector(vec![5.0, -1.0]));
        let s1 = tape.sum(x);
        let x2 = tape.scale(x, 2.0);
        let s2 = tape.sum(x2);
        let loss = tape.add(s1, s2).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[3.0, 3.0]);
    }

    #[test]
    fn backward_rejects_untracked_or_vector_loss() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::vector(vec![1.0]));
        assert!(tape.backward(x).is_err());
        let p = tape.param(Tensor::vector(vec![1.0, 2.0]));
        assert!(tape.backward(p).is_err());
    }

    #[test]
    fn concat_slice_roundtrip_forward_and_backward() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::vector(vec![1.0, 2.0]));
        let b = tape.param(Tensor::vector(vec![3.0]));
        let cat = tape.concat(&[a, b]).unwrap();
        let back = tape.slice(cat, 0, 2).unwrap();
        assert_eq!(tape.value(back).data(), &[1.0, 2.0]);
        let sq = tape.mul(back, back).unwrap();
        let loss = tape.sum(sq);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(a).unwrap().data(), &[2.0, 4.0]);
        assert_eq!(tape.grad(b).unwrap().data(), &[0.0]);
    }

    #[test]
    fn softmax_shift_invariance() {
        let scores = [0.7, -0.2, 1.4];
        let shifted: Vec<f64> = scores.iter().map(|s| s + 123.0).collect();
        let a = softmax(&scores);
        let b = softmax(&shifted);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors_name_op_and_shapes() {
        let mut tape = Tape::new();
        let m = tape.leaf(Tensor::matrix(2, 3, vec![0.0; 6]));
        let v = tape.leaf(Tensor::vector(vec![0.0; 4]));
        let err = tape.matmul(m, v).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("matmul") && msg.contains("[2, 3]"), "{msg}");
    }

    #[test]
    fn embed_index_out_of_range() {
        let mut tape = Tape::new();
        let t = tape.leaf(Tensor::matrix(2, 3, vec![0.0; 6]));
        assert!(matches!(
            tape.embed_lookup(t, 5),
            Err(AutodiffError::EmbedIndex { index: 5, rows: 2 })
        ));
    }
}

//! Early fusion: concatenate modality vectors, project, ReLU.

use super::Result;
use crate::autodiff::{NodeId, ParamSet, Tape, TapeParams};
use rand::Rng;

/// A linear layer over concatenated modality inputs followed by ReLU. Used
/// for encoder inputs, decoder inputs and decoder initialization.
#[derive(Debug, Clone)]
pub struct FusionLayer {
    prefix: String,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl FusionLayer {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        params.insert_glorot(&format!("{prefix}.w"), out_dim, in_dim, rng);
        params.insert_zero_vector(&format!("{prefix}.b"), out_dim);
        FusionLayer {
            prefix: prefix.to_string(),
            in_dim,
            out_dim,
        }
    }

    /// `ReLU(W concat(parts) + b)`.
    pub fn fuse(&self, tape: &mut Tape, tp: &TapeParams, parts: &[NodeId]) -> Result<NodeId> {
        let x = tape.concat(parts)?;
        let w = tp.id(&format!("{}.w", self.prefix));
        let b = tp.id(&format!("{}.b", self.prefix));
        let wx = tape.matmul(w, x)?;
        let pre = tape.add(wx, b)?;
        Ok(tape.relu(pre))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(in_dim: usize, out_dim: usize) -> (ParamSet, FusionLayer) {
        let mut params = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let layer = FusionLayer::new(&mut params, "f", in_dim, out_dim, &mut rng);
        (params, layer)
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let (mut params, layer) = setup(4, 3);
        params.get_mut("f.w").data_mut().fill(0.0);
        let mut tape = Tape::new();
        let tp = params.register(&mut tape);
        let a = tape.leaf(Tensor::vector(vec![1.0, -2.0]));
        let b = tape.leaf(Tensor::vector(vec![3.0, 4.0]));
        let out = layer.fuse(&mut tape, &tp, &[a, b]).unwrap();
        assert_eq!(tape.value(out).data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn identity_weights_relu_single_part() {
        let (mut params, layer) = setup(3, 3);
        let w = params.get_mut("f.w");
        w.data_mut().fill(0.0);
        for i in 0..3 {
            w.data_mut()[i * 3 + i] = 1.0;
        }
        let mut tape = Tape::new();
        let tp = params.register(&mut tape);
        let x = tape.leaf(Tensor::vector(vec![-1.0, 0.5, 2.0]));
        let out = layer.fuse(&mut tape, &tp, &[x]).unwrap();
        assert_eq!(tape.value(out).data(), &[0.0, 0.5, 2.0]);
    }

    #[test]
    fn output_nonnegative_for_random_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let mut params = ParamSet::new();
            let layer = FusionLayer::new(&mut params, "f", 5, 4, &mut rng);
            let mut tape = Tape::new();
            let tp = params.register(&mut tape);
            let data: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x = tape.leaf(Tensor::vector(data));
            let out = layer.fuse(&mut tape, &tp, &[x]).unwrap();
            assert!(tape.value(out).data().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let (params, layer) = setup(4, 3);
        let mut tape = Tape::new();
        let tp = params.register(&mut tape);
        let x = tape.leaf(Tensor::vector(vec![0.0; 5]));
        assert!(layer.fuse(&mut tape, &tp, &[x]).is_err());
    }
}

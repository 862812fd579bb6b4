//! Single-layer unidirectional LSTM cell.

use super::Result;
use crate::autodiff::{NodeId, ParamSet, Tape, TapeParams, Tensor};
use rand::Rng;

const GATES: [&str; 4] = ["i", "f", "o", "g"];

/// Gate parameters for one LSTM layer: input, forget, output and candidate
/// gates, each with an input matrix, a recurrent matrix and a bias.
#[derive(Debug, Clone)]
pub struct LstmLayer {
    prefix: String,
    pub input: usize,
    pub hidden: usize,
}

impl LstmLayer {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        for gate in GATES {
            params.insert_glorot(&format!("{prefix}.w_{gate}"), hidden, input, rng);
            params.insert_glorot(&format!("{prefix}.u_{gate}"), hidden, hidden, rng);
            params.insert_zero_vector(&format!("{prefix}.b_{gate}"), hidden);
        }
        LstmLayer {
            prefix: prefix.to_string(),
            input,
            hidden,
        }
    }

    pub fn zero_state(&self, tape: &mut Tape) -> (NodeId, NodeId) {
        let h = tape.leaf(Tensor::zeros(&[self.hidden]));
        let c = tape.leaf(Tensor::zeros(&[self.hidden]));
        (h, c)
    }

    fn gate(
        &self,
        tape: &mut Tape,
        tp: &TapeParams,
        name: &str,
        x: NodeId,
        h: NodeId,
    ) -> Result<NodeId> {
        let w = tp.id(&format!("{}.w_{name}", self.prefix));
        let u = tp.id(&format!("{}.u_{name}", self.prefix));
        let b = tp.id(&format!("{}.b_{name}", self.prefix));
        let wx = tape.matmul(w, x)?;
        let uh = tape.matmul(u, h)?;
        let s = tape.add(wx, uh)?;
        Ok(tape.add(s, b)?)
    }

    /// Standard gate equations:
    /// `i,f,o = sigmoid(..)`, `g = tanh(..)`, `c' = f*c + i*g`, `h' = o*tanh(c')`.
    pub fn step(
        &self,
        tape: &mut Tape,
        tp: &TapeParams,
        x: NodeId,
        h: NodeId,
        c: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        let i_pre = self.gate(tape, tp, "i", x, h)?;
        let f_pre = self.gate(tape, tp, "f", x, h)?;
        let o_pre = self.gate(tape, tp, "o", x, h)?;
        let g_pre = self.gate(tape, tp, "g", x, h)?;
        let i = tape.sigmoid(i_pre);
        let f = tape.sigmoid(f_pre);
        let o = tape.sigmoid(o_pre);
        let g = tape.tanh(g_pre);
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c_next = tape.add(fc, ig)?;
        let tc = tape.tanh(c_next);
        let h_next = tape.mul(o, tc)?;
        Ok((h_next, c_next))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check, Tape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_and_state_stay_zero() {
        let mut params = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lstm = LstmLayer::new(&mut params, "l", 3, 4, &mut rng);
        for (_, t) in params.iter_mut() {
            t.data_mut().fill(0.0);
        }
        let mut tape = Tape::new();
        let tp = params.register(&mut tape);
        let (h, c) = lstm.zero_state(&mut tape);
        let x = tape.leaf(Tensor::vector(vec![1.0, -2.0, 0.5]));
        let (h2, c2) = lstm.step(&mut tape, &tp, x, h, c).unwrap();
        assert!(tape.value(h2).data().iter().all(|&v| v == 0.0));
        assert!(tape.value(c2).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cell_growth_bounded_by_one_per_step() {
        let mut params = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lstm = LstmLayer::new(&mut params, "l", 2, 3, &mut rng);
        let mut tape = Tape::new();
        let tp = params.register(&mut tape);
        let c0_data = vec![2.0, -1.0, 0.3];
        let h = tape.leaf(Tensor::zeros(&[3]));
        let c = tape.leaf(Tensor::vector(c0_data.clone()));
        let x = tape.leaf(Tensor::vector(vec![5.0, -5.0]));
        let (_, c2) = lstm.step(&mut tape, &tp, x, h, c).unwrap();
        for (after, before) in tape.value(c2).data().iter().zip(&c0_data) {
            assert!(after.abs() <= before.abs() + 1.0 + 1e-12);
        }
    }

    #[test]
    fn three_step_unroll_passes_grad_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut params = ParamSet::new();
        let lstm = LstmLayer::new(&mut params, "l", 2, 3, &mut rng);
        let inputs = [[0.4, -0.2], [0.1, 0.9], [-0.5, 0.3]];

        let run = |params: &ParamSet| -> (f64, Vec<Tensor>) {
            let mut tape = Tape::new();
            let tp = params.register(&mut tape);
            let (mut h, mut c) = lstm.zero_state(&mut tape);
            for x in inputs {
                let xi = tape.leaf(Tensor::vector(x.to_vec()));
                let (h2, c2) = lstm.step(&mut tape, &tp, xi, h, c).unwrap();
                h = h2;
                c = c2;
            }
            let sq = tape.mul(h, h).unwrap();
            let loss = tape.sum(sq);
            tape.backward(loss).unwrap();
            (tape.value(loss).item(), params.collect_grads(&tape, &tp))
        };

        let (_, analytic) = run(&params);
        let err = grad_check(&mut params, &analytic, 1e-4, |p| Ok(run(p).0)).unwrap();
        assert!(err < 1e-4, "grad check error {err}");
    }
}

//! Incremental narration-timing tagger.
//!
//! A unidirectional LSTM over per-token inputs with a two-logit output head;
//! the probability of the positive class is the predicted chance that
//! narration starts within the labeling window. Output at step `i` depends on
//! inputs `1..=i` only.

use super::{FusionLayer, LstmLayer, ModelDims, ModelError, Result};
use crate::autodiff::{softmax, NodeId, ParamSet, Tape, TapeParams, Tensor};
use crate::corpus::{Token, Vocab};
use rand::Rng;

pub struct TaggerModel {
    pub multimodal: bool,
    pub vocab: Vocab,
    pub dims: ModelDims,
    pub d_img: usize,
    pub d_aud: usize,
    pub params: ParamSet,
    fusion: Option<FusionLayer>,
    lstm: LstmLayer,
}

impl TaggerModel {
    pub fn new<R: Rng>(
        vocab: Vocab,
        multimodal: bool,
        dims: ModelDims,
        d_img: usize,
        d_aud: usize,
        rng: &mut R,
    ) -> Self {
        let mut params = ParamSet::new();
        params.insert_glorot("emb", vocab.len(), dims.d_emb, rng);
        // Multimodal variant fuses text, image and audio; text-only feeds the
        // embedding straight into the LSTM.
        let (fusion, input_width) = if multimodal {
            let layer = FusionLayer::new(
                &mut params,
                "fuse",
                dims.d_emb + d_img + d_aud,
                dims.fusion,
                rng,
            );
            (Some(layer), dims.fusion)
        } else {
            (None, dims.d_emb)
        };
        let lstm = LstmLayer::new(&mut params, "lstm", input_width, dims.hidden, rng);
        params.insert_glorot("out.w", 2, dims.hidden, rng);
        params.insert_zero_vector("out.b", 2);
        TaggerModel {
            multimodal,
            vocab,
            dims,
            d_img,
            d_aud,
            params,
            fusion,
            lstm,
        }
    }

    /// Per-token two-class logits, on an existing tape.
    pub fn forward(
        &self,
        tape: &mut Tape,
        tp: &TapeParams,
        tokens: &[Token],
    ) -> Result<Vec<NodeId>> {
        if tokens.is_empty() {
            return Err(ModelError::EmptyInput("tagger forward on empty episode".into()));
        }
        let emb = tp.id("emb");
        let out_w = tp.id("out.w");
        let out_b = tp.id("out.b");
        let (mut h, mut c) = self.lstm.zero_state(tape);
        let mut logits = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let e = tape.embed_lookup(emb, self.vocab.lookup(&tok.text))?;
            let x = match &self.fusion {
                Some(fusion) => {
                    let img = tape.leaf(Tensor::vector(tok.img_feat.clone()));
                    let aud = tape.leaf(Tensor::vector(tok.aud_feat.clone()));
                    fusion.fuse(tape, tp, &[e, img, aud])?
                }
                None => e,
            };
            let (h2, c2) = self.lstm.step(tape, tp, x, h, c)?;
            h = h2;
            c = c2;
            let wh = tape.matmul(out_w, h)?;
            logits.push(tape.add(wh, out_b)?);
        }
        Ok(logits)
    }

    /// P(label = 1) per token, classified downstream at threshold 0.5.
    pub fn predict_probs(&self, tokens: &[Token]) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let tp = self.params.register(&mut tape);
        let logits = self.forward(&mut tape, &tp, tokens)?;
        Ok(logits
            .into_iter()
            .map(|id| softmax(tape.value(id).data())[1])
            .collect())
    }

    /// Mean per-token cross-entropy against binary labels.
    pub fn loss(
        &self,
        tape: &mut Tape,
        tp: &TapeParams,
        tokens: &[Token],
        labels: &[u8],
    ) -> Result<NodeId> {
        assert_eq!(tokens.len(), labels.len(), "label count mismatch");
        let logits = self.forward(tape, tp, tokens)?;
        let mut total: Option<NodeId> = None;
        for (logit, &label) in logits.into_iter().zip(labels) {
            let ce = tape.softmax_cross_entropy(logit, usize::from(label))?;
            total = Some(match total {
                Some(acc) => tape.add(acc, ce)?,
                None => ce,
            });
        }
        let total = total.expect("non-empty episode");
        Ok(tape.scale(total, 1.0 / labels.len() as f64))
    }
}

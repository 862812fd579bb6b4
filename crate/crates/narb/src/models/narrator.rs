//! The narrator encoder-decoder family.
//!
//! All variants share the same decoder; they differ in which encoders exist
//! and whether dot-product attention over the preceding-dialogue encoder
//! states feeds the decoder input:
//!
//! - `DiNa+att`: preceding-dialogue encoder only, with attention.
//! - `DiViNa` (`+att`): adds a video encoder over the span to be narrated
//!   (image and audio only).
//! - `Di2ViNa` (`+att`): adds a separate encoder over the dialogue that
//!   follows the narration.
//!
//! Orthogonally, the multimodal decoder (`mmd`) feeds gold image and audio
//! vectors to the decoder at every step and decodes for exactly as many steps
//! as audiovisual representations are supplied.

use super::{FusionLayer, LstmLayer, ModelDims, ModelError, Result};
use crate::autodiff::{log_softmax, NodeId, ParamSet, Tape, TapeParams, Tensor};
use crate::corpus::{NarrationInstance, Token, Vocab, BOS};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    DiNaAtt,
    DiViNa,
    DiViNaAtt,
    Di2ViNa,
    Di2ViNaAtt,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::DiNaAtt,
        Variant::DiViNa,
        Variant::DiViNaAtt,
        Variant::Di2ViNa,
        Variant::Di2ViNaAtt,
    ];

    pub fn has_video_encoder(self) -> bool {
        !matches!(self, Variant::DiNaAtt)
    }

    pub fn has_future_encoder(self) -> bool {
        matches!(self, Variant::Di2ViNa | Variant::Di2ViNaAtt)
    }

    pub fn has_attention(self) -> bool {
        matches!(
            self,
            Variant::DiNaAtt | Variant::DiViNaAtt | Variant::Di2ViNaAtt
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::DiNaAtt => "dina-att",
            Variant::DiViNa => "divina",
            Variant::DiViNaAtt => "divina-att",
            Variant::Di2ViNa => "di2vina",
            Variant::Di2ViNaAtt => "di2vina-att",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Encoder outputs on a tape: final hidden states of each present encoder
/// plus the full dialogue-encoder state sequence for attention.
pub struct EncoderOut {
    pub h_d: NodeId,
    pub h_v: Option<NodeId>,
    pub h_fd: Option<NodeId>,
    pub dialogue_states: Vec<NodeId>,
}

/// Value-level decoder state used by search.
#[derive(Debug, Clone)]
pub struct DecoderState {
    pub h: Tensor,
    pub c: Tensor,
}

/// Value-level encoding of one instance, reused across decode steps.
#[derive(Debug, Clone)]
pub struct EncodedInstance {
    pub h0: Tensor,
    pub dialogue_states: Vec<Tensor>,
}

pub struct NarratorModel {
    pub variant: Variant,
    pub mmd: bool,
    pub vocab: Vocab,
    pub dims: ModelDims,
    pub d_img: usize,
    pub d_aud: usize,
    pub params: ParamSet,
    fuse_d: FusionLayer,
    enc_d: LstmLayer,
    fuse_v: Option<FusionLayer>,
    enc_v: Option<LstmLayer>,
    fuse_fd: Option<FusionLayer>,
    enc_fd: Option<LstmLayer>,
    fuse_dec: FusionLayer,
    dec: LstmLayer,
}

impl NarratorModel {
    pub fn new<R: Rng>(
        variant: Variant,
        mmd: bool,
        vocab: Vocab,
        dims: ModelDims,
        d_img: usize,
        d_aud: usize,
        rng: &mut R,
    ) -> Self {
        let mut params = ParamSet::new();
        params.insert_glorot("emb", vocab.len(), dims.d_emb, rng);

        let trimodal = dims.d_emb + d_aud + d_img;
        let fuse_d = FusionLayer::new(&mut params, "fuse_d", trimodal, dims.fusion, rng);
        let enc_d = LstmLayer::new(&mut params, "enc_d", dims.fusion, dims.hidden, rng);

        let (fuse_v, enc_v) = if variant.has_video_encoder() {
            let f = FusionLayer::new(&mut params, "fuse_v", d_img + d_aud, dims.fusion, rng);
            let l = LstmLayer::new(&mut params, "enc_v", dims.fusion, dims.hidden, rng);
            (Some(f), Some(l))
        } else {
            (None, None)
        };
        let (fuse_fd, enc_fd) = if variant.has_future_encoder() {
            let f = FusionLayer::new(&mut params, "fuse_fd", trimodal, dims.fusion, rng);
            let l = LstmLayer::new(&mut params, "enc_fd", dims.fusion, dims.hidden, rng);
            (Some(f), Some(l))
        } else {
            (None, None)
        };

        let encoder_count =
            1 + usize::from(variant.has_video_encoder()) + usize::from(variant.has_future_encoder());
        params.insert_glorot("init.w", dims.hidden, encoder_count * dims.hidden, rng);
        params.insert_zero_vector("init.b", dims.hidden);

        let dec_fuse_in = dims.d_emb + if mmd { d_img + d_aud } else { 0 };
        let fuse_dec = FusionLayer::new(&mut params, "fuse_dec", dec_fuse_in, dims.fusion, rng);
        let dec_in = dims.fusion + if variant.has_attention() { dims.hidden } else { 0 };
        let dec = LstmLayer::new(&mut params, "dec", dec_in, dims.hidden, rng);

        params.insert_glorot("out.w", vocab.len(), dims.hidden, rng);
        params.insert_zero_vector("out.b", vocab.len());

        NarratorModel {
            variant,
            mmd,
            vocab,
            dims,
            d_img,
            d_aud,
            params,
            fuse_d,
            enc_d,
            fuse_v,
            enc_v,
            fuse_fd,
            enc_fd,
            fuse_dec,
            dec,
        }
    }

    fn trimodal_input(
        &self,
        tape: &mut Tape,
        tp: &TapeParams,
        fusion: &FusionLayer,
        tok: &Token,
    ) -> Result<NodeId> {
        let emb = tp.id("emb");
        let e = tape.embed_lookup(emb, self.vocab.lookup(&tok.text))?;
        let aud = tape.leaf(Tensor::vector(tok.aud_feat.clone()));
        let img = tape.leaf(Tensor::vector(tok.img_feat.clone()));
        fusion.fuse(tape, tp, &[e, aud, img])
    }

    /// One placeholder step for an empty dialogue context: the BOS embedding
    /// with zero audio and image vectors.
    fn placeholder_input(
        &self,
        tape: &mut Tape,
        tp: &TapeParams,
        fusion: &FusionLayer,
    ) -> Result<NodeId> {
        let emb = tp.id("emb");
        let e = tape.embed_lookup(emb, BOS)?;
        let aud = tape.leaf(Tensor::zeros(&[self.d_aud]));
        let img = tape.leaf(Tensor::zeros(&[self.d_img]));
        fusion.fuse(tape, tp, &[e, aud, img])
    }

    fn run_dialogue_encoder(
        &self,
        tape: &mut Tape,
        tp: &TapeParams,
        fusion: &FusionLayer,
        lstm: &LstmLayer,
        tokens: &[Token],
    ) -> Result<(NodeId, Vec<NodeId>)> {
        let (mut h, mut c) = lstm.zero_state(tape);
        let mut states = Vec::new();
        if tokens.is_empty() {
            let x = self.placeholder_input(tape, tp, fusion)?;
            let (h2, c2) = lstm.step(tape, tp, x, h, c)?;
            h = h2;
            c = c2;
            states.push(h);
        } else {
            for tok in tokens {
                let x = self.trimodal_input(tape, tp, fusion, tok)?;
                let (h2, c2) = lstm.step(tape, tp, x, h, c)?;
                h = h2;
                c = c2;
                states.push(h);
            }
        }
        let _ = c;
        Ok((h, states))
    }

    /// Runs every encoder the variant demands over the instance.
    pub fn encode(
        &self,
        tape: &mut Tape,
        tp: &TapeParams,
        instance: &NarrationInstance,
    ) -> Result<EncoderOut> {
        if instance.narration.is_empty() {
            return Err(ModelError::EmptyInput("instance with empty narration".into()));
        }
        let (h_d, dialogue_states) =
            self.run_dialogue_encoder(tape, tp, &self.fuse_d, &self.enc_d, &instance.prev_dialogue)?;

        let h_v = match (&self.fuse_v, &self.enc_v) {
            (Some(fusion), Some(lstm)) => {
                let (mut h, mut c) = lstm.zero_state(tape);
                for tok in &instance.narration {
                    let img = tape.leaf(Tensor::vector(tok.img_feat.clone()));
                    let aud = tape.leaf(Tensor::vector(tok.aud_feat.clone()));
                    let x = fusion.fuse(tape, tp, &[img, aud])?;
                    let (h2, c2) = lstm.step(tape, tp, x, h, c)?;
                    h = h2;
                    c = c2;
                }
                Some(h)
            }
            _ => None,
        };

        let h_fd = match (&self.fuse_fd, &self.enc_fd) {
            (Some(fusion), Some(lstm)) => {
                let (h, _) =
                    self.run_dialogue_encoder(tape, tp, fusion, lstm, &instance.next_dialogue)?;
                Some(h)
            }
            _ => None,
        };

        Ok(EncoderOut {
            h_d,
            h_v,
            h_fd,
            dialogue_states,
        })
    }

    /// `h_0 = ReLU(W [h_d; h_v?; h_fd?])`; the initial cell state is zero.
    pub fn init_decoder(&self, tape: &mut Tape, tp: &TapeParams, enc: &EncoderOut) -> Result<NodeId> {
        let mut parts = vec![enc.h_d];
        if self.variant.has_video_encoder() {
            parts.push(enc.h_v.ok_or_else(|| self.mismatch("missing video encoder state"))?);
        } else if enc.h_v.is_some() {
            return Err(self.mismatch("unexpected video encoder state"));
        }
        if self.variant.has_future_encoder() {
            parts.push(enc.h_fd.ok_or_else(|| self.mismatch("missing future-dialogue state"))?);
        } else if enc.h_fd.is_some() {
            return Err(self.mismatch("unexpected future-dialogue state"));
        }
        let cat = tape.concat(&parts)?;
        let w = tp.id("init.w");
        let b = tp.id("init.b");
        let wx = tape.matmul(w, cat)?;
        let pre = tape.add(wx, b)?;
        Ok(tape.relu(pre))
    }

    fn mismatch(&self, message: &str) -> ModelError {
        ModelError::VariantMismatch {
            variant: self.variant.name().to_string(),
            message: message.to_string(),
        }
    }

    /// One decoder step. `prev_token` is the previously generated (or gold)
    /// token index; `mm` carries the gold image and audio vectors and must be
    /// present iff the model uses the multimodal decoder; `enc` supplies the
    /// attention states for attentive variants.
    pub fn decode_step(
        &self,
        tape: &mut Tape,
        tp: &TapeParams,
        prev_token: usize,
        h: NodeId,
        c: NodeId,
        mm: Option<(&[f64], &[f64])>,
        enc: &EncoderOut,
    ) -> Result<(NodeId, NodeId, NodeId)> {
        if self.mmd != mm.is_some() {
            return Err(self.mismatch(if self.mmd {
                "multimodal decoder requires per-step image and audio features"
            } else {
                "text-only decoder received image/audio features"
            }));
        }
        let emb = tp.id("emb");
        let e = tape.embed_lookup(emb, prev_token)?;
        let fused = match mm {
            Some((img, aud)) => {
                let img = tape.leaf(Tensor::vector(img.to_vec()));
                let aud = tape.leaf(Tensor::vector(aud.to_vec()));
                self.fuse_dec.fuse(tape, tp, &[e, img, aud])?
            }
            None => self.fuse_dec.fuse(tape, tp, &[e])?,
        };
        let x = if self.variant.has_attention() {
            let (_, context) = attend(tape, h, &enc.dialogue_states)?;
            tape.concat(&[fused, context])?
        } else {
            fused
        };
        let (h2, c2) = self.dec.step(tape, tp, x, h, c)?;
        let out_w = tp.id("out.w");
        let out_b = tp.id("out.b");
        let wh = tape.matmul(out_w, h2)?;
        let logits = tape.add(wh, out_b)?;
        Ok((logits, h2, c2))
    }

    /// Encodes an instance down to plain tensors, for search-time decoding.
    pub fn encode_values(&self, instance: &NarrationInstance) -> Result<EncodedInstance> {
        let mut tape = Tape::new();
        let tp = self.params.register(&mut tape);
        let enc = self.encode(&mut tape, &tp, instance)?;
        let h0 = self.init_decoder(&mut tape, &tp, &enc)?;
        Ok(EncodedInstance {
            h0: tape.value(h0).clone(),
            dialogue_states: enc
                .dialogue_states
                .iter()
                .map(|&id| tape.value(id).clone())
                .collect(),
        })
    }

    pub fn initial_state(&self, enc: &EncodedInstance) -> DecoderState {
        DecoderState {
            h: enc.h0.clone(),
            c: Tensor::zeros(&[self.dims.hidden]),
        }
    }

    /// Value-level decode step: returns log-probabilities over the vocabulary
    /// and the next state.
    pub fn step_values(
        &self,
        prev_token: usize,
        state: &DecoderState,
        mm: Option<(&[f64], &[f64])>,
        enc: &EncodedInstance,
    ) -> Result<(Vec<f64>, DecoderState)> {
        let mut tape = Tape::new();
        let tp = self.params.register(&mut tape);
        let h = tape.leaf(state.h.clone());
        let c = tape.leaf(state.c.clone());
        let enc_out = EncoderOut {
            h_d: h, // unused by decode_step
            h_v: None,
            h_fd: None,
            dialogue_states: enc
                .dialogue_states
                .iter()
                .map(|t| tape.leaf(t.clone()))
                .collect(),
        };
        let (logits, h2, c2) = self.decode_step(&mut tape, &tp, prev_token, h, c, mm, &enc_out)?;
        Ok((
            log_softmax(tape.value(logits).data()),
            DecoderState {
                h: tape.value(h2).clone(),
                c: tape.value(c2).clone(),
            },
        ))
    }
}

/// Dot-product attention: scores are inner products between the decoder state
/// and each encoder state; the context is the softmax-weighted sum of encoder
/// states. Returns `(weights, context)`.
pub fn attend(tape: &mut Tape, dec_h: NodeId, enc_states: &[NodeId]) -> Result<(NodeId, NodeId)> {
    if enc_states.is_empty() {
        return Err(ModelError::EmptyInput("attention over no encoder states".into()));
    }
    let mut scores = Vec::with_capacity(enc_states.len());
    for &s in enc_states {
        scores.push(tape.matmul(dec_h, s)?);
    }
    let score_vec = tape.concat(&scores)?;
    let weights = tape.softmax(score_vec)?;
    let mut context: Option<NodeId> = None;
    for (i, &s) in enc_states.iter().enumerate() {
        let w_i = tape.slice(weights, i, i + 1)?;
        let term = tape.broadcast_mul(s, w_i)?;
        context = Some(match context {
            Some(acc) => tape.add(acc, term)?,
            None => term,
        });
    }
    Ok((weights, context.expect("non-empty encoder states")))
}

//! Greedy and beam-search decoding for the narrator models.
//!
//! Hypotheses are ranked by length-normalized log-probability: the sum of
//! per-step log-probabilities divided by the number of emitted tokens,
//! counting the terminating end-of-sequence token when one is produced.
//! With the multimodal decoder there is no end-of-sequence decision; the
//! decoder runs for exactly as many steps as audiovisual vectors are given.

use super::{DecoderState, EncodedInstance, ModelError, NarratorModel, Result};
use crate::corpus::{NarrationInstance, BOS, EOS, PAD};

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated vocabulary indices, excluding start and end markers.
    pub tokens: Vec<usize>,
    /// Total log-probability, including the end marker when emitted.
    pub logp: f64,
    /// `logp` divided by the emitted step count.
    pub normalized: f64,
}

struct Live {
    tokens: Vec<usize>,
    logp: f64,
    prev: usize,
    state: DecoderState,
}

fn gold_features(instance: &NarrationInstance) -> Vec<(&[f64], &[f64])> {
    instance
        .narration
        .iter()
        .map(|t| (t.img_feat.as_slice(), t.aud_feat.as_slice()))
        .collect()
}

fn mask(logp: &mut [f64], step: usize, mmd: bool) {
    logp[PAD] = f64::NEG_INFINITY;
    logp[BOS] = f64::NEG_INFINITY;
    // never end before producing a token; never end at all under mmd
    if mmd || step == 0 {
        logp[EOS] = f64::NEG_INFINITY;
    }
}

fn finish(tokens: Vec<usize>, logp: f64, emitted: usize) -> Hypothesis {
    Hypothesis {
        normalized: logp / emitted as f64,
        tokens,
        logp,
    }
}

/// Argmax decoding. Equivalent to a beam of width one.
pub fn greedy_decode(
    model: &NarratorModel,
    instance: &NarrationInstance,
    max_len: usize,
) -> Result<Hypothesis> {
    let enc = model.encode_values(instance)?;
    greedy_from(model, instance, &enc, max_len)
}

fn greedy_from(
    model: &NarratorModel,
    instance: &NarrationInstance,
    enc: &EncodedInstance,
    max_len: usize,
) -> Result<Hypothesis> {
    let gold = gold_features(instance);
    let steps = if model.mmd { gold.len() } else { max_len };
    let mut state = model.initial_state(enc);
    let mut tokens = Vec::new();
    let mut logp = 0.0;
    let mut prev = BOS;
    for step in 0..steps {
        let mm = model.mmd.then(|| gold[step]);
        let (mut lp, next_state) = model.step_values(prev, &state, mm, enc)?;
        mask(&mut lp, step, model.mmd);
        let (best, best_lp) = argmax(&lp);
        logp += best_lp;
        state = next_state;
        prev = best;
        if best == EOS {
            return Ok(finish(tokens, logp, step + 1));
        }
        tokens.push(best);
    }
    let emitted = steps;
    Ok(finish(tokens, logp, emitted))
}

fn argmax(logp: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_lp = f64::NEG_INFINITY;
    for (i, &lp) in logp.iter().enumerate() {
        if lp > best_lp {
            best = i;
            best_lp = lp;
        }
    }
    (best, best_lp)
}

/// Beam search with a finished-hypothesis pool. The pool is seeded with the
/// greedy decode, so the returned hypothesis never scores below it. Every
/// end-of-sequence expansion of a live beam joins the pool; the live set
/// keeps the top continuations by cumulative log-probability. Width one
/// degenerates to greedy decoding.
pub fn beam_search(
    model: &NarratorModel,
    instance: &NarrationInstance,
    width: usize,
    max_len: usize,
) -> Result<Hypothesis> {
    if width == 0 {
        return Err(ModelError::Invalid("beam width must be at least 1".into()));
    }
    if !model.mmd && max_len == 0 {
        return Err(ModelError::Invalid("max decode length must be at least 1".into()));
    }
    if width == 1 {
        return greedy_decode(model, instance, max_len);
    }
    let enc = model.encode_values(instance)?;
    let gold = gold_features(instance);
    let steps = if model.mmd { gold.len() } else { max_len };

    let mut pool = vec![greedy_from(model, instance, &enc, max_len)?];
    let mut live = vec![Live {
        tokens: Vec::new(),
        logp: 0.0,
        prev: BOS,
        state: model.initial_state(&enc),
    }];

    for step in 0..steps {
        // (source beam, token, cumulative logp, successor state)
        let mut candidates: Vec<(usize, usize, f64, DecoderState)> = Vec::new();
        for (b, beam) in live.iter().enumerate() {
            let mm = model.mmd.then(|| gold[step]);
            let (mut lp, next_state) = model.step_values(beam.prev, &beam.state, mm, &enc)?;
            mask(&mut lp, step, model.mmd);
            for (tok, &tok_lp) in lp.iter().enumerate() {
                if tok_lp == f64::NEG_INFINITY {
                    continue;
                }
                let logp = beam.logp + tok_lp;
                if tok == EOS {
                    pool.push(finish(beam.tokens.clone(), logp, step + 1));
                } else {
                    candidates.push((b, tok, logp, next_state.clone()));
                }
            }
        }
        candidates.sort_by(|a, b| b.2.partial_cmp(&a.2).expect("finite log-probs"));
        candidates.truncate(width);
        let mut next_live = Vec::with_capacity(width);
        for (b, tok, logp, state) in candidates {
            let mut tokens = live[b].tokens.clone();
            tokens.push(tok);
            next_live.push(Live {
                tokens,
                logp,
                prev: tok,
                state,
            });
        }
        live = next_live;
        if live.is_empty() {
            break;
        }
    }
    for beam in live {
        pool.push(finish(beam.tokens, beam.logp, steps));
    }
    pool.sort_by(|a, b| b.normalized.partial_cmp(&a.normalized).expect("finite scores"));
    Ok(pool.into_iter().next().expect("non-empty pool"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::narrator::tests::test_model;
    use crate::models::Variant;
    use crate::corpus::UNK;

    #[test]
    fn greedy_emits_no_reserved_tokens() {
        let (model, instances) = test_model(Variant::DiViNaAtt, false, 11);
        let hyp = greedy_decode(&model, &instances[0], 12).unwrap();
        assert!(hyp.tokens.iter().all(|&t| t != PAD && t != BOS && t != EOS));
        assert!(!hyp.tokens.is_empty());
        assert!(hyp.tokens.len() <= 12);
    }

    #[test]
    fn width_one_equals_greedy() {
        for seed in 0..5 {
            let (model, instances) = test_model(Variant::DiViNa, false, 20 + seed);
            for inst in instances.iter().take(3) {
                let greedy = greedy_decode(&model, inst, 10).unwrap();
                let beam = beam_search(&model, inst, 1, 10).unwrap();
                assert_eq!(greedy.tokens, beam.tokens);
                assert!((greedy.normalized - beam.normalized).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wider_beam_never_scores_worse() {
        let (model, instances) = test_model(Variant::Di2ViNaAtt, false, 30);
        for inst in instances.iter().take(4) {
            let narrow = beam_search(&model, inst, 1, 8).unwrap();
            let wide = beam_search(&model, inst, 5, 8).unwrap();
            assert!(wide.normalized >= narrow.normalized - 1e-12);
        }
    }

    #[test]
    fn mmd_output_length_matches_gold() {
        let (model, instances) = test_model(Variant::DiViNa, true, 40);
        for inst in instances.iter().take(4) {
            let hyp = beam_search(&model, inst, 3, 99).unwrap();
            assert_eq!(hyp.tokens.len(), inst.narration.len());
            assert!(hyp.tokens.iter().all(|&t| t != PAD && t != BOS && t != EOS));
        }
    }

    #[test]
    fn zero_width_is_an_error() {
        let (model, instances) = test_model(Variant::DiViNa, false, 41);
        assert!(beam_search(&model, &instances[0], 0, 8).is_err());
    }

    #[test]
    fn unknown_token_stays_available() {
        // only reserved markers are masked, so <unk> can in principle appear
        let (model, instances) = test_model(Variant::DiNaAtt, false, 42);
        let enc = model.encode_values(&instances[0]).unwrap();
        let state = model.initial_state(&enc);
        let (lp, _) = model.step_values(BOS, &state, None, &enc).unwrap();
        assert!(lp[UNK].is_finite());
    }

    fn tiny_instance() -> NarrationInstance {
        let token = |text: &str, speaker| crate::corpus::Token {
            text: text.to_string(),
            speaker,
            start_ms: 0,
            end_ms: 300,
            img_feat: vec![0.5, -0.25],
            aud_feat: vec![1.0],
        };
        use crate::corpus::Speaker::{Dialogue, Narrator};
        NarrationInstance {
            id: "t#0".into(),
            prev_dialogue: vec![token("look", Dialogue), token("up", Dialogue)],
            narration: vec![token("up", Narrator), token("look", Narrator)],
            next_dialogue: vec![token("look", Dialogue)],
        }
    }

    #[test]
    fn beam_matches_exhaustive_on_tiny_setting() {
        // five-word vocabulary and a short horizon allow enumerating every
        // candidate sequence
        use crate::corpus::Vocab;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        let inst = tiny_instance();
        let max_len = 4;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = NarratorModel::new(
                Variant::DiViNaAtt,
                false,
                Vocab::of_words(["look"]),
                crate::models::ModelDims {
                    hidden: 4,
                    fusion: 3,
                    d_emb: 3,
                },
                2,
                1,
                &mut rng,
            );
            let enc = model.encode_values(&inst).unwrap();
            let mut best = f64::NEG_INFINITY;
            let state = model.initial_state(&enc);
            expand(&model, &enc, BOS, &state, 0.0, 0, max_len, &mut best);
            let found = beam_search(&model, &inst, 5, max_len).unwrap();
            assert!(
                (found.normalized - best).abs() < 1e-9,
                "seed {seed}: beam {} vs exhaustive {best}",
                found.normalized
            );
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn expand(
        model: &NarratorModel,
        enc: &EncodedInstance,
        prev: usize,
        state: &DecoderState,
        logp: f64,
        depth: usize,
        max_len: usize,
        best: &mut f64,
    ) {
        if depth == max_len {
            let score = logp / max_len as f64;
            if score > *best {
                *best = score;
            }
            return;
        }
        let (mut lp, next) = model.step_values(prev, state, None, enc).unwrap();
        mask(&mut lp, depth, false);
        for (tok, &tok_lp) in lp.iter().enumerate() {
            if tok_lp == f64::NEG_INFINITY {
                continue;
            }
            let total = logp + tok_lp;
            if tok == EOS {
                let score = total / (depth + 1) as f64;
                if score > *best {
                    *best = score;
                }
                continue;
            }
            expand(model, enc, tok, &next, total, depth + 1, max_len, best);
        }
    }
}

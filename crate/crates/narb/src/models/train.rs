//! Training loops for the timing tagger and the narrator models.
//!
//! Both loops run Adam on one example per step, evaluate on a validation set
//! after every epoch, stop early when the validation metric stops improving
//! and restore the best parameters seen.

use super::{ModelError, NarratorModel, Result, TaggerModel};
use crate::autodiff::{AdamState, ParamSet, Tape, Tensor};
use crate::corpus::{label_timing, Episode, NarrationInstance, BOS, EOS};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    /// Probability of feeding the gold previous token during decoding.
    pub teacher_forcing: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Decode-length cap used at generation time.
    pub max_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            teacher_forcing: 0.5,
            max_epochs: 30,
            patience: 5,
            seed: 0,
            max_len: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    /// Validation F1 for the tagger (higher is better), validation loss for
    /// the narrator (lower is better).
    pub valid_metric: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Index into `epochs` of the restored checkpoint.
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn write_tsv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "epoch\ttrain_loss\tvalid_metric")?;
        for e in &self.epochs {
            writeln!(f, "{}\t{:.6}\t{:.6}", e.epoch, e.train_loss, e.valid_metric)?;
        }
        Ok(())
    }
}

fn snapshot(params: &ParamSet) -> Vec<(String, Tensor)> {
    params
        .iter()
        .map(|(name, t)| (name.to_string(), t.clone()))
        .collect()
}

fn restore(params: &mut ParamSet, saved: &[(String, Tensor)]) {
    for (name, t) in saved {
        *params.get_mut(name) = t.clone();
    }
}

/// Precision, recall and F1 of the positive class at threshold 0.5. Returns
/// zero when either denominator is empty.
fn f1_at_half(probs: &[f64], labels: &[u8]) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &l) in probs.iter().zip(labels) {
        let pred = p >= 0.5;
        match (pred, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    2.0 * p * r / (p + r)
}

fn episode_labels(ep: &Episode, window: usize) -> Vec<u8> {
    label_timing(ep, window).labels
}

/// Trains the timing tagger, selecting the epoch with the best validation F1.
pub fn train_tagger(
    model: &mut TaggerModel,
    train: &[&Episode],
    valid: &[&Episode],
    window: usize,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    if train.is_empty() {
        return Err(ModelError::EmptyInput("no training episodes".into()));
    }
    let eval: &[&Episode] = if valid.is_empty() { train } else { valid };
    let mut adam = AdamState::new(&model.params, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut log = TrainLog::default();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_params = snapshot(&model.params);
    let mut since_best = 0usize;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let ep = train[i];
            if ep.tokens.is_empty() {
                continue;
            }
            let labels = episode_labels(ep, window);
            let mut tape = Tape::new();
            let tp = model.params.register(&mut tape);
            let loss = model.loss(&mut tape, &tp, &ep.tokens, &labels)?;
            tape.backward(loss)?;
            total += tape.value(loss).item();
            let grads = model.params.collect_grads(&tape, &tp);
            adam.step(&mut model.params, &grads)?;
        }
        let train_loss = total / train.len() as f64;

        let mut f1_sum = 0.0;
        let mut f1_n = 0usize;
        for ep in eval {
            if ep.tokens.is_empty() {
                continue;
            }
            let probs = model.predict_probs(&ep.tokens)?;
            f1_sum += f1_at_half(&probs, &episode_labels(ep, window));
            f1_n += 1;
        }
        let f1 = if f1_n == 0 { 0.0 } else { f1_sum / f1_n as f64 };

        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            valid_metric: f1,
        });
        if f1 > best_f1 {
            best_f1 = f1;
            best_params = snapshot(&model.params);
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }
    restore(&mut model.params, &best_params);
    Ok(log)
}

fn narrator_targets(model: &NarratorModel, instance: &NarrationInstance) -> Vec<usize> {
    let mut targets: Vec<usize> = instance
        .narration
        .iter()
        .map(|t| model.vocab.lookup(&t.text))
        .collect();
    if !model.mmd {
        targets.push(EOS);
    }
    targets
}

/// Mean cross-entropy of one instance on a fresh tape; optionally takes a
/// gradient step. `tf_rng` drives the per-step teacher-forcing draw; pass
/// `None` for full teacher forcing (used for validation).
fn narrator_loss_step(
    model: &mut NarratorModel,
    instance: &NarrationInstance,
    adam: Option<&mut AdamState>,
    cfg: &TrainConfig,
    tf_rng: Option<&mut ChaCha8Rng>,
) -> Result<f64> {
    let targets = narrator_targets(model, instance);
    let mut tape = Tape::new();
    let tp = model.params.register(&mut tape);
    let enc = model.encode(&mut tape, &tp, instance)?;
    let mut h = model.init_decoder(&mut tape, &tp, &enc)?;
    let mut c = tape.leaf(Tensor::zeros(&[model.dims.hidden]));

    let mut rng = tf_rng;
    let mut prev = BOS;
    let mut loss_total = None;
    for (step, &target) in targets.iter().enumerate() {
        let mm = if model.mmd {
            let tok = &instance.narration[step];
            Some((tok.img_feat.as_slice(), tok.aud_feat.as_slice()))
        } else {
            None
        };
        let (logits, h2, c2) = model.decode_step(&mut tape, &tp, prev, h, c, mm, &enc)?;
        let ce = tape.softmax_cross_entropy(logits, target)?;
        loss_total = Some(match loss_total {
            Some(acc) => tape.add(acc, ce)?,
            None => ce,
        });
        h = h2;
        c = c2;
        let force = match rng.as_deref_mut() {
            Some(r) => r.gen_bool(cfg.teacher_forcing.clamp(0.0, 1.0)),
            None => true,
        };
        prev = if force {
            target
        } else {
            let data = tape.value(logits).data();
            data.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite logits"))
                .map(|(i, _)| i)
                .expect("non-empty vocabulary")
        };
    }
    let total = loss_total.expect("non-empty narration");
    let mean = tape.scale(total, 1.0 / targets.len() as f64);
    let value = tape.value(mean).item();
    if let Some(adam) = adam {
        tape.backward(mean)?;
        let grads = model.params.collect_grads(&tape, &tp);
        adam.step(&mut model.params, &grads)?;
    }
    Ok(value)
}

/// Trains a narrator model, selecting the epoch with the lowest validation
/// cross-entropy (computed with full teacher forcing).
pub fn train_narrator(
    model: &mut NarratorModel,
    train: &[NarrationInstance],
    valid: &[NarrationInstance],
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    if train.is_empty() {
        return Err(ModelError::EmptyInput("no training instances".into()));
    }
    let mut adam = AdamState::new(&model.params, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut log = TrainLog::default();
    let mut best_loss = f64::INFINITY;
    let mut best_params = snapshot(&model.params);
    let mut since_best = 0usize;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            total += narrator_loss_step(model, &train[i], Some(&mut adam), cfg, Some(&mut rng))?;
        }
        let train_loss = total / train.len() as f64;

        let eval: &[NarrationInstance] = if valid.is_empty() { train } else { valid };
        let mut vtotal = 0.0;
        for inst in eval {
            vtotal += narrator_loss_step(model, inst, None, cfg, None)?;
        }
        let valid_loss = vtotal / eval.len() as f64;

        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            valid_metric: valid_loss,
        });
        if valid_loss < best_loss {
            best_loss = valid_loss;
            best_params = snapshot(&model.params);
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }
    restore(&mut model.params, &best_params);
    Ok(log)
}

//! Narration timing and generation toolkit.
//!
//! The crate covers the full desk-scale pipeline for adding a narrator track
//! to token-aligned multimodal video transcripts:
//!
//! - [`corpus`] - the data model: episodes of time-aligned tokens with image
//!   and audio feature vectors, dialogue/narration segmentation, `Timing@n`
//!   labeling, narration instances, splits, vocabulary and statistics.
//! - [`syngen`] - a deterministic synthetic corpus generator used for tests
//!   and end-to-end experiments.
//! - [`autodiff`] - a minimal reverse-mode differentiation core with Adam.
//! - [`models`] - early fusion, LSTM, the incremental timing tagger, the
//!   narrator encoder-decoder family with attention and multimodal decoding,
//!   beam search, and both training loops.
//! - [`retrieval`] - TF-IDF, CCA and precomputed-embedding retrieval
//!   baselines.
//! - [`metrics`] - tagging P/R/F1, BLEU, ROUGE, METEOR-lite, CIDEr and the
//!   narration-as-summary evaluation.
//!
//! The `narb` binary wires these into subcommands; see the book under
//! `book/` for a guided tour.

pub mod autodiff;
pub mod corpus;
pub mod metrics;
pub mod models;
pub mod retrieval;
pub mod syngen;

/// Derives a stage-specific seed from the user-visible seed, so that every
/// pipeline stage draws from an independent, reproducible stream.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    // FNV-1a over the stage name, folded into the user seed.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in stage.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ seed
}

//! Neural models: early fusion, LSTM, the incremental timing tagger, the
//! narrator encoder-decoder family, beam search and the training loops.

mod beam;
mod fusion;
mod lstm;
mod narrator;
mod persist;
mod tagger;
mod train;

pub use beam::{beam_search, greedy_decode, Hypothesis};
pub use fusion::FusionLayer;
pub use lstm::LstmLayer;
pub use narrator::{
    attend, DecoderState, EncodedInstance, EncoderOut, NarratorModel, Variant,
};
pub use persist::{load_narrator, load_tagger, meta_path, save_narrator, save_tagger};
pub use tagger::TaggerModel;
pub use train::{train_narrator, train_tagger, EpochLog, TrainConfig, TrainLog};

use crate::autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("{0}")]
    Invalid(String),
    #[error("variant {variant}: {message}")]
    VariantMismatch { variant: String, message: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
}

type Result<T> = std::result::Result<T, ModelError>;

/// Width configuration shared by all models. Desk-scale defaults keep
/// training fast; the reference configuration (hidden 500, fusion and
/// embeddings 300) is selectable for parity with larger setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ModelDims {
    pub hidden: usize,
    pub fusion: usize,
    pub d_emb: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            hidden: 64,
            fusion: 32,
            d_emb: 32,
        }
    }
}

impl ModelDims {
    /// The full-scale configuration: hidden 500, fusion output 300,
    /// embedding width 300.
    pub fn reference() -> Self {
        ModelDims {
            hidden: 500,
            fusion: 300,
            d_emb: 300,
        }
    }
}

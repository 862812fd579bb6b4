//! Saving and loading trained models.
//!
//! Weights go into the binary checkpoint format; everything needed to rebuild
//! the architecture (variant, widths, vocabulary) goes into a JSON sidecar at
//! `<checkpoint>.meta.json`.

use super::{ModelDims, ModelError, NarratorModel, Result, TaggerModel, Variant};
use crate::autodiff::{load_checkpoint, save_checkpoint, ParamSet};
use crate::corpus::Vocab;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Meta {
    Tagger {
        multimodal: bool,
        dims: ModelDims,
        d_img: usize,
        d_aud: usize,
        vocab: Vocab,
    },
    Narrator {
        variant: Variant,
        mmd: bool,
        dims: ModelDims,
        d_img: usize,
        d_aud: usize,
        vocab: Vocab,
    },
}

pub fn meta_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    checkpoint.with_file_name(name)
}

fn write_meta(meta: &Meta, checkpoint: &Path) -> Result<()> {
    let file = std::fs::File::create(meta_path(checkpoint))
        .map_err(|e| ModelError::Invalid(e.to_string()))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), meta)
        .map_err(|e| ModelError::Invalid(e.to_string()))
}

fn read_meta(checkpoint: &Path) -> Result<Meta> {
    let path = meta_path(checkpoint);
    let file = std::fs::File::open(&path).map_err(|e| {
        ModelError::Invalid(format!("cannot open sidecar {}: {e}", path.display()))
    })?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| ModelError::Invalid(format!("bad sidecar {}: {e}", path.display())))
}

/// Replaces the parameters of a freshly built model with loaded ones,
/// checking that names and shapes line up exactly.
fn adopt_params(target: &mut ParamSet, loaded: ParamSet) -> Result<()> {
    if target.len() != loaded.len() {
        return Err(ModelError::Invalid(format!(
            "checkpoint has {} parameters, model expects {}",
            loaded.len(),
            target.len()
        )));
    }
    for (name, tensor) in loaded.iter() {
        let current = target.try_get(name).ok_or_else(|| {
            ModelError::Invalid(format!("checkpoint parameter {name} is not part of the model"))
        })?;
        if current.dims() != tensor.dims() {
            return Err(ModelError::Invalid(format!(
                "parameter {name}: checkpoint shape {:?} vs model shape {:?}",
                tensor.dims(),
                current.dims()
            )));
        }
        *target.get_mut(name) = tensor.clone();
    }
    Ok(())
}

pub fn save_tagger(model: &TaggerModel, checkpoint: &Path) -> Result<()> {
    save_checkpoint(&model.params, checkpoint)?;
    write_meta(
        &Meta::Tagger {
            multimodal: model.multimodal,
            dims: model.dims,
            d_img: model.d_img,
            d_aud: model.d_aud,
            vocab: model.vocab.clone(),
        },
        checkpoint,
    )
}

pub fn load_tagger(checkpoint: &Path) -> Result<TaggerModel> {
    let Meta::Tagger {
        multimodal,
        dims,
        d_img,
        d_aud,
        vocab,
    } = read_meta(checkpoint)?
    else {
        return Err(ModelError::Invalid(
            "checkpoint holds a narrator model, not a tagger".into(),
        ));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut model = TaggerModel::new(vocab, multimodal, dims, d_img, d_aud, &mut rng);
    adopt_params(&mut model.params, load_checkpoint(checkpoint)?)?;
    Ok(model)
}

pub fn save_narrator(model: &NarratorModel, checkpoint: &Path) -> Result<()> {
    save_checkpoint(&model.params, checkpoint)?;
    write_meta(
        &Meta::Narrator {
            variant: model.variant,
            mmd: model.mmd,
            dims: model.dims,
            d_img: model.d_img,
            d_aud: model.d_aud,
            vocab: model.vocab.clone(),
        },
        checkpoint,
    )
}

pub fn load_narrator(checkpoint: &Path) -> Result<NarratorModel> {
    let Meta::Narrator {
        variant,
        mmd,
        dims,
        d_img,
        d_aud,
        vocab,
    } = read_meta(checkpoint)?
    else {
        return Err(ModelError::Invalid(
            "checkpoint holds a tagger model, not a narrator".into(),
        ));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut model = NarratorModel::new(variant, mmd, vocab, dims, d_img, d_aud, &mut rng);
    adopt_params(&mut model.params, load_checkpoint(checkpoint)?)?;
    Ok(model)
}

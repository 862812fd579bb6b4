//! Deterministic synthetic cartoon-style corpus generator.
//!
//! Each episode is a sequence of scenes. A scene emits a short templated
//! dialogue exchange between its characters; with probability
//! `narration_rate` a templated narration follows, derived deterministically
//! from the scene state. Image features are a multi-hot encoding of
//! (characters, action, location) plus Gaussian noise; audio features are a
//! one-hot of the scene's sound event. With zero noise, narration text is a
//! deterministic function of the scene features, so generation models have
//! learnable signal at desk scale.

use crate::corpus::{Corpus, CorpusError, Episode, FeatureSpec, Speaker, Token};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynGenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("feature dimension too small: need at least {needed}, got {got}")]
    DimensionTooSmall { needed: usize, got: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// The latent content of one scene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneState {
    /// Indices into the cast inventory; at least one.
    pub characters: Vec<usize>,
    pub action: usize,
    pub location: usize,
    pub sound_event: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_episodes: usize,
    pub scenes_per_episode: usize,
    pub cast: Vec<String>,
    pub actions: Vec<String>,
    pub locations: Vec<String>,
    pub sounds: Vec<String>,
    /// Gaussian feature noise.
    pub sigma: f64,
    /// Probability that a scene is followed by a narration.
    pub narration_rate: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_episodes: 50,
            scenes_per_episode: 8,
            cast: strings(&[
                "peppa", "george", "mummy", "daddy", "suzy", "danny", "rebecca", "pedro",
            ]),
            actions: strings(&[
                "jumping", "playing", "running", "hiding", "singing", "painting", "digging",
                "skating",
            ]),
            locations: strings(&[
                "garden", "house", "playground", "forest", "pond", "school", "beach", "hill",
            ]),
            sounds: strings(&["giggle", "splash", "horn", "bell"]),
            sigma: 0.1,
            narration_rate: 0.6,
            seed: 0,
        }
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), SynGenError> {
        if self.n_episodes == 0 || self.scenes_per_episode == 0 {
            return Err(SynGenError::Config(
                "episode and scene counts must be positive".into(),
            ));
        }
        if self.cast.is_empty() || self.actions.is_empty() || self.locations.is_empty() {
            return Err(SynGenError::Config("inventories must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.narration_rate) {
            return Err(SynGenError::Config(format!(
                "narration_rate {} outside [0, 1]",
                self.narration_rate
            )));
        }
        if self.sigma < 0.0 {
            return Err(SynGenError::Config("sigma must be non-negative".into()));
        }
        Ok(())
    }

    /// Feature dimensions implied by the inventories.
    pub fn feature_spec(&self, d_emb: usize) -> FeatureSpec {
        FeatureSpec {
            d_img: self.cast.len() + self.actions.len() + self.locations.len(),
            d_aud: self.sounds.len().max(1),
            d_emb,
        }
    }
}

/// Multi-hot image vector over (characters, action, location) and one-hot
/// audio vector over the sound event, both with Gaussian noise `sigma`.
pub fn derive_features<R: Rng>(
    state: &SceneState,
    cfg: &GenConfig,
    sigma: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>), SynGenError> {
    let spec = cfg.feature_spec(0);
    let needed = cfg.cast.len() + cfg.actions.len() + cfg.locations.len();
    if spec.d_img < needed {
        return Err(SynGenError::DimensionTooSmall {
            needed,
            got: spec.d_img,
        });
    }
    let mut img = vec![0.0; spec.d_img];
    for &c in &state.characters {
        img[c] = 1.0;
    }
    img[cfg.cast.len() + state.action] = 1.0;
    img[cfg.cast.len() + cfg.actions.len() + state.location] = 1.0;
    let mut aud = vec![0.0; spec.d_aud];
    if let Some(s) = state.sound_event {
        aud[s] = 1.0;
    }
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).expect("sigma validated non-negative");
        for v in img.iter_mut().chain(aud.iter_mut()) {
            *v += noise.sample(rng);
        }
    }
    Ok((img, aud))
}

/// The narration text is a pure function of the scene state:
/// `"<character> is <action> at the <location> ."`.
pub fn narration_words(state: &SceneState, cfg: &GenConfig) -> Vec<String> {
    vec![
        cfg.cast[state.characters[0]].clone(),
        "is".into(),
        cfg.actions[state.action].clone(),
        "at".into(),
        "the".into(),
        cfg.locations[state.location].clone(),
        ".".into(),
    ]
}

fn dialogue_words<R: Rng>(state: &SceneState, cfg: &GenConfig, rng: &mut R) -> Vec<String> {
    let c1 = cfg.cast[state.characters[0]].as_str();
    let c2 = cfg.cast[state.characters[state.characters.len() - 1]].as_str();
    let action = cfg.actions[state.action].as_str();
    let location = cfg.locations[state.location].as_str();
    let mut words: Vec<String> = match rng.gen_range(0..3u8) {
        0 => strings(&["come", "on", c2, ",", "we", "are", action, "today", "."]),
        1 => strings(&["oh", c2, ",", "i", "do", "like", action, "with", "you", "."]),
        _ => strings(&[
            "where", "is", c1, "?", "let", "us", "go", "to", "the", location, ".",
        ]),
    };
    // Scenes that end in a narration close with an audible cue line.
    if state.sound_event.is_some() {
        words.extend(strings(&["listen", "!"]));
    }
    words
}

/// Generates a corpus. Fully reproducible from `cfg.seed`; each episode draws
/// from its own sub-seed, so per-episode content does not depend on episode
/// order.
pub fn generate_corpus(cfg: &GenConfig) -> Result<Corpus, SynGenError> {
    cfg.validate()?;
    let mut episodes = Vec::with_capacity(cfg.n_episodes);
    for e in 0..cfg.n_episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(e as u64).wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(e as u64));
        let mut tokens = Vec::new();
        let mut narration_sentences = Vec::new();
        let mut clock_ms: i64 = 0;
        for _ in 0..cfg.scenes_per_episode {
            let narrated = rng.gen_bool(cfg.narration_rate);
            let state = sample_scene(cfg, narrated, &mut rng);
            let (img, aud) = derive_features(&state, cfg, cfg.sigma, &mut rng)?;
            let mut push = |text: &str, speaker: Speaker, clock: &mut i64, rng: &mut ChaCha8Rng| {
                // per-token noise on top of the scene encoding
                let jitter = |base: &[f64], rng: &mut ChaCha8Rng| -> Vec<f64> {
                    if cfg.sigma > 0.0 {
                        let noise = Normal::new(0.0, cfg.sigma * 0.1).unwrap();
                        base.iter().map(|v| v + noise.sample(rng)).collect()
                    } else {
                        base.to_vec()
                    }
                };
                tokens.push(Token {
                    text: text.to_string(),
                    speaker,
                    start_ms: *clock,
                    end_ms: *clock + 300,
                    img_feat: jitter(&img, rng),
                    aud_feat: jitter(&aud, rng),
                });
                *clock += 300;
            };
            for w in dialogue_words(&state, cfg, &mut rng) {
                push(&w, Speaker::Dialogue, &mut clock_ms, &mut rng);
            }
            if narrated {
                let words = narration_words(&state, cfg);
                narration_sentences.push(words.join(" "));
                for w in words {
                    push(&w, Speaker::Narrator, &mut clock_ms, &mut rng);
                }
            }
        }
        let plot_summary = if narration_sentences.is_empty() {
            None
        } else {
            Some(narration_sentences.join(" "))
        };
        episodes.push(Episode {
            episode_id: format!("ep{e:04}"),
            title: format!("episode {e}"),
            plot_summary,
            tokens,
        });
    }
    Ok(Corpus::new(episodes)?)
}

fn sample_scene<R: Rng>(cfg: &GenConfig, narrated: bool, rng: &mut R) -> SceneState {
    let mut characters: Vec<usize> = (0..cfg.cast.len()).collect();
    characters.shuffle(rng);
    characters.truncate(2.min(cfg.cast.len()));
    characters.sort_unstable();
    SceneState {
        characters,
        action: rng.gen_range(0..cfg.actions.len()),
        location: rng.gen_range(0..cfg.locations.len()),
        sound_event: if narrated && !cfg.sounds.is_empty() {
            Some(rng.gen_range(0..cfg.sounds.len()))
        } else {
            None
        },
    }
}

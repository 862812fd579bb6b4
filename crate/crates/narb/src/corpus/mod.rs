//! Token-aligned multimodal data model: episodes, segments, timing labels,
//! narration instances, splits, vocabulary and dataset statistics.
//!
//! A corpus is stored as JSON Lines, one episode per line. Every token carries
//! its text, a speaker role (dialogue or narrator), a time span in
//! milliseconds and one dense feature vector per non-text modality.

mod segment;
mod split;
mod stats;

pub use segment::{extract_instances, label_timing, label_timing_brute_force, segment_dn};
pub use split::{build_vocab, split_corpus, SplitLevel, SplitSpec, Vocab, BOS, EOS, PAD, RESERVED, UNK};
pub use stats::{corpus_stats, Histogram, StatsReport};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed episode record: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error("corpus file is empty")]
    Empty,
    #[error("episode {episode_id}, token {index}: {message}")]
    BadToken {
        episode_id: String,
        index: usize,
        message: String,
    },
    #[error("episode {episode_id}: {message}")]
    BadEpisode { episode_id: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Dialogue,
    Narrator,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speaker::Dialogue => write!(f, "dialogue"),
            Speaker::Narrator => write!(f, "narrator"),
        }
    }
}

/// One aligned element of a video: a lexical token with its time span and
/// per-modality feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    #[serde(rename = "t")]
    pub text: String,
    pub speaker: Speaker,
    pub start_ms: i64,
    pub end_ms: i64,
    #[serde(rename = "img")]
    pub img_feat: Vec<f64>,
    #[serde(rename = "aud")]
    pub aud_feat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: String,
    pub title: String,
    pub plot_summary: Option<String>,
    pub tokens: Vec<Token>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Total span of the episode in milliseconds.
    pub fn duration_ms(&self) -> i64 {
        match (self.tokens.first(), self.tokens.last()) {
            (Some(first), Some(last)) => last.end_ms - first.start_ms,
            _ => 0,
        }
    }
}

/// Per-corpus feature dimensions, constant across all tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub d_img: usize,
    pub d_aud: usize,
    pub d_emb: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub episodes: Vec<Episode>,
    pub feature_spec: FeatureSpec,
}

impl Corpus {
    /// Builds a corpus from episodes, inferring the feature dimensions from the
    /// first token and validating every episode against them.
    pub fn new(episodes: Vec<Episode>) -> Result<Self, CorpusError> {
        let first = episodes
            .iter()
            .flat_map(|e| e.tokens.first())
            .next()
            .ok_or(CorpusError::Empty)?;
        let spec = FeatureSpec {
            d_img: first.img_feat.len(),
            d_aud: first.aud_feat.len(),
            d_emb: 0,
        };
        let corpus = Corpus {
            episodes,
            feature_spec: spec,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        for ep in &self.episodes {
            if ep.tokens.is_empty() {
                return Err(CorpusError::BadEpisode {
                    episode_id: ep.episode_id.clone(),
                    message: "episode has no tokens".into(),
                });
            }
            let mut prev_start = i64::MIN;
            for (i, tok) in ep.tokens.iter().enumerate() {
                let fail = |message: String| CorpusError::BadToken {
                    episode_id: ep.episode_id.clone(),
                    index: i,
                    message,
                };
                if tok.text.is_empty() {
                    return Err(fail("empty token text".into()));
                }
                if tok.start_ms > tok.end_ms {
                    return Err(fail(format!(
                        "start_ms {} > end_ms {}",
                        tok.start_ms, tok.end_ms
                    )));
                }
                if tok.start_ms < prev_start {
                    return Err(fail("tokens not ordered by start_ms".into()));
                }
                prev_start = tok.start_ms;
                if tok.img_feat.len() != self.feature_spec.d_img {
                    return Err(fail(format!(
                        "img feature dimension {} does not match corpus d_img {}",
                        tok.img_feat.len(),
                        self.feature_spec.d_img
                    )));
                }
                if tok.aud_feat.len() != self.feature_spec.d_aud {
                    return Err(fail(format!(
                        "aud feature dimension {} does not match corpus d_aud {}",
                        tok.aud_feat.len(),
                        self.feature_spec.d_aud
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn episode(&self, id: &str) -> Option<&Episode> {
        self.episodes.iter().find(|e| e.episode_id == id)
    }
}

/// Lowercased whitespace tokenization. This is the single tokenizer shared by
/// vocabulary construction, retrieval and all evaluation metrics.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(|w| w.to_lowercase()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Dialogue,
    Narration,
}

/// A maximal run of same-speaker tokens, as a half-open index range into the
/// episode's token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Binary timing labels for one episode: `labels[i]` is 1 iff a narrator token
/// occurs within the next `window_n` tokens after position `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingLabelSeq {
    pub window_n: usize,
    pub labels: Vec<u8>,
}

/// One training unit for narration generation: the dialogue before a narration
/// span, the narration itself, and the dialogue after it.
#[derive(Debug, Clone, PartialEq)]
pub struct NarrationInstance {
    /// `"<episode_id>#<k>"` where `k` is the index of the narration segment.
    pub id: String,
    pub prev_dialogue: Vec<Token>,
    pub narration: Vec<Token>,
    pub next_dialogue: Vec<Token>,
}

impl NarrationInstance {
    pub fn prev_text(&self) -> String {
        join_tokens(&self.prev_dialogue)
    }

    pub fn narration_text(&self) -> String {
        join_tokens(&self.narration)
    }
}

pub(crate) fn join_tokens(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut episodes = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let episode: Episode = serde_json::from_str(&line).map_err(|source| {
            CorpusError::Malformed {
                line: lineno + 1,
                source,
            }
        })?;
        episodes.push(episode);
    }
    Corpus::new(episodes)
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for ep in &corpus.episodes {
        serde_json::to_writer(&mut w, ep).map_err(|e| CorpusError::Invalid(e.to_string()))?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Episode with the given speaker pattern; token texts are "w0", "w1", ...
    pub fn episode_from_speakers(id: &str, speakers: &[Speaker]) -> Episode {
        let tokens = speakers
            .iter()
            .enumerate()
            .map(|(i, &speaker)| Token {
                text: format!("w{i}"),
                speaker,
                start_ms: i as i64 * 300,
                end_ms: i as i64 * 300 + 300,
                img_feat: vec![0.0; 3],
                aud_feat: vec![0.0; 2],
            })
            .collect();
        Episode {
            episode_id: id.to_string(),
            title: id.to_string(),
            plot_summary: None,
            tokens,
        }
    }

    pub fn speakers(pattern: &str) -> Vec<Speaker> {
        pattern
            .chars()
            .map(|c| match c {
                'D' => Speaker::Dialogue,
                'N' => Speaker::Narrator,
                other => panic!("unknown speaker char {other}"),
            })
            .collect()
    }
}

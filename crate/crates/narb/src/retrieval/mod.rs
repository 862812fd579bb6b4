//! Text-only retrieval baselines: TF-IDF nearest neighbor, CCA shared-space
//! retrieval and retrieval over externally computed sentence embeddings.
//!
//! All three return a verbatim narration from the training set. TF-IDF and
//! precomputed-embedding retrieval match the query dialogue against training
//! dialogues and return the paired narration; CCA projects both views into a
//! shared space and matches the projected query dialogue against projected
//! training narrations directly.

mod cca;

pub use cca::{fit_cca, CcaModel, CcaRetriever};

use crate::corpus::{tokenize, NarrationInstance};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("empty training set")]
    EmptyTraining,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    BadTable {
        path: String,
        line: usize,
        message: String,
    },
    #[error("unknown id {0}")]
    UnknownId(String),
    #[error("dimension mismatch: query has {query}, table has {table}")]
    DimensionMismatch { query: usize, table: usize },
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, RetrievalError>;

/// Sparse cosine similarity. Zero against the zero vector.
pub(crate) fn sparse_cosine(a: &HashMap<usize, f64>, b: &HashMap<usize, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(k, &x)| b.get(k).map(|&y| x * y))
        .sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub(crate) fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// The most frequent narration text; frequency ties go to the
/// lexicographically smallest text. Used as the fallback answer for queries
/// that produce a zero vector.
fn most_frequent_narration(train: &[NarrationInstance]) -> String {
    let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
    for inst in train {
        *counts.entry(inst.narration_text()).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(text, _)| text)
        .unwrap_or_default()
}

/// TF-IDF index over the training instances. The idf table treats every
/// training dialogue and every training narration as one document:
/// `idf = ln((1+N)/(1+df)) + 1`, so a term present in every document still
/// gets weight 1.
pub struct TfidfIndex {
    term_index: HashMap<String, usize>,
    idf: Vec<f64>,
    /// (instance id, dialogue vector, narration text), sorted by id so that
    /// similarity ties resolve to the lowest id.
    entries: Vec<(String, HashMap<usize, f64>, String)>,
    fallback: String,
}

impl TfidfIndex {
    /// TF-IDF vector of a text: raw term counts times idf. Terms outside the
    /// training vocabulary contribute nothing.
    pub fn vectorize(&self, text: &str) -> HashMap<usize, f64> {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for tok in tokenize(text) {
            if let Some(&i) = self.term_index.get(&tok) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        for (i, v) in counts.iter_mut() {
            *v *= self.idf[*i];
        }
        counts
    }

    /// Dense TF-IDF vector over the full term axis, for consumers that need
    /// fixed-width vectors (CCA fitting).
    pub fn vectorize_dense(&self, text: &str) -> Vec<f64> {
        let mut dense = vec![0.0; self.idf.len()];
        for (i, v) in self.vectorize(text) {
            dense[i] = v;
        }
        dense
    }

    /// Number of distinct training terms, the width of dense vectors.
    pub fn term_count(&self) -> usize {
        self.idf.len()
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.term_index.get(term).map(|&i| self.idf[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fallback_narration(&self) -> &str {
        &self.fallback
    }
}

pub fn fit_tfidf(train: &[NarrationInstance]) -> Result<TfidfIndex> {
    if train.is_empty() {
        return Err(RetrievalError::EmptyTraining);
    }
    // document collection: every dialogue and every narration
    let docs: Vec<Vec<String>> = train
        .iter()
        .flat_map(|inst| [tokenize(&inst.prev_text()), tokenize(&inst.narration_text())])
        .collect();
    let n_docs = docs.len() as f64;

    let mut df: std::collections::BTreeMap<String, usize> = Default::default();
    for doc in &docs {
        let distinct: std::collections::BTreeSet<&String> = doc.iter().collect();
        for term in distinct {
            *df.entry(term.clone()).or_insert(0) += 1;
        }
    }
    let mut term_index = HashMap::new();
    let mut idf = Vec::with_capacity(df.len());
    for (i, (term, count)) in df.into_iter().enumerate() {
        term_index.insert(term, i);
        idf.push(((1.0 + n_docs) / (1.0 + count as f64)).ln() + 1.0);
    }

    let fallback = most_frequent_narration(train);
    let mut index = TfidfIndex {
        term_index,
        idf,
        entries: Vec::with_capacity(train.len()),
        fallback,
    };
    let mut entries: Vec<_> = train
        .iter()
        .map(|inst| {
            (
                inst.id.clone(),
                index.vectorize(&inst.prev_text()),
                inst.narration_text(),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    index.entries = entries;
    Ok(index)
}

/// Returns the narration paired with the training dialogue most similar to
/// the query dialogue, by cosine over TF-IDF vectors. A zero query vector
/// falls back to the most frequent training narration.
pub fn retrieve_tfidf<'a>(index: &'a TfidfIndex, query_dialogue: &str) -> &'a str {
    let query = index.vectorize(query_dialogue);
    if query.is_empty() {
        return &index.fallback;
    }
    let mut best: Option<(f64, &str)> = None;
    for (_, vec, narration) in &index.entries {
        let sim = sparse_cosine(&query, vec);
        // strict comparison keeps the earliest (lowest-id) entry on ties
        if best.map_or(true, |(b, _)| sim > b) {
            best = Some((sim, narration));
        }
    }
    best.map(|(_, n)| n).unwrap_or(&index.fallback)
}

/// Dense vectors keyed by id, loaded from a TSV of the form
/// `id <TAB> v1 <TAB> ... <TAB> vD`.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub dim: usize,
    entries: std::collections::BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn load(path: &Path) -> Result<Self> {
        let file = BufReader::new(File::open(path)?);
        let display = path.display().to_string();
        let mut entries = std::collections::BTreeMap::new();
        let mut dim = None;
        for (lineno, line) in file.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let id = fields
                .next()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| RetrievalError::BadTable {
                    path: display.clone(),
                    line: lineno + 1,
                    message: "missing id field".into(),
                })?
                .to_string();
            let vector: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|e| RetrievalError::BadTable {
                        path: display.clone(),
                        line: lineno + 1,
                        message: format!("bad value {f:?}: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if vector.is_empty() {
                return Err(RetrievalError::BadTable {
                    path: display.clone(),
                    line: lineno + 1,
                    message: "no vector values".into(),
                });
            }
            match dim {
                None => dim = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(RetrievalError::BadTable {
                        path: display.clone(),
                        line: lineno + 1,
                        message: format!("dimension {} does not match table dimension {d}", vector.len()),
                    });
                }
                _ => {}
            }
            entries.insert(id, vector);
        }
        let dim = dim.ok_or_else(|| RetrievalError::BadTable {
            path: display,
            line: 0,
            message: "empty table".into(),
        })?;
        Ok(EmbeddingTable { dim, entries })
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Nearest-training-dialogue retrieval over precomputed embeddings: the query
/// id's vector is compared to the vector of every training instance id, and
/// the paired narration of the closest one is returned. `train` maps instance
/// ids to narration texts; ids are matched in sorted order so ties resolve to
/// the lowest id.
pub fn retrieve_precomputed<'a>(
    table: &EmbeddingTable,
    train: &'a [(String, String)],
    query_id: &str,
) -> Result<&'a str> {
    let query = table
        .get(query_id)
        .ok_or_else(|| RetrievalError::UnknownId(query_id.to_string()))?;
    let mut sorted: Vec<&(String, String)> = train.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut best: Option<(f64, &str)> = None;
    for (id, narration) in sorted {
        let vec = table
            .get(id)
            .ok_or_else(|| RetrievalError::UnknownId(id.clone()))?;
        if vec.len() != query.len() {
            return Err(RetrievalError::DimensionMismatch {
                query: query.len(),
                table: vec.len(),
            });
        }
        let sim = dense_cosine(query, vec);
        if best.map_or(true, |(b, _)| sim > b) {
            best = Some((sim, narration));
        }
    }
    best.map(|(_, n)| n)
        .ok_or(RetrievalError::EmptyTraining)
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::corpus::{NarrationInstance, Speaker, Token};

    pub fn text_tokens(text: &str, speaker: Speaker) -> Vec<Token> {
        text.split_whitespace()
            .enumerate()
            .map(|(i, w)| Token {
                text: w.to_string(),
                speaker,
                start_ms: i as i64 * 300,
                end_ms: (i as i64 + 1) * 300,
                img_feat: vec![0.0],
                aud_feat: vec![0.0],
            })
            .collect()
    }

    pub fn instance(id: &str, dialogue: &str, narration: &str) -> NarrationInstance {
        NarrationInstance {
            id: id.to_string(),
            prev_dialogue: text_tokens(dialogue, Speaker::Dialogue),
            narration: text_tokens(narration, Speaker::Narrator),
            next_dialogue: Vec::new(),
        }
    }
}

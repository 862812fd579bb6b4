//! Evaluation: tagging precision/recall/F1, word-overlap generation metrics
//! (BLEU, ROUGE, METEOR-lite, CIDEr) and the narration-as-summary evaluation
//! with its 75-byte mode.
//!
//! All metrics tokenize text with [`crate::corpus::tokenize`], the same
//! function used everywhere else, so scores never disagree with the corpus
//! view of a sentence.

mod bleu;
mod cider;
mod meteor;
mod rouge;

pub use bleu::bleu_corpus;
pub use cider::cider;
pub use meteor::meteor_lite;
pub use rouge::{rouge_l, rouge_n};

use crate::corpus::{tokenize, Corpus, Speaker};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} candidates vs {right} references")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, MetricsError>;

/// Precision, recall and F1 of the positive class. Zero-denominator cases
/// are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggingReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

pub fn prf(gold: &[u8], pred: &[u8]) -> Result<TaggingReport> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (&g, &p) in gold.iter().zip(pred) {
        match (p != 0, g != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(TaggingReport {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
    })
}

/// Generation scores on the conventional magnitudes: BLEU, ROUGE and METEOR
/// on a 0..100 scale, CIDEr on a 0..10 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenReport {
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub rouge_l: f64,
    pub meteor: f64,
    pub cider: f64,
}

pub const GEN_REPORT_HEADER: &str = "system\tBLEU-1\tBLEU-2\tBLEU-3\tROUGE-L\tMETEOR\tCIDEr";

impl GenReport {
    pub fn tsv_row(&self, system: &str) -> String {
        format!(
            "{system}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}",
            self.bleu_1, self.bleu_2, self.bleu_3, self.rouge_l, self.meteor, self.cider
        )
    }
}

/// Writes one TSV with a header line and one row per system.
pub fn write_gen_reports(path: &Path, rows: &[(String, GenReport)]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{GEN_REPORT_HEADER}")?;
    for (system, report) in rows {
        writeln!(f, "{}", report.tsv_row(system))?;
    }
    Ok(())
}

/// Scores system outputs against gold narrations, one reference per output.
/// Empty candidates contribute zero to every metric instead of erroring, so
/// degenerate systems evaluate cleanly.
pub fn evaluate_generation(outputs: &[String], gold: &[String]) -> Result<GenReport> {
    if outputs.len() != gold.len() {
        return Err(MetricsError::LengthMismatch {
            left: outputs.len(),
            right: gold.len(),
        });
    }
    if outputs.is_empty() {
        return Err(MetricsError::EmptyInput("no output/reference pairs".into()));
    }
    let cands: Vec<Vec<String>> = outputs.iter().map(|s| tokenize(s)).collect();
    let refs: Vec<Vec<String>> = gold.iter().map(|s| tokenize(s)).collect();

    let bleu = bleu_corpus(&cands, &refs, 3)?;
    let mut rouge_sum = 0.0;
    let mut meteor_sum = 0.0;
    for (c, r) in cands.iter().zip(&refs) {
        if c.is_empty() || r.is_empty() {
            continue;
        }
        rouge_sum += rouge_l(c, r)?.2;
        meteor_sum += meteor_lite(c, r)?;
    }
    let n = cands.len() as f64;
    Ok(GenReport {
        bleu_1: bleu[0],
        bleu_2: bleu[1],
        bleu_3: bleu[2],
        rouge_l: 100.0 * rouge_sum / n,
        meteor: 100.0 * meteor_sum / n,
        cider: cider(&cands, &refs)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryMode {
    /// Full concatenated narration text.
    Full,
    /// The first 75 bytes of the narration text, truncated at a character
    /// boundary.
    Bytes75,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Macro-averaged ROUGE scores of narration-as-summary against plot
/// summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub mode: SummaryMode,
    pub episodes: usize,
    pub rouge_1: PrfScores,
    pub rouge_2: PrfScores,
    pub rouge_l: PrfScores,
}

impl SummaryReport {
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "metric\tprecision\trecall\tf1")?;
        for (name, s) in [
            ("ROUGE-1", self.rouge_1),
            ("ROUGE-2", self.rouge_2),
            ("ROUGE-L", self.rouge_l),
        ] {
            writeln!(
                f,
                "{name}\t{:.2}\t{:.2}\t{:.2}",
                100.0 * s.precision,
                100.0 * s.recall,
                100.0 * s.f1
            )?;
        }
        Ok(())
    }
}

/// Truncates to at most `max` bytes without splitting a UTF-8 codepoint.
pub fn truncate_utf8(s: &str, max: usize) -> &str {
    if s.len() <= max {
        return s;
    }
    let mut end = max;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    &s[..end]
}

/// The candidate summary of an episode: all narrator token texts in order.
pub fn narration_summary(corpus: &Corpus, episode_index: usize) -> String {
    corpus.episodes[episode_index]
        .tokens
        .iter()
        .filter(|t| t.speaker == Speaker::Narrator)
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Evaluates concatenated narrations as episode summaries against each
/// episode's plot summary, macro-averaging ROUGE-1/2/L over episodes.
pub fn narration_summary_eval(corpus: &Corpus, mode: SummaryMode) -> Result<SummaryReport> {
    let mut totals = [PrfScores { precision: 0.0, recall: 0.0, f1: 0.0 }; 3];
    let mut episodes = 0usize;
    for (i, ep) in corpus.episodes.iter().enumerate() {
        let Some(summary) = ep.plot_summary.as_deref() else {
            continue;
        };
        let reference = tokenize(summary);
        if reference.is_empty() {
            continue;
        }
        let full = narration_summary(corpus, i);
        let candidate_text = match mode {
            SummaryMode::Full => full.as_str(),
            SummaryMode::Bytes75 => truncate_utf8(&full, 75),
        };
        let candidate = tokenize(candidate_text);
        episodes += 1;
        if candidate.is_empty() {
            continue; // counts as zero for every metric
        }
        let cand_set = std::slice::from_ref(&candidate);
        let ref_set = std::slice::from_ref(&reference);
        let scores = [
            rouge_n(cand_set, ref_set, 1)?,
            rouge_n(cand_set, ref_set, 2)?,
            rouge_l(&candidate, &reference)?,
        ];
        for (total, (p, r, f)) in totals.iter_mut().zip(scores) {
            total.precision += p;
            total.recall += r;
            total.f1 += f;
        }
    }
    if episodes == 0 {
        return Err(MetricsError::EmptyInput(
            "no episode carries a plot summary".into(),
        ));
    }
    let avg = |s: PrfScores| PrfScores {
        precision: s.precision / episodes as f64,
        recall: s.recall / episodes as f64,
        f1: s.f1 / episodes as f64,
    };
    Ok(SummaryReport {
        mode,
        episodes,
        rouge_1: avg(totals[0]),
        rouge_2: avg(totals[1]),
        rouge_l: avg(totals[2]),
    })
}

/// Counts of n-grams of a token sequence. Shared by the overlap metrics.
pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> std::collections::HashMap<Vec<String>, usize> {
    let mut counts = std::collections::HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
pub(crate) fn toks(s: &str) -> Vec<String> {
    tokenize(s)
}

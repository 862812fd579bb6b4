//! Dataset statistics and plot-ready histogram tables.

use super::{segment_dn, tokenize, Corpus, CorpusError, SegmentKind};
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

/// One histogram: labelled bins with counts, emitted as a two-column TSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub name: String,
    pub bins: Vec<(String, usize)>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|(_, c)| c).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub episodes: usize,
    pub narrations: usize,
    pub avg_dialogue_len: f64,
    pub avg_narration_len: f64,
    /// Distinct lowercased words appearing in narrations.
    pub narration_vocab: usize,
    /// Narration words never used in dialogue.
    pub narration_unique_vocab: usize,
    /// Narration length in sentences, in tokens, narrations per episode, and
    /// relative narration start position (ten bins over the episode span).
    pub histograms: Vec<Histogram>,
}

fn count_histogram(name: &str, values: impl IntoIterator<Item = usize>) -> Histogram {
    let mut counts = std::collections::BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    Histogram {
        name: name.to_string(),
        bins: counts.into_iter().map(|(k, c)| (k.to_string(), c)).collect(),
    }
}

fn sentence_count(tokens: &[String]) -> usize {
    let terminal = tokens
        .iter()
        .filter(|t| t.ends_with('.') || t.ends_with('!') || t.ends_with('?'))
        .count();
    terminal.max(1)
}

pub fn corpus_stats(corpus: &Corpus) -> Result<StatsReport, CorpusError> {
    if corpus.episodes.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut narration_lens = Vec::new();
    let mut narration_sentences = Vec::new();
    let mut dialogue_lens = Vec::new();
    let mut per_episode = Vec::new();
    let mut start_positions = Vec::new();
    let mut narration_words = BTreeSet::new();
    let mut dialogue_words = BTreeSet::new();

    for ep in &corpus.episodes {
        let duration = ep.duration_ms().max(1) as f64;
        let origin = ep.tokens[0].start_ms;
        let mut narrations_here = 0;
        for seg in segment_dn(ep) {
            let words: Vec<String> = ep.tokens[seg.start..seg.end]
                .iter()
                .flat_map(|t| tokenize(&t.text))
                .collect();
            match seg.kind {
                SegmentKind::Narration => {
                    narrations_here += 1;
                    narration_lens.push(seg.len());
                    narration_sentences.push(sentence_count(&words));
                    let rel = (ep.tokens[seg.start].start_ms - origin) as f64 / duration;
                    start_positions.push(((rel * 10.0) as usize).min(9));
                    narration_words.extend(words);
                }
                SegmentKind::Dialogue => {
                    dialogue_lens.push(seg.len());
                    dialogue_words.extend(words);
                }
            }
        }
        per_episode.push(narrations_here);
    }

    let avg = |v: &[usize]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<usize>() as f64 / v.len() as f64
        }
    };
    let unique = narration_words
        .iter()
        .filter(|w| !dialogue_words.contains(*w))
        .count();

    Ok(StatsReport {
        episodes: corpus.episodes.len(),
        narrations: narration_lens.len(),
        avg_dialogue_len: avg(&dialogue_lens),
        avg_narration_len: avg(&narration_lens),
        narration_vocab: narration_words.len(),
        narration_unique_vocab: unique,
        histograms: vec![
            count_histogram("narration_length_sentences", narration_sentences),
            count_histogram("narration_length_tokens", narration_lens.iter().copied()),
            count_histogram("narrations_per_episode", per_episode),
            count_histogram("narration_start_decile", start_positions),
        ],
    })
}

impl StatsReport {
    /// Writes `stats.tsv` plus one TSV per histogram into `dir`.
    pub fn write_tsv(&self, dir: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dir)?;
        let mut out = String::from("statistic\tvalue\n");
        out.push_str(&format!("episodes\t{}\n", self.episodes));
        out.push_str(&format!("narrations\t{}\n", self.narrations));
        out.push_str(&format!("dialogue_length_avg\t{:.2}\n", self.avg_dialogue_len));
        out.push_str(&format!("narration_length_avg\t{:.2}\n", self.avg_narration_len));
        out.push_str(&format!("narration_vocab\t{}\n", self.narration_vocab));
        out.push_str(&format!(
            "narration_unique_vocab\t{}\n",
            self.narration_unique_vocab
        ));
        fs::write(dir.join("stats.tsv"), out)?;
        for hist in &self.histograms {
            let mut out = String::from("bin\tcount\n");
            for (bin, count) in &hist.bins {
                out.push_str(&format!("{bin}\t{count}\n"));
            }
            fs::write(dir.join(format!("{}.tsv", hist.name)), out)?;
        }
        Ok(())
    }
}

//! Deterministic train/valid/test splits and vocabulary construction.

use super::{extract_instances, tokenize, Corpus, CorpusError, NarrationInstance};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLevel {
    /// Whole episodes are assigned to splits (timing task).
    Episode,
    /// Narration instances are assigned to splits (generation task).
    Instance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub level: SplitLevel,
    pub seed: u64,
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

impl SplitSpec {
    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(w, self).map_err(|e| CorpusError::Invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let r = BufReader::new(File::open(path)?);
        serde_json::from_reader(r).map_err(|e| CorpusError::Invalid(e.to_string()))
    }

    /// All narration instances of the corpus whose ids are in the given list,
    /// in list order. Only meaningful for instance-level splits.
    pub fn instances_for<'a>(
        &self,
        corpus: &Corpus,
        ids: &'a [String],
    ) -> Vec<NarrationInstance> {
        let mut by_id: HashMap<String, NarrationInstance> = corpus
            .episodes
            .iter()
            .flat_map(extract_instances)
            .map(|inst| (inst.id.clone(), inst))
            .collect();
        ids.iter().filter_map(|id| by_id.remove(id)).collect()
    }
}

/// Splits ids with the largest-remainder rule: each split first gets
/// `floor(n * ratio)` items, then leftovers go to the splits with the largest
/// fractional remainders.
pub fn split_corpus(
    corpus: &Corpus,
    ratios: (f64, f64, f64),
    level: SplitLevel,
    seed: u64,
) -> Result<SplitSpec, CorpusError> {
    let (a, b, c) = ratios;
    if (a + b + c - 1.0).abs() > 1e-9 || a < 0.0 || b < 0.0 || c < 0.0 {
        return Err(CorpusError::Invalid(format!(
            "split ratios ({a}, {b}, {c}) must be non-negative and sum to 1"
        )));
    }
    let mut ids: Vec<String> = match level {
        SplitLevel::Episode => corpus.episodes.iter().map(|e| e.episode_id.clone()).collect(),
        SplitLevel::Instance => corpus
            .episodes
            .iter()
            .flat_map(extract_instances)
            .map(|inst| inst.id)
            .collect(),
    };
    let n = ids.len();
    if n < 3 {
        return Err(CorpusError::Invalid(format!(
            "need at least 3 items to split, found {n}"
        )));
    }
    ids.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let raw = [a * n as f64, b * n as f64, c * n as f64];
    let mut sizes = [raw[0] as usize, raw[1] as usize, raw[2] as usize];
    let mut leftover = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&i, &j| {
        let fi = raw[i] - raw[i] as usize as f64;
        let fj = raw[j] - raw[j] as usize as f64;
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for &i in &order {
        if leftover == 0 {
            break;
        }
        sizes[i] += 1;
        leftover -= 1;
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(CorpusError::Invalid(format!(
            "too few items ({n}) for ratios ({a}, {b}, {c}): some split would be empty"
        )));
    }

    let valid_start = sizes[0];
    let test_start = sizes[0] + sizes[1];
    Ok(SplitSpec {
        level,
        seed,
        train: ids[..valid_start].to_vec(),
        valid: ids[valid_start..test_start].to_vec(),
        test: ids[test_start..].to_vec(),
    })
}

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

/// Token-to-index table built from the training split only. Indices 0..3 are
/// reserved for padding, unknown, begin and end symbols. Serializes as the
/// plain word list; the index is rebuilt on deserialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Serialize for Vocab {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.words.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocab {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Vocab::from_words(Vec::<String>::deserialize(deserializer)?))
    }
}

impl Vocab {
    fn from_words(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocab { words, index }
    }

    /// Builds a vocabulary from the given content words, prepending the four
    /// reserved symbols. Useful for small fixtures.
    pub fn of_words<I, S>(content: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut words: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        words.extend(content.into_iter().map(|w| w.into().to_lowercase()));
        Vocab::from_words(words)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Index of a token, falling back to `UNK` for unseen words.
    pub fn lookup(&self, token: &str) -> usize {
        let lower = token.to_lowercase();
        self.index.get(&lower).copied().unwrap_or(UNK)
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(w, &self.words)
            .map_err(|e| CorpusError::Invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let r = BufReader::new(File::open(path)?);
        let words: Vec<String> =
            serde_json::from_reader(r).map_err(|e| CorpusError::Invalid(e.to_string()))?;
        Ok(Vocab::from_words(words))
    }
}

/// Builds the vocabulary from every distinct lowercased token of the training
/// split, plus the four reserved symbols.
pub fn build_vocab(corpus: &Corpus, split: &SplitSpec) -> Result<Vocab, CorpusError> {
    if split.train.is_empty() {
        return Err(CorpusError::Invalid("training split is empty".into()));
    }
    let mut distinct = BTreeSet::new();
    match split.level {
        SplitLevel::Episode => {
            for id in &split.train {
                let ep = corpus.episode(id).ok_or_else(|| {
                    CorpusError::Invalid(format!("split references unknown episode {id}"))
                })?;
                for tok in &ep.tokens {
                    distinct.extend(tokenize(&tok.text));
                }
            }
        }
        SplitLevel::Instance => {
            for inst in split.instances_for(corpus, &split.train) {
                for tok in inst
                    .prev_dialogue
                    .iter()
                    .chain(&inst.narration)
                    .chain(&inst.next_dialogue)
                {
                    distinct.extend(tokenize(&tok.text));
                }
            }
        }
    }
    let mut words: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    words.extend(distinct);
    Ok(Vocab::from_words(words))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::corpus::Speaker;

    fn corpus_of(n: usize) -> Corpus {
        let episodes = (0..n)
            .map(|i| episode_from_speakers(&format!("ep{i:03}"), &speakers("DDNND")))
            .collect();
        Corpus::new(episodes).unwrap()
    }

    #[test]
    fn ten_episodes_eight_one_one() {
        let corpus = corpus_of(10);
        let split = split_corpus(&corpus, (0.8, 0.1, 0.1), SplitLevel::Episode, 7).unwrap();
        assert_eq!(split.train.len(), 8);
        assert_eq!(split.valid.len(), 1);
        assert_eq!(split.test.len(), 1);
    }

    #[test]
    fn split_is_deterministic() {
        let corpus = corpus_of(10);
        let a = split_corpus(&corpus, (0.8, 0.1, 0.1), SplitLevel::Episode, 7).unwrap();
        let b = split_corpus(&corpus, (0.8, 0.1, 0.1), SplitLevel::Episode, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn largest_remainder_distribution() {
        let corpus = corpus_of(209);
        let split = split_corpus(&corpus, (0.8, 0.1, 0.1), SplitLevel::Episode, 1).unwrap();
        assert_eq!(split.train.len(), 167);
        assert_eq!(split.valid.len(), 21);
        assert_eq!(split.test.len(), 21);
    }

    #[test]
    fn split_is_a_partition() {
        let corpus = corpus_of(31);
        let split = split_corpus(&corpus, (0.6, 0.2, 0.2), SplitLevel::Instance, 3).unwrap();
        let all: BTreeSet<_> = split
            .train
            .iter()
            .chain(&split.valid)
            .chain(&split.test)
            .collect();
        let total = split.train.len() + split.valid.len() + split.test.len();
        assert_eq!(all.len(), total); // disjoint
        let expected: usize = corpus.episodes.iter().map(|e| extract_instances(e).len()).sum();
        assert_eq!(total, expected); // covering
    }

    #[test]
    fn too_few_items_is_an_error() {
        let corpus = corpus_of(2);
        assert!(split_corpus(&corpus, (0.8, 0.1, 0.1), SplitLevel::Episode, 1).is_err());
    }

    fn text_episode(id: &str, words: &[&str], speaker: Speaker) -> crate::corpus::Episode {
        let mut ep = episode_from_speakers(id, &vec![speaker; words.len()]);
        for (tok, w) in ep.tokens.iter_mut().zip(words) {
            tok.text = w.to_string();
        }
        ep
    }

    #[test]
    fn vocab_from_training_split_only() {
        let train_ep = text_episode("train", &["A", "b", "a"], Speaker::Dialogue);
        let test_ep = text_episode("test", &["zzz"], Speaker::Dialogue);
        let corpus = Corpus::new(vec![train_ep, test_ep]).unwrap();
        let split = SplitSpec {
            level: SplitLevel::Episode,
            seed: 0,
            train: vec!["train".into()],
            valid: vec!["train".into()],
            test: vec!["test".into()],
        };
        let vocab = build_vocab(&corpus, &split).unwrap();
        assert_eq!(vocab.len(), 6); // {a, b} + 4 reserved
        assert_eq!(vocab.lookup("A"), vocab.lookup("a"));
        assert_eq!(vocab.lookup("zzz"), UNK);
    }

    #[test]
    fn vocab_size_equals_distinct_plus_reserved() {
        let corpus = corpus_of(12);
        let split = split_corpus(&corpus, (0.8, 0.1, 0.1), SplitLevel::Episode, 5).unwrap();
        let mut distinct = BTreeSet::new();
        for id in &split.train {
            for tok in &corpus.episode(id).unwrap().tokens {
                distinct.insert(tok.text.to_lowercase());
            }
        }
        let vocab = build_vocab(&corpus, &split).unwrap();
        assert_eq!(vocab.len(), distinct.len() + 4);
    }
}

//! CIDEr: consensus scoring with TF-IDF weighted n-gram vectors.

use super::{ngram_counts, MetricsError, Result};
use std::collections::HashMap;

/// Corpus CIDEr with one reference per candidate, on the conventional 0..10
/// scale.
///
/// Document frequencies come from the reference corpus, one document per
/// reference, with `idf = ln(N/df)`. For each order n = 1..4, candidate and
/// reference sentences become TF-IDF vectors (raw term frequency times idf)
/// and are compared by cosine, with `cosine(0, ·) = 0`. The pair score is 10
/// times the mean over orders; the corpus score averages over pairs.
pub fn cider(candidates: &[Vec<String>], references: &[Vec<String>]) -> Result<f64> {
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricsError::EmptyInput("empty corpus".into()));
    }

    let n_docs = references.len() as f64;
    // per order: n-gram -> idf
    let idf_tables: Vec<HashMap<Vec<String>, f64>> = (1..=4)
        .map(|n| {
            let mut df: HashMap<Vec<String>, usize> = HashMap::new();
            for reference in references {
                for gram in ngram_counts(reference, n).into_keys() {
                    *df.entry(gram).or_insert(0) += 1;
                }
            }
            df.into_iter()
                .map(|(gram, count)| (gram, (n_docs / count as f64).ln()))
                .collect()
        })
        .collect();

    let mut total = 0.0;
    for (cand, reference) in candidates.iter().zip(references) {
        let mut pair = 0.0;
        for (n, idf) in (1..=4).zip(&idf_tables) {
            let c_vec = tfidf_vector(cand, n, idf);
            let r_vec = tfidf_vector(reference, n, idf);
            pair += cosine(&c_vec, &r_vec);
        }
        total += 10.0 * pair / 4.0;
    }
    Ok(total / candidates.len() as f64)
}

fn tfidf_vector(
    tokens: &[String],
    n: usize,
    idf: &HashMap<Vec<String>, f64>,
) -> HashMap<Vec<String>, f64> {
    ngram_counts(tokens, n)
        .into_iter()
        .filter_map(|(gram, tf)| {
            idf.get(&gram).map(|&w| (gram, tf as f64 * w))
        })
        .collect()
}

fn cosine(a: &HashMap<Vec<String>, f64>, b: &HashMap<Vec<String>, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(gram, &x)| b.get(gram).map(|&y| x * y))
        .sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

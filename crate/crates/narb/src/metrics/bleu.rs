//! Corpus-level BLEU with modified (clipped) n-gram precision.

use super::{ngram_counts, MetricsError, Result};

/// Corpus BLEU-1 .. BLEU-`max_n`, each on a 0..100 scale. One reference per
/// candidate. Precision counts are pooled over the corpus before the
/// geometric mean; the brevity penalty uses total candidate and reference
/// lengths. Any zero pooled precision zeroes the affected orders.
pub fn bleu_corpus(
    candidates: &[Vec<String>],
    references: &[Vec<String>],
    max_n: usize,
) -> Result<Vec<f64>> {
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricsError::EmptyInput("empty corpus".into()));
    }

    let c_total: usize = candidates.iter().map(Vec::len).sum();
    let r_total: usize = references.iter().map(Vec::len).sum();
    if c_total == 0 {
        return Ok(vec![0.0; max_n]);
    }
    let bp = if c_total >= r_total {
        1.0
    } else {
        (1.0 - r_total as f64 / c_total as f64).exp()
    };

    // pooled clipped matches and candidate n-gram totals per order
    let mut precisions = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let mut matched = 0usize;
        let mut total = 0usize;
        for (cand, reference) in candidates.iter().zip(references) {
            let cand_counts = ngram_counts(cand, n);
            let ref_counts = ngram_counts(reference, n);
            for (gram, &count) in &cand_counts {
                total += count;
                matched += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            }
        }
        precisions.push(if total == 0 { 0.0 } else { matched as f64 / total as f64 });
    }

    Ok((1..=max_n)
        .map(|n| {
            if precisions[..n].iter().any(|&p| p == 0.0) {
                return 0.0;
            }
            let mean_log: f64 = precisions[..n].iter().map(|p| p.ln()).sum::<f64>() / n as f64;
            100.0 * bp * mean_log.exp()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::toks;
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_corpus_scores_100() {
        let refs = vec![toks("the cat sat on the mat"), toks("a dog barked")];
        let scores = bleu_corpus(&refs, &refs, 3).unwrap();
        for s in scores {
            assert!((s - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn clipping_worked_example() {
        // "the the the" vs "the cat": only one of three "the" counts
        let scores = bleu_corpus(&[toks("the the the")], &[toks("the cat")], 1).unwrap();
        assert!((scores[0] - 100.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn brevity_penalty_applies_to_short_candidates() {
        // candidate length 2, reference length 4: BP = exp(1 - 4/2)
        let scores = bleu_corpus(&[toks("a b")], &[toks("a b c d")], 1).unwrap();
        let expected = 100.0 * (1.0f64 - 2.0).exp();
        assert!((scores[0] - expected).abs() < 1e-9);
    }

    #[test]
    fn zero_overlap_is_zero() {
        let scores = bleu_corpus(&[toks("x y z")], &[toks("a b c")], 3).unwrap();
        assert_eq!(scores, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(bleu_corpus(&[], &[], 3).is_err());
        assert!(bleu_corpus(&[toks("a")], &[], 3).is_err());
    }

    #[test]
    fn nonincreasing_in_n_on_random_corpora() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let vocab = ["a", "b", "c", "d", "e"];
        for _ in 0..100 {
            let pairs = rng.gen_range(1..6);
            let mut cands = Vec::new();
            let mut refs = Vec::new();
            for _ in 0..pairs {
                let len = rng.gen_range(1..10);
                cands.push(
                    (0..len)
                        .map(|_| vocab.choose(&mut rng).unwrap().to_string())
                        .collect::<Vec<_>>(),
                );
                let rlen = rng.gen_range(1..10);
                refs.push(
                    (0..rlen)
                        .map(|_| vocab.choose(&mut rng).unwrap().to_string())
                        .collect::<Vec<_>>(),
                );
            }
            let scores = bleu_corpus(&cands, &refs, 4).unwrap();
            for w in scores.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{scores:?}");
            }
        }
    }
}

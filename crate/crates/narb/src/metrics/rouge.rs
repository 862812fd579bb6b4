//! ROUGE-L (longest common subsequence) and ROUGE-N (n-gram overlap).

use super::{ngram_counts, MetricsError, Result};

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

const BETA: f64 = 1.2;

/// ROUGE-L of one candidate/reference pair: `(precision, recall, f)`, all in
/// [0,1]. F uses `(1+β²)PR / (R+β²P)` with β = 1.2, weighting recall higher.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> Result<(f64, f64, f64)> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptyInput("rouge-l on empty sequence".into()));
    }
    let l = lcs_len(candidate, reference) as f64;
    let p = l / candidate.len() as f64;
    let r = l / reference.len() as f64;
    let denom = r + BETA * BETA * p;
    let f = if denom == 0.0 {
        0.0
    } else {
        (1.0 + BETA * BETA) * p * r / denom
    };
    Ok((p, r, f))
}

/// Set-level ROUGE-N with aggregated clipped counts: `(precision, recall,
/// f1)`. Pairs are aligned by position. Sequences shorter than `n` simply
/// contribute no n-grams.
pub fn rouge_n(
    candidates: &[Vec<String>],
    references: &[Vec<String>],
    n: usize,
) -> Result<(f64, f64, f64)> {
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricsError::EmptyInput("rouge-n on empty set".into()));
    }
    let mut matched = 0usize;
    let mut cand_total = 0usize;
    let mut ref_total = 0usize;
    for (cand, reference) in candidates.iter().zip(references) {
        let cand_counts = ngram_counts(cand, n);
        let ref_counts = ngram_counts(reference, n);
        cand_total += cand_counts.values().sum::<usize>();
        ref_total += ref_counts.values().sum::<usize>();
        for (gram, &count) in &cand_counts {
            matched += count.min(ref_counts.get(gram).copied().unwrap_or(0));
        }
    }
    let p = if cand_total == 0 { 0.0 } else { matched as f64 / cand_total as f64 };
    let r = if ref_total == 0 { 0.0 } else { matched as f64 / ref_total as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Ok((p, r, f))
}

#[cfg(test)]
mod tests {
    use super::super::toks;
    use super::*;

    #[test]
    fn identical_sentences_score_one() {
        let s = toks("peppa jumps in puddles");
        let (p, r, f) = rouge_l(&s, &s).unwrap();
        assert_eq!((p, r, f), (1.0, 1.0, 1.0));
    }

    #[test]
    fn rouge_l_worked_example() {
        // cand "a b c d", ref "a c d": LCS = 3
        let (p, r, f) = rouge_l(&toks("a b c d"), &toks("a c d")).unwrap();
        assert_eq!(p, 0.75);
        assert_eq!(r, 1.0);
        let expected = (1.0 + 1.44) * 0.75 / (1.0 + 1.44 * 0.75);
        assert!((f - expected).abs() < 1e-12);
        assert!((f - 0.8798).abs() < 5e-5);
    }

    #[test]
    fn disjoint_vocabulary_scores_zero() {
        let (p, r, f) = rouge_l(&toks("x y"), &toks("a b")).unwrap();
        assert_eq!((p, r, f), (0.0, 0.0, 0.0));
        assert!(rouge_l(&[], &toks("a")).is_err());
    }

    #[test]
    fn lcs_is_order_sensitive() {
        let (_, _, forward) = rouge_l(&toks("a b c"), &toks("a b c")).unwrap();
        let (_, _, reversed) = rouge_l(&toks("c b a"), &toks("a b c")).unwrap();
        assert!(reversed < forward);
    }

    #[test]
    fn rouge_1_worked_example() {
        let (p, r, f) = rouge_n(&[toks("a b")], &[toks("a c")], 1).unwrap();
        assert_eq!((p, r, f), (0.5, 0.5, 0.5));
    }

    #[test]
    fn rouge_2_on_single_tokens_is_zero() {
        let (p, r, f) = rouge_n(&[toks("a")], &[toks("a")], 2).unwrap();
        assert_eq!((p, r, f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rouge_n_identity_and_aggregation() {
        let set = vec![toks("a b c"), toks("d e")];
        let (p, r, f) = rouge_n(&set, &set, 1).unwrap();
        assert_eq!((p, r, f), (1.0, 1.0, 1.0));
        // aggregated counts: 2 matches of 3+2 candidate and 3+2 reference
        let cands = vec![toks("a b x"), toks("y z")];
        let refs = vec![toks("a b c"), toks("d e")];
        let (p, r, _) = rouge_n(&cands, &refs, 1).unwrap();
        assert_eq!(p, 2.0 / 5.0);
        assert_eq!(r, 2.0 / 5.0);
    }
}

//! METEOR-lite: exact and stem-stage unigram alignment without synonym
//! resources. Scores are therefore not comparable to METEOR runs that use
//! synonym or paraphrase tables.

use super::{MetricsError, Result};
use rust_stemmers::{Algorithm, Stemmer};

/// METEOR-lite score of one candidate/reference pair, in [0,1].
///
/// Alignment runs in two stages. The exact stage matches identical lowercase
/// unigrams; the stem stage matches remaining unigrams whose English Porter
/// stems agree. Each stage greedily pairs candidate tokens left to right with
/// the leftmost unmatched reference token. With `m` matches,
/// `F_mean = 10PR / (R + 9P)` and the fragmentation penalty is
/// `0.5 (chunks/m)³`, where chunks counts maximal runs of adjacent matches
/// that are adjacent in both sentences.
pub fn meteor_lite(candidate: &[String], reference: &[String]) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptyInput("meteor on empty sequence".into()));
    }
    // alignment[i] = matched reference position of candidate token i
    let mut alignment: Vec<Option<usize>> = vec![None; candidate.len()];
    let mut ref_used = vec![false; reference.len()];

    let exact: Vec<String> = candidate.iter().map(|t| t.to_lowercase()).collect();
    let ref_exact: Vec<String> = reference.iter().map(|t| t.to_lowercase()).collect();
    align_stage(&exact, &ref_exact, &mut alignment, &mut ref_used);

    let stemmer = Stemmer::create(Algorithm::English);
    let stems: Vec<String> = exact.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    let ref_stems: Vec<String> = ref_exact.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    align_stage(&stems, &ref_stems, &mut alignment, &mut ref_used);

    let matches: Vec<(usize, usize)> = alignment
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .collect();
    let m = matches.len() as f64;
    if matches.is_empty() {
        return Ok(0.0);
    }
    let p = m / candidate.len() as f64;
    let r = m / reference.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);

    let mut chunks = 1usize;
    for w in matches.windows(2) {
        let contiguous = w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1;
        if !contiguous {
            chunks += 1;
        }
    }
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    Ok(f_mean * (1.0 - penalty))
}

fn align_stage(
    cand_keys: &[String],
    ref_keys: &[String],
    alignment: &mut [Option<usize>],
    ref_used: &mut [bool],
) {
    for (i, key) in cand_keys.iter().enumerate() {
        if alignment[i].is_some() {
            continue;
        }
        for (j, rkey) in ref_keys.iter().enumerate() {
            if !ref_used[j] && key == rkey {
                alignment[i] = Some(j);
                ref_used[j] = true;
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::toks;
    use super::*;

    #[test]
    fn identical_four_token_sentences() {
        let s = toks("peppa jumps in puddles");
        let score = meteor_lite(&s, &s).unwrap();
        // one chunk over four matches: 1 - 0.5 (1/4)^3
        assert!((score - 0.9921875).abs() < 1e-12);
    }

    #[test]
    fn zero_overlap_is_zero() {
        assert_eq!(meteor_lite(&toks("x y"), &toks("a b")).unwrap(), 0.0);
        assert!(meteor_lite(&[], &toks("a")).is_err());
    }

    #[test]
    fn stem_stage_matches_morphological_variants() {
        let score = meteor_lite(&toks("running"), &toks("run")).unwrap();
        assert!(score > 0.0);
        // a single match over single-token sentences: P=R=1, chunks=1=m
        assert!((score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fragmentation_increases_penalty() {
        let reference = toks("a b c d");
        let contiguous = meteor_lite(&toks("a b c d"), &reference).unwrap();
        let scrambled = meteor_lite(&toks("d c b a"), &reference).unwrap();
        assert!(scrambled < contiguous);
    }

    #[test]
    fn case_insensitive_exact_stage() {
        let score = meteor_lite(&toks("Hello World"), &toks("hello world")).unwrap();
        // both tokens match in one chunk: 1 - 0.5 (1/2)^3
        assert!((score - 0.9375).abs() < 1e-12);
    }
}

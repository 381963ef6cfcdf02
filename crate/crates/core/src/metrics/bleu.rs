//! BLEU: clipped modified n-gram precision with a brevity penalty.
//!
//! Sentence-level scoring (the RL reward path) replaces zero precisions
//! with 1e-9 so early-training rewards stay informative; corpus-level
//! scoring aggregates raw counts with no smoothing.

use super::ngram::ngram_counts;
use crate::error::{Error, Result};

pub const SENTENCE_SMOOTH_EPS: f64 = 1e-9;

fn check_inputs(candidate: &[String], references: &[Vec<String>]) -> Result<()> {
    if candidate.is_empty() {
        return Err(Error::contract("bleu: empty candidate"));
    }
    if references.is_empty() || references.iter().any(|r| r.is_empty()) {
        return Err(Error::contract("bleu: empty reference set"));
    }
    Ok(())
}

/// Clipped match count and total candidate n-gram count for one order.
fn clipped_counts(candidate: &[String], references: &[Vec<String>], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let total: usize = cand.values().sum();
    let refs: Vec<_> = references.iter().map(|r| ngram_counts(r, n)).collect();
    let mut matched = 0usize;
    for (gram, &count) in &cand {
        let max_ref = refs.iter().map(|rc| *rc.get(gram).unwrap_or(&0)).max().unwrap_or(0);
        matched += count.min(max_ref);
    }
    (matched, total)
}

/// Reference length closest to the candidate length; ties go to the
/// shorter reference.
fn effective_ref_len(cand_len: usize, references: &[Vec<String>]) -> usize {
    let mut best = references[0].len();
    for r in references.iter().skip(1) {
        let len = r.len();
        let d_new = (len as i64 - cand_len as i64).abs();
        let d_old = (best as i64 - cand_len as i64).abs();
        if d_new < d_old || (d_new == d_old && len < best) {
            best = len;
        }
    }
    best
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    }
}

/// Sentence-level BLEU-n with add-epsilon smoothing of zero precisions.
pub fn bleu(candidate: &[String], references: &[Vec<String>], max_n: usize) -> Result<f64> {
    check_inputs(candidate, references)?;
    let mut log_sum = 0.0f64;
    for n in 1..=max_n {
        let (matched, total) = clipped_counts(candidate, references, n);
        let p = if total == 0 || matched == 0 {
            SENTENCE_SMOOTH_EPS
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let geo = (log_sum / max_n as f64).exp();
    let bp = brevity_penalty(candidate.len(), effective_ref_len(candidate.len(), references));
    Ok(bp * geo)
}

/// Corpus-level BLEU-n: counts aggregated over all pairs, no smoothing.
pub fn bleu_corpus(pairs: &[(Vec<String>, Vec<Vec<String>>)], max_n: usize) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut matched = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let mut cand_len = 0usize;
    let mut ref_len = 0usize;
    for (candidate, references) in pairs {
        check_inputs(candidate, references)?;
        for n in 1..=max_n {
            let (m, t) = clipped_counts(candidate, references, n);
            matched[n - 1] += m;
            totals[n - 1] += t;
        }
        cand_len += candidate.len();
        ref_len += effective_ref_len(candidate.len(), references);
    }
    let mut log_sum = 0.0f64;
    for n in 0..max_n {
        if matched[n] == 0 || totals[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (matched[n] as f64 / totals[n] as f64).ln();
    }
    Ok(brevity_penalty(cand_len, ref_len) * (log_sum / max_n as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ngram::tokenize;

    #[test]
    fn identity_scores_one() {
        let c = tokenize("a red circle holding a square");
        let s = bleu(&c, std::slice::from_ref(&c), 4).unwrap();
        assert!((s - 1.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn no_shared_unigram_is_zero() {
        let c = tokenize("alpha beta gamma delta");
        let r = tokenize("one two three four");
        let s = bleu(&c, &[r], 4).unwrap();
        assert!(s < 1e-6, "{s}");
    }

    #[test]
    fn clipping_limits_repeated_words() {
        // "the the the" vs "the cat sat": unigram precision clips to 1/3.
        let c = tokenize("the the the");
        let r = tokenize("the cat sat");
        let (m, t) = clipped_counts(&c, &[r], 1);
        assert_eq!((m, t), (1, 3));
    }

    #[test]
    fn empty_inputs_are_contract_errors() {
        let c = tokenize("a b");
        assert!(bleu(&[], std::slice::from_ref(&c), 4).is_err());
        assert!(bleu(&c, &[], 4).is_err());
    }

    #[test]
    fn corpus_mode_has_no_smoothing() {
        let c = tokenize("alpha beta gamma delta");
        let r = tokenize("one two three four");
        let s = bleu_corpus(&[(c, vec![r])], 4).unwrap();
        assert_eq!(s, 0.0);
    }
}

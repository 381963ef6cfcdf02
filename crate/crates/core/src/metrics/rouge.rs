//! ROUGE-L: longest-common-subsequence F-measure, best reference taken.

use crate::error::{Error, Result};

pub const ROUGE_BETA: f64 = 1.2;

/// LCS length by the standard two-row dynamic program.
fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

fn f_measure(lcs: usize, cand_len: usize, ref_len: usize) -> f64 {
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / cand_len as f64;
    let r = lcs as f64 / ref_len as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * r * p / (r + b2 * p)
}

/// ROUGE-L of the candidate against the best-matching reference.
pub fn rouge_l(candidate: &[String], references: &[Vec<String>]) -> Result<f64> {
    if candidate.is_empty() {
        return Err(Error::contract("rouge-l: empty candidate"));
    }
    if references.is_empty() || references.iter().any(|r| r.is_empty()) {
        return Err(Error::contract("rouge-l: empty reference set"));
    }
    let mut best = 0.0f64;
    for r in references {
        let score = f_measure(lcs_len(candidate, r), candidate.len(), r.len());
        best = best.max(score);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ngram::tokenize;

    #[test]
    fn identity_scores_one() {
        let c = tokenize("a small cat on the mat");
        assert!((rouge_l(&c, std::slice::from_ref(&c)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_vocabularies_score_zero() {
        let c = tokenize("alpha beta gamma");
        let r = tokenize("one two three");
        assert_eq!(rouge_l(&c, &[r]).unwrap(), 0.0);
    }

    #[test]
    fn hand_case_lcs_two_of_three_and_four() {
        // candidate "a b c" (3), reference "a x b y" (4): LCS = {a, b} = 2.
        let c = tokenize("a b c");
        let r = tokenize("a x b y");
        assert_eq!(lcs_len(&c, &r), 2);
        let p = 2.0 / 3.0;
        let rr = 2.0 / 4.0;
        let b2 = ROUGE_BETA * ROUGE_BETA;
        let want = (1.0 + b2) * rr * p / (rr + b2 * p);
        let got = rouge_l(&c, &[r]).unwrap();
        assert!((got - want).abs() < 1e-12, "got {got} want {want}");
    }

    #[test]
    fn takes_max_over_references() {
        let c = tokenize("a b c");
        let far = tokenize("x y z");
        let near = tokenize("a b c");
        let got = rouge_l(&c, &[far, near]).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
    }
}

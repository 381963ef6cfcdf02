//! Exact-match METEOR: unigram alignment maximizing matches and then
//! minimizing chunks, harmonic-mean F with a fragmentation penalty.
//! Stem/synonym/paraphrase stages are deliberately absent.

use crate::error::{Error, Result};

pub const METEOR_ALPHA: f64 = 0.9;
pub const METEOR_GAMMA: f64 = 0.5;
pub const METEOR_THETA: f64 = 3.0;

/// Maximum number of exact unigram matches between the two sequences.
fn max_matches(cand: &[String], reference: &[String]) -> usize {
    let mut total = 0usize;
    let mut seen: Vec<&String> = Vec::new();
    for w in cand {
        if seen.contains(&w) {
            continue;
        }
        seen.push(w);
        let c = cand.iter().filter(|x| *x == w).count();
        let r = reference.iter().filter(|x| *x == w).count();
        total += c.min(r);
    }
    total
}

struct ChunkSearch<'a> {
    cand: &'a [String],
    matches_target: usize,
    // candidate position -> matching reference positions
    options: Vec<Vec<usize>>,
    best_chunks: usize,
}

impl<'a> ChunkSearch<'a> {
    /// Depth-first over candidate positions; prunes on chunk count
    /// (monotone) and on match-count feasibility.
    fn run(&mut self, pos: usize, used: u64, matched: usize, last: Option<(usize, usize)>, chunks: usize) {
        if chunks >= self.best_chunks {
            return;
        }
        let remaining = self.cand.len() - pos;
        if matched + remaining < self.matches_target {
            return;
        }
        if pos == self.cand.len() {
            if matched == self.matches_target {
                self.best_chunks = chunks;
            }
            return;
        }
        let opts = std::mem::take(&mut self.options[pos]);
        for &j in &opts {
            if used & (1u64 << j) != 0 {
                continue;
            }
            let contiguous = matches!(last, Some((pi, pj)) if pi + 1 == pos && pj + 1 == j);
            let next_chunks = if contiguous { chunks } else { chunks + 1 };
            self.run(
                pos + 1,
                used | (1u64 << j),
                matched + 1,
                Some((pos, j)),
                next_chunks,
            );
        }
        self.options[pos] = opts;
        // leave this candidate position unmatched
        self.run(pos + 1, used, matched, last, chunks);
    }
}

/// Minimum chunk count over all maximum matchings; `None` when there are
/// no matches at all.
fn min_chunks(cand: &[String], reference: &[String]) -> Option<(usize, usize)> {
    let m = max_matches(cand, reference);
    if m == 0 {
        return None;
    }
    let options: Vec<Vec<usize>> = cand
        .iter()
        .map(|w| {
            reference
                .iter()
                .enumerate()
                .filter_map(|(j, r)| (r == w).then_some(j))
                .collect()
        })
        .collect();
    let mut search = ChunkSearch {
        cand,
        matches_target: m,
        options,
        best_chunks: m + 1,
    };
    search.run(0, 0, 0, None, 0);
    Some((m, search.best_chunks))
}

fn score_single(cand: &[String], reference: &[String]) -> f64 {
    let Some((m, chunks)) = min_chunks(cand, reference) else {
        return 0.0;
    };
    let p = m as f64 / cand.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f = p * r / (METEOR_ALPHA * p + (1.0 - METEOR_ALPHA) * r);
    let frag = chunks as f64 / m as f64;
    let penalty = METEOR_GAMMA * frag.powf(METEOR_THETA);
    f * (1.0 - penalty)
}

/// Exact-match METEOR against the best reference.
pub fn meteor_lite(candidate: &[String], references: &[Vec<String>]) -> Result<f64> {
    if candidate.is_empty() {
        return Err(Error::contract("meteor: empty candidate"));
    }
    if references.is_empty() || references.iter().any(|r| r.is_empty()) {
        return Err(Error::contract("meteor: empty reference set"));
    }
    if candidate.len() > 64 || references.iter().any(|r| r.len() > 64) {
        return Err(Error::contract("meteor: sequences longer than 64 tokens"));
    }
    let mut best = 0.0f64;
    for r in references {
        best = best.max(score_single(candidate, r));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ngram::tokenize;

    #[test]
    fn identity_has_one_chunk_penalty() {
        let c = tokenize("a red circle above a square");
        let m = c.len() as f64;
        let want = 1.0 * (1.0 - 0.5 * (1.0 / m).powf(3.0));
        let got = meteor_lite(&c, std::slice::from_ref(&c)).unwrap();
        assert!((got - want).abs() < 1e-12, "got {got} want {want}");
    }

    #[test]
    fn zero_matches_scores_zero() {
        let c = tokenize("alpha beta");
        let r = tokenize("one two");
        assert_eq!(meteor_lite(&c, &[r]).unwrap(), 0.0);
    }

    #[test]
    fn single_shared_word() {
        let c = tokenize("alpha cat beta");
        let r = tokenize("one cat two four");
        // m = 1, chunks = 1, P = 1/3, R = 1/4.
        let p: f64 = 1.0 / 3.0;
        let r_ = 1.0 / 4.0;
        let f = p * r_ / (0.9 * p + 0.1 * r_);
        let want = f * (1.0 - 0.5);
        let got = meteor_lite(&c, &[r]).unwrap();
        assert!((got - want).abs() < 1e-12, "got {got} want {want}");
    }

    #[test]
    fn chunk_minimization_prefers_contiguous_alignment() {
        // "the cat" appears contiguously in the reference; aligning to the
        // scattered copies would give 2 chunks, minimum is 1.
        let c = tokenize("the cat");
        let r = tokenize("cat x the cat the");
        let (m, chunks) = min_chunks(&c, &r).unwrap();
        assert_eq!((m, chunks), (2, 1));
    }

    #[test]
    fn repeated_words_stay_tractable() {
        let c = tokenize("a a a a a a a a a a a a a a a a");
        let (m, chunks) = min_chunks(&c, &c).unwrap();
        assert_eq!((m, chunks), (16, 1));
    }
}

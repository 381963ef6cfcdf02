//! CIDEr-D: tf-idf weighted n-gram cosine similarity with count clipping
//! and a Gaussian length penalty, averaged over n = 1..4 and scaled to
//! [0, 10].

use super::ngram::ngram_counts_owned;
use crate::error::{Error, Result};
use crate::util::hash_reference_set;
use std::collections::{HashMap, HashSet};

pub const CIDER_SIGMA: f64 = 6.0;
pub const CIDER_MAX_N: usize = 4;

/// Document frequencies over a reference corpus. A "document" is one
/// image's full reference set.
#[derive(Debug, Clone)]
pub struct TfIdfIndex {
    num_docs: usize,
    df: Vec<HashMap<Vec<String>, usize>>,
    known: HashSet<u64>,
}

impl TfIdfIndex {
    /// Builds the index from per-image reference lists.
    pub fn build<'a, I>(corpus: I) -> Self
    where
        I: IntoIterator<Item = &'a Vec<Vec<String>>>,
    {
        let mut df: Vec<HashMap<Vec<String>, usize>> = vec![HashMap::new(); CIDER_MAX_N];
        let mut known = HashSet::new();
        let mut num_docs = 0usize;
        for refs in corpus {
            num_docs += 1;
            known.insert(hash_reference_set(refs));
            for (n, table) in df.iter_mut().enumerate() {
                let mut grams: HashSet<Vec<String>> = HashSet::new();
                for r in refs {
                    for gram in ngram_counts_owned(r, n + 1).into_keys() {
                        grams.insert(gram);
                    }
                }
                for gram in grams {
                    *table.entry(gram).or_insert(0) += 1;
                }
            }
        }
        TfIdfIndex {
            num_docs,
            df,
            known,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn doc_frequency(&self, n: usize, gram: &[String]) -> usize {
        *self.df[n - 1].get(gram).unwrap_or(&0)
    }

    /// `ln N - ln(max(1, df))`; unseen n-grams get full weight `ln N`.
    fn idf_log(&self, n: usize, gram: &[String]) -> f64 {
        let df = self.doc_frequency(n, gram) as f64;
        (self.num_docs as f64).ln() - df.max(1.0).ln()
    }

    /// Whether this exact reference set was part of the indexed corpus.
    pub fn covers(&self, refs: &[Vec<String>]) -> bool {
        self.known.contains(&hash_reference_set(refs))
    }

    fn tfidf_vector(&self, tokens: &[String], n: usize) -> (HashMap<Vec<String>, f64>, f64) {
        let mut vec = HashMap::new();
        let mut norm_sq = 0.0f64;
        for (gram, count) in ngram_counts_owned(tokens, n) {
            let w = count as f64 * self.idf_log(n, &gram);
            norm_sq += w * w;
            vec.insert(gram, w);
        }
        (vec, norm_sq.sqrt())
    }
}

/// CIDEr-D score of one candidate against its registered reference set.
pub fn cider_d(candidate: &[String], references: &[Vec<String>], index: &TfIdfIndex) -> Result<f64> {
    if candidate.is_empty() {
        return Err(Error::contract("cider-d: empty candidate"));
    }
    if references.is_empty() || references.iter().any(|r| r.is_empty()) {
        return Err(Error::contract("cider-d: empty reference set"));
    }
    if !index.covers(references) {
        return Err(Error::contract(
            "cider-d: tf-idf index was not built over this reference corpus",
        ));
    }
    let mut per_n = [0.0f64; CIDER_MAX_N];
    for n in 1..=CIDER_MAX_N {
        let (cand_vec, cand_norm) = index.tfidf_vector(candidate, n);
        for r in references {
            let (ref_vec, ref_norm) = index.tfidf_vector(r, n);
            if cand_norm == 0.0 || ref_norm == 0.0 {
                continue;
            }
            let mut sim = 0.0f64;
            for (gram, &cw) in &cand_vec {
                if let Some(&rw) = ref_vec.get(gram) {
                    // count clipping: the candidate weight never exceeds
                    // the reference weight (weights share the idf factor)
                    sim += cw.min(rw) * rw;
                }
            }
            sim /= cand_norm * ref_norm;
            let delta = candidate.len() as f64 - r.len() as f64;
            sim *= (-delta * delta / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
            per_n[n - 1] += sim;
        }
    }
    let mean_n: f64 = per_n.iter().sum::<f64>() / CIDER_MAX_N as f64;
    Ok(10.0 * mean_n / references.len() as f64)
}

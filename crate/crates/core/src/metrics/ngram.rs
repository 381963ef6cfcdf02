//! Token sequences and n-gram counting shared by the caption metrics.

use crate::error::{Error, Result};
use std::collections::HashMap;

/// Lowercase tokens with no special markers inside; the unit every
/// metric scores.
pub type TokenSeq = Vec<String>;

pub fn tokenize(text: &str) -> TokenSeq {
    text.split_whitespace().map(|t| t.to_lowercase()).collect()
}

/// Rejects sequences containing special markers; metric inputs must be
/// plain caption words.
pub fn validate_metric_input(tokens: &[String]) -> Result<()> {
    const SPECIALS: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];
    for t in tokens {
        if SPECIALS.contains(&t.as_str()) {
            return Err(Error::contract(format!(
                "special token {t} inside metric input"
            )));
        }
    }
    Ok(())
}

/// Multiset of n-grams of a fixed order.
pub fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n && n > 0 {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Owned-key variant used where the grams outlive the tokens.
pub fn ngram_counts_owned(tokens: &[String], n: usize) -> HashMap<Vec<String>, usize> {
    ngram_counts(tokens, n)
        .into_iter()
        .map(|(k, v)| (k.to_vec(), v))
        .collect()
}

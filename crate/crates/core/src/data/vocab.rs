//! Token/index vocabulary with fixed special slots.

use crate::error::{Error, Result};
use std::collections::HashMap;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

pub const PAD_TOKEN: &str = "<pad>";
pub const BOS_TOKEN: &str = "<bos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";

const SPECIALS: [&str; 4] = [PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN];

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_count: usize,
}

impl Vocabulary {
    /// Counts whitespace-lowercase tokens over already-trimmed captions
    /// and keeps those occurring at least `min_count` times. Kept tokens
    /// are ordered lexicographically after the special slots.
    pub fn build<'a, I>(captions: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a Vec<String>>,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for caption in captions {
            for tok in caption {
                *counts.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<&str> = counts
            .iter()
            .filter(|(t, &c)| c >= min_count && !SPECIALS.contains(*t))
            .map(|(t, _)| *t)
            .collect();
        kept.sort_unstable();

        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend(kept.iter().map(|s| s.to_string()));
        Self::from_tokens(tokens, min_count).expect("specials are in place")
    }

    /// Rebuilds from an ordered token list (checkpoint load).
    pub fn from_tokens(tokens: Vec<String>, min_count: usize) -> Result<Self> {
        if tokens.len() < 4 || tokens[..4] != SPECIALS.map(String::from) {
            return Err(Error::data(
                "vocabulary must start with <pad> <bos> <eos> <unk>",
            ));
        }
        let mut index = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::data(format!("duplicate vocabulary token {t}")));
            }
        }
        Ok(Vocabulary {
            tokens,
            index,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn encode_token(&self, token: &str) -> usize {
        self.lookup(token).unwrap_or(UNK)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.encode_token(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.tokens[i].clone()).collect()
    }

    /// Content words for scoring: pad/bos/eos dropped, unknowns rendered
    /// as the plain word "unk" so they stay visible to the metrics.
    pub fn words(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .filter_map(|&i| match i {
                PAD | BOS | EOS => None,
                UNK => Some("unk".to_string()),
                _ => Some(self.tokens[i].clone()),
            })
            .collect()
    }
}

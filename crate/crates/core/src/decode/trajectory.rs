//! Decoded sequences with their per-step records.

use crate::autodiff::{Real, Tape};
use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::model::CavpStepOutput;
use serde::Serialize;

/// Attention record for one step: every distribution the visual policy
/// produced, plus argmax indices for visualization.
#[derive(Debug, Clone, Serialize)]
pub struct StepAttention {
    pub single: Vec<f64>,
    pub single_argmax: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context_argmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition_argmax: Option<usize>,
    /// (single, composition) mixing probabilities of the output policy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<[f64; 2]>,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl StepAttention {
    pub fn from_step<R: Real>(tape: &Tape<R>, cavp: &CavpStepOutput) -> Self {
        let vec_of = |var| -> Vec<f64> {
            tape.value(var).data().iter().map(|v| v.to_f64()).collect()
        };
        let single = vec_of(cavp.attn_single);
        let context = cavp.attn_context.map(vec_of);
        let composition = cavp.attn_composition.map(vec_of);
        let output = cavp.attn_output.map(|v| {
            let d = vec_of(v);
            [d[0], d[1]]
        });
        StepAttention {
            single_argmax: argmax(&single),
            context_argmax: context.as_ref().map(|c| argmax(c)),
            composition_argmax: composition.as_ref().map(|c| argmax(c)),
            single,
            context,
            composition,
            output,
        }
    }
}

/// A generated sequence: tokens (including the end token when emitted),
/// per-step log-probabilities, attention records, and the total.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tokens: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub attention: Vec<StepAttention>,
    pub total_log_prob: f64,
}

impl Trajectory {
    pub fn new(tokens: Vec<usize>, log_probs: Vec<f64>, attention: Vec<StepAttention>) -> Self {
        let total_log_prob = log_probs.iter().sum();
        Trajectory {
            tokens,
            log_probs,
            attention,
            total_log_prob,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Content words for scoring and display.
    pub fn words(&self, vocab: &Vocabulary) -> Vec<String> {
        vocab.words(&self.tokens)
    }

    pub fn caption(&self, vocab: &Vocabulary) -> String {
        self.words(vocab).join(" ")
    }

    /// Stored total must equal the per-step sum.
    pub fn validate(&self, max_len: usize) -> Result<()> {
        if self.tokens.len() != self.log_probs.len() {
            return Err(Error::contract("trajectory token/log-prob length mismatch"));
        }
        if self.tokens.len() > max_len {
            return Err(Error::contract(format!(
                "trajectory length {} exceeds max {max_len}",
                self.tokens.len()
            )));
        }
        let sum: f64 = self.log_probs.iter().sum();
        if (sum - self.total_log_prob).abs() > 1e-6 {
            return Err(Error::contract("trajectory total log-prob diverges from steps"));
        }
        Ok(())
    }
}

//! Language policy: an LSTM over `[h_t^s, v_t]` with a projection to the
//! vocabulary. Log-probabilities come from log-softmax directly.

use super::params::BoundParams;
use crate::autodiff::{lstm_step, LstmState, Real, Tape, Var};
use crate::error::Result;

/// Result of one language step.
#[derive(Debug, Clone, Copy)]
pub struct LanguageStepOut {
    /// Log-probabilities over the vocabulary (log-softmax of the logits).
    pub log_probs: Var,
    /// Raw projection output.
    pub logits: Var,
    /// Updated LSTM state; its hidden is the one the distribution used.
    pub state: LstmState,
}

/// Updates the language LSTM with `[h_single, v]` and projects the new
/// hidden to a distribution over words.
pub fn language_step<R: Real>(
    tape: &mut Tape<R>,
    h_single: Var,
    v: Var,
    state: LstmState,
    params: &BoundParams,
) -> Result<LanguageStepOut> {
    let x = tape.concat(&[h_single, v])?;
    let next = lstm_step(tape, x, state, &params.lang_lstm)?;
    let proj = tape.matvec(params.proj_w, next.h)?;
    let logits = tape.add(proj, params.proj_b)?;
    let log_probs = tape.log_softmax(logits)?;
    Ok(LanguageStepOut {
        log_probs,
        logits,
        state: next,
    })
}

/// Total log-probability of a stored trajectory:
/// the sum over steps of each chosen word's log-probability.
pub fn sequence_log_prob(step_log_probs: &[f64]) -> f64 {
    step_log_probs.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_log_prob_trivia() {
        // Deterministic policy: prob 1 each step.
        assert_eq!(sequence_log_prob(&[0.0, 0.0, 0.0]), 0.0);
        // Uniform policy over V = 7, T = 4.
        let lp = (1.0f64 / 7.0).ln();
        let total = sequence_log_prob(&[lp; 4]);
        assert!((total - 4.0 * lp).abs() < 1e-12);
    }

    #[test]
    fn additive_over_time_splits() {
        let lps = [-0.3, -1.2, -0.05, -2.2, -0.9];
        let whole = sequence_log_prob(&lps);
        let split = sequence_log_prob(&lps[..2]) + sequence_log_prob(&lps[2..]);
        assert!((whole - split).abs() < 1e-12);
    }
}

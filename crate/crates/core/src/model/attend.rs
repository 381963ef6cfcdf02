//! Shared sub-policy machinery: the additive attention read and the
//! state transition every sub-policy performs.

use super::params::BoundSubPolicy;
use crate::autodiff::{lstm_step, LstmState, Real, Tape, Var};
use crate::error::{Error, Result};

/// The state every sub-policy consumes at step t: the language hidden
/// from the previous step, the mean-pooled regions, and the embedding of
/// the previously emitted word.
#[derive(Debug, Clone, Copy)]
pub struct SubPolicyState {
    pub lang_hidden: Var,
    pub mean_pool: Var,
    pub prev_embed: Var,
}

impl SubPolicyState {
    pub fn concat<R: Real>(&self, tape: &mut Tape<R>) -> Result<Var> {
        tape.concat(&[self.lang_hidden, self.mean_pool, self.prev_embed])
    }
}

/// Ordered history of CAVP outputs. At t = 1 the mean pool stands in as
/// the only query so the set is never empty; once a real output exists
/// the queries are exactly the previous outputs.
#[derive(Debug, Clone)]
pub struct VisualContext {
    seed: Var,
    outputs: Vec<Var>,
}

impl VisualContext {
    pub fn seeded(seed: Var) -> Self {
        VisualContext {
            seed,
            outputs: Vec::new(),
        }
    }

    pub fn push(&mut self, v: Var) {
        self.outputs.push(v);
    }

    /// Query set for the context sub-policy.
    pub fn queries(&self) -> Vec<Var> {
        if self.outputs.is_empty() {
            vec![self.seed]
        } else {
            self.outputs.clone()
        }
    }

    /// Most recent entry (the seed before any output exists).
    pub fn last(&self) -> Var {
        *self.outputs.last().unwrap_or(&self.seed)
    }

    /// Stored length including the seed element.
    pub fn len_with_seed(&self) -> usize {
        self.outputs.len() + 1
    }
}

/// Result of one attention read plus the LSTM transition.
#[derive(Debug, Clone, Copy)]
pub struct AttendOutcome {
    /// Pre-softmax attention scores, exposed for log-domain losses.
    pub logits: Var,
    /// Softmax weights over the queries.
    pub weights: Var,
    /// Convex combination of the queries.
    pub fused: Var,
    /// Post-transition LSTM state, consumed at the next step.
    pub state: LstmState,
}

/// One sub-policy step. The attention scores use the hidden state as it
/// stands on entry; the transition consuming `state` produces the hidden
/// for the next step.
pub fn sub_policy_attend<R: Real>(
    tape: &mut Tape<R>,
    state: Var,
    lstm: LstmState,
    queries: &[Var],
    params: &BoundSubPolicy,
) -> Result<AttendOutcome> {
    if queries.is_empty() {
        return Err(Error::contract(
            "sub-policy attention requires a non-empty query set; callers must seed contexts",
        ));
    }
    let hidden_proj = tape.matvec(params.w_h, lstm.h)?;
    let mut scores = Vec::with_capacity(queries.len());
    for q in queries {
        let qp = tape.matvec(params.w_q, *q)?;
        let pre = tape.add(hidden_proj, qp)?;
        let act = tape.tanh(pre)?;
        scores.push(tape.dot(params.w_a, act)?);
    }
    let logits = tape.concat(&scores)?;
    let weights = tape.softmax(logits)?;

    let mut terms = Vec::with_capacity(queries.len());
    for (i, q) in queries.iter().enumerate() {
        let w = tape.index(weights, i)?;
        terms.push(tape.scale_by(w, *q)?);
    }
    let fused = tape.add_all(&terms)?;
    let next = lstm_step(tape, state, lstm, &params.lstm)?;

    Ok(AttendOutcome {
        logits,
        weights,
        fused,
        state: next,
    })
}

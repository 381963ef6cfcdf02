//! Self-critical policy gradient: sample a caption, reward it, subtract
//! the greedy decode's reward as baseline, and scale the sampled
//! sequence's log-probability by the negative advantage.

use crate::autodiff::{Real, Tape, Var};
use crate::data::{Vocabulary, BOS, EOS};
use crate::decode::greedy_decode;
use crate::error::Result;
use crate::metrics::Rewarder;
use crate::model::{bind_image, init_state, model_step, BoundParams, CavpModel, RegionFeatureSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Per-image diagnostics of one self-critical step.
#[derive(Debug, Clone)]
pub struct ScstDiag {
    pub sample_reward: f64,
    pub greedy_reward: f64,
    pub advantage: f64,
    pub sample_tokens: Vec<usize>,
}

/// Builds one image's loss `-(r(sample) - r(greedy)) * sum_t log pi(y_t^s)`
/// on the given tape. Returns `None` (degenerate sample, skipped) when
/// the sampled caption has no content words to score.
#[allow(clippy::too_many_arguments)]
pub fn build_scst_image_loss<R: Real>(
    tape: &mut Tape<R>,
    model: &CavpModel<R>,
    params: &BoundParams,
    features: &RegionFeatureSet,
    references: &[Vec<String>],
    rewarder: &Rewarder,
    vocab: &Vocabulary,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(Var, ScstDiag)>> {
    let cfg = model.config().clone();

    // Greedy baseline from the current parameters, outside the gradient
    // path.
    let greedy = greedy_decode(model, features)?;
    let greedy_words = greedy.words(vocab);
    let greedy_reward = if greedy_words.is_empty() {
        0.0
    } else {
        rewarder.score(&greedy_words, references)?
    };

    // Monte-Carlo rollout on the gradient tape.
    let bound = bind_image(tape, features)?;
    let mut state = init_state(tape, &cfg, &bound);
    let mut prev = BOS;
    let mut picked: Vec<Var> = Vec::new();
    let mut tokens: Vec<usize> = Vec::new();
    for _ in 0..cfg.max_len {
        let out = model_step(tape, &cfg, params, &bound, &state, prev)?;
        let lp = tape.value(out.lang.log_probs).data();
        let u: f64 = rng.gen::<f64>();
        let mut cum = 0.0;
        let mut tok = lp.len() - 1;
        for (i, l) in lp.iter().enumerate() {
            cum += l.to_f64().exp();
            if u < cum {
                tok = i;
                break;
            }
        }
        picked.push(tape.index(out.lang.log_probs, tok)?);
        tokens.push(tok);
        state = out.state;
        prev = tok;
        if tok == EOS {
            break;
        }
    }

    let sample_words = vocab.words(&tokens);
    if sample_words.is_empty() {
        return Ok(None);
    }
    let sample_reward = rewarder.score(&sample_words, references)?;
    let advantage = sample_reward - greedy_reward;

    let log_prob_sum = tape.add_all(&picked)?;
    let loss = tape.scale(log_prob_sum, -advantage)?;
    Ok(Some((
        loss,
        ScstDiag {
            sample_reward,
            greedy_reward,
            advantage,
            sample_tokens: tokens,
        },
    )))
}

/// Stand-alone self-critical step for one image: gradients for every
/// parameter (storage order) plus diagnostics.
pub fn scst_step(
    model: &CavpModel<f32>,
    features: &RegionFeatureSet,
    references: &[Vec<String>],
    rewarder: &Rewarder,
    vocab: &Vocabulary,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(Vec<Vec<f32>>, ScstDiag)>> {
    let mut tape: Tape<f32> = Tape::new();
    let params = model.bind(&mut tape, true)?;
    let Some((loss, diag)) = build_scst_image_loss(
        &mut tape, model, &params, features, references, rewarder, vocab, rng,
    )?
    else {
        return Ok(None);
    };
    let grads = tape.backward(loss)?;
    let out = params
        .storage_vars
        .iter()
        .enumerate()
        .map(|(i, v)| match grads.get_slice(*v) {
            Some(g) => g.to_vec(),
            None => vec![0.0; model.params.tensor_at(i).numel()],
        })
        .collect();
    Ok(Some((out, diag)))
}

//! Greedy, Monte-Carlo, and beam-search decoding over a frozen model.

use super::trajectory::{StepAttention, Trajectory};
use crate::autodiff::{Real, Tape};
use crate::data::{BOS, EOS};
use crate::error::{Error, Result};
use crate::model::{
    bind_image, init_state, model_step, CavpModel, RegionFeatureSet, StepState,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Argmax with ties broken toward the lowest vocabulary index.
fn greedy_pick(log_probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in log_probs.iter().enumerate() {
        if *v > log_probs[best] {
            best = i;
        }
    }
    best
}

fn multinomial_pick(log_probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen::<f64>();
    let mut cum = 0.0;
    for (i, lp) in log_probs.iter().enumerate() {
        cum += lp.exp();
        if u < cum {
            return i;
        }
    }
    log_probs.len() - 1
}

fn decode_with<R: Real>(
    model: &CavpModel<R>,
    features: &RegionFeatureSet,
    mut pick: impl FnMut(&[f64]) -> usize,
) -> Result<Trajectory> {
    let cfg = model.config().clone();
    let mut tape: Tape<R> = Tape::new();
    let params = model.bind(&mut tape, false)?;
    let bound = bind_image(&mut tape, features)?;
    let mut state = init_state(&mut tape, &cfg, &bound);

    let mut tokens = Vec::new();
    let mut log_probs = Vec::new();
    let mut attention = Vec::new();
    let mut prev = BOS;
    for _ in 0..cfg.max_len {
        let out = model_step(&mut tape, &cfg, &params, &bound, &state, prev)?;
        let lp: Vec<f64> = tape
            .value(out.lang.log_probs)
            .data()
            .iter()
            .map(|v| v.to_f64())
            .collect();
        let token = pick(&lp);
        tokens.push(token);
        log_probs.push(lp[token]);
        attention.push(StepAttention::from_step(&tape, &out.cavp));
        state = out.state;
        prev = token;
        if token == EOS {
            break;
        }
    }
    Ok(Trajectory::new(tokens, log_probs, attention))
}

/// Argmax decode; the self-critical baseline.
pub fn greedy_decode<R: Real>(
    model: &CavpModel<R>,
    features: &RegionFeatureSet,
) -> Result<Trajectory> {
    decode_with(model, features, greedy_pick)
}

/// Per-step multinomial sampling from the word distribution.
pub fn sample_decode<R: Real>(
    model: &CavpModel<R>,
    features: &RegionFeatureSet,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    decode_with(model, features, |lp| multinomial_pick(lp, rng))
}

/// Log-probability a frozen model assigns to a fixed token sequence,
/// computed by replaying the sequence (teacher forcing).
pub fn replay_log_prob<R: Real>(
    model: &CavpModel<R>,
    features: &RegionFeatureSet,
    tokens: &[usize],
) -> Result<f64> {
    let cfg = model.config().clone();
    let mut tape: Tape<R> = Tape::new();
    let params = model.bind(&mut tape, false)?;
    let bound = bind_image(&mut tape, features)?;
    let mut state = init_state(&mut tape, &cfg, &bound);
    let mut prev = BOS;
    let mut total = 0.0f64;
    for &tok in tokens {
        let out = model_step(&mut tape, &cfg, &params, &bound, &state, prev)?;
        total += tape.value(out.lang.log_probs).data()[tok].to_f64();
        state = out.state;
        prev = tok;
    }
    Ok(total)
}

struct Hypothesis {
    state: StepState,
    tokens: Vec<usize>,
    log_probs: Vec<f64>,
    attention: Vec<StepAttention>,
    total: f64,
    finished: bool,
}

/// Length-synchronous beam search over summed log-probabilities; no
/// length normalization. Hypotheses that emit the end token freeze and
/// keep competing on total log-probability. Each hypothesis carries its
/// own visual context and LSTM states.
pub fn beam_decode<R: Real>(
    model: &CavpModel<R>,
    features: &RegionFeatureSet,
    beam_width: usize,
) -> Result<Trajectory> {
    if beam_width < 1 {
        return Err(Error::contract("beam width must be at least 1"));
    }
    let cfg = model.config().clone();
    let mut tape: Tape<R> = Tape::new();
    let params = model.bind(&mut tape, false)?;
    let bound = bind_image(&mut tape, features)?;
    let root = init_state(&mut tape, &cfg, &bound);

    let mut beam = vec![Hypothesis {
        state: root,
        tokens: Vec::new(),
        log_probs: Vec::new(),
        attention: Vec::new(),
        total: 0.0,
        finished: false,
    }];

    for _ in 0..cfg.max_len {
        if beam.iter().all(|h| h.finished) {
            break;
        }
        // (total, parent, token); token == usize::MAX marks a frozen carry-over
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        let mut expansions: Vec<Option<(crate::model::StepOut, Vec<f64>)>> = Vec::new();
        for (i, hyp) in beam.iter().enumerate() {
            if hyp.finished {
                candidates.push((hyp.total, i, usize::MAX));
                expansions.push(None);
                continue;
            }
            let prev = *hyp.tokens.last().unwrap_or(&BOS);
            let out = model_step(&mut tape, &cfg, &params, &bound, &hyp.state, prev)?;
            let lp: Vec<f64> = tape
                .value(out.lang.log_probs)
                .data()
                .iter()
                .map(|v| v.to_f64())
                .collect();
            for (tok, l) in lp.iter().enumerate() {
                candidates.push((hyp.total + l, i, tok));
            }
            expansions.push(Some((out, lp)));
        }
        candidates.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(a.2.cmp(&b.2))
                .then(a.1.cmp(&b.1))
        });
        candidates.truncate(beam_width);

        let mut next = Vec::with_capacity(candidates.len());
        for (total, parent, tok) in candidates {
            let hyp = &beam[parent];
            if tok == usize::MAX {
                next.push(Hypothesis {
                    state: hyp.state.clone(),
                    tokens: hyp.tokens.clone(),
                    log_probs: hyp.log_probs.clone(),
                    attention: hyp.attention.clone(),
                    total,
                    finished: true,
                });
                continue;
            }
            let (out, lp) = expansions[parent].as_ref().expect("live parent expanded");
            let mut tokens = hyp.tokens.clone();
            tokens.push(tok);
            let mut log_probs = hyp.log_probs.clone();
            log_probs.push(lp[tok]);
            let mut attention = hyp.attention.clone();
            attention.push(StepAttention::from_step(&tape, &out.cavp));
            next.push(Hypothesis {
                state: out.state.clone(),
                tokens,
                log_probs,
                attention,
                total,
                finished: tok == EOS,
            });
        }
        beam = next;
    }

    let best = beam
        .into_iter()
        .max_by(|a, b| a.total.total_cmp(&b.total).then(b.tokens.cmp(&a.tokens)))
        .expect("beam never empties");
    Ok(Trajectory::new(best.tokens, best.log_probs, best.attention))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::model::{CavpVariant, ModelConfig};
    use rand_chacha::rand_core::SeedableRng;

    fn tiny_model(seed: u64) -> (CavpModel<f32>, RegionFeatureSet) {
        let cfg = ModelConfig::miniature(CavpVariant::Cavp4c);
        let model = CavpModel::init(&cfg, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
        let data: Vec<f32> = (0..cfg.num_regions * cfg.feature_dim)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let feats = RegionFeatureSet::new(
            Tensor::matrix(cfg.num_regions, cfg.feature_dim, data).unwrap(),
        )
        .unwrap();
        (model, feats)
    }

    #[test]
    fn greedy_equals_beam_one() {
        for seed in 0..5 {
            let (model, feats) = tiny_model(seed);
            let g = greedy_decode(&model, &feats).unwrap();
            let b = beam_decode(&model, &feats, 1).unwrap();
            assert_eq!(g.tokens, b.tokens, "seed {seed}");
            assert!((g.total_log_prob - b.total_log_prob).abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_token_is_argmax_each_step() {
        let (model, feats) = tiny_model(3);
        let t = greedy_decode(&model, &feats).unwrap();
        t.validate(model.config().max_len).unwrap();
        assert!(!t.tokens.is_empty());
    }

    #[test]
    fn stored_log_prob_matches_replay() {
        let (model, feats) = tiny_model(6);
        let t = greedy_decode(&model, &feats).unwrap();
        let replayed = replay_log_prob(&model, &feats, &t.tokens).unwrap();
        assert!(
            (replayed - t.total_log_prob).abs() < 1e-5,
            "replay {replayed} vs stored {}",
            t.total_log_prob
        );
    }

    #[test]
    fn fixed_seed_sampling_is_reproducible() {
        let (model, feats) = tiny_model(9);
        let mut r1 = ChaCha8Rng::seed_from_u64(77);
        let mut r2 = ChaCha8Rng::seed_from_u64(77);
        let a = sample_decode(&model, &feats, &mut r1).unwrap();
        let b = sample_decode(&model, &feats, &mut r2).unwrap();
        assert_eq!(a.tokens, b.tokens);
        assert_eq!(a.total_log_prob.to_bits(), b.total_log_prob.to_bits());
    }

    #[test]
    fn beam_zero_is_rejected() {
        let (model, feats) = tiny_model(1);
        assert!(beam_decode(&model, &feats, 0).is_err());
    }

    #[test]
    fn multinomial_frequencies_match_distribution() {
        // 3-token distribution sampled 10,000 times: counts within 3 sigma.
        let probs = [0.2f64, 0.5, 0.3];
        let lp: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let mut counts = [0usize; 3];
        let n = 10_000usize;
        for _ in 0..n {
            counts[multinomial_pick(&lp, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(probs.iter()) {
            let mean = n as f64 * p;
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (*c as f64 - mean).abs() < 3.0 * sigma,
                "count {c} vs mean {mean} (sigma {sigma})"
            );
        }
    }
}

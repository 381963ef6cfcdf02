//! Cross-entropy (teacher-forcing) loss, optionally mixed with the
//! behavior-cloning KL on the output sub-policy.

use super::expert::ExpertOutputPolicy;
use crate::autodiff::{Real, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::{
    bind_image, init_state, model_step, BoundParams, ModelConfig, RegionFeatureSet,
};
use crate::data::BOS;

/// Scalar pieces of one image's loss.
#[derive(Debug, Clone, Copy)]
pub struct XeImageLoss {
    /// Handle to the differentiable total: xe + lambda * kl.
    pub total: Var,
    pub xe_value: f64,
    pub kl_value: Option<f64>,
}

/// Builds `-sum_t log pi(y_t | y_<t)` over the provided target tokens
/// (teacher forcing). The caller decides whether the end token is part
/// of the target sequence. With `cloning = Some((expert, lambda))` the
/// mean KL between the expert and the output sub-policy distribution is
/// added with weight lambda.
pub fn xe_image_loss<R: Real>(
    tape: &mut Tape<R>,
    cfg: &ModelConfig,
    params: &BoundParams,
    features: &RegionFeatureSet,
    targets: &[usize],
    cloning: Option<(&ExpertOutputPolicy, f64)>,
) -> Result<XeImageLoss> {
    if targets.is_empty() {
        return Err(Error::contract("xe loss over an empty target sequence"));
    }
    if let Some((expert, _)) = cloning {
        if expert.targets.len() != targets.len() {
            return Err(Error::contract(format!(
                "expert policy has {} targets for {} tokens",
                expert.targets.len(),
                targets.len()
            )));
        }
        if !cfg.variant.has_composition() {
            return Err(Error::contract(
                "behavior cloning requires an output sub-policy",
            ));
        }
    }

    let bound = bind_image(tape, features)?;
    let mut state = init_state(tape, cfg, &bound);
    let mut prev = BOS;
    let mut picked = Vec::with_capacity(targets.len());
    let mut kl_terms = Vec::new();
    for (t, &target) in targets.iter().enumerate() {
        let out = model_step(tape, cfg, params, &bound, &state, prev)?;
        picked.push(tape.index(out.lang.log_probs, target)?);
        if let Some((expert, _)) = cloning {
            let logits = out
                .cavp
                .output_logits
                .ok_or_else(|| Error::contract("output sub-policy produced no logits"))?;
            let log_pi = tape.log_softmax(logits)?;
            let e = expert.targets[t];
            let e_const = tape.constant(Tensor::vector(vec![
                R::from_f64(e[0]),
                R::from_f64(e[1]),
            ]));
            let cross = tape.dot(e_const, log_pi)?;
            let neg_cross = tape.scale(cross, -1.0)?;
            let entropy: f64 = e
                .iter()
                .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
                .sum();
            let ent_const = tape.constant(Tensor::scalar(R::from_f64(entropy)));
            kl_terms.push(tape.add(ent_const, neg_cross)?);
        }
        state = out.state;
        prev = target;
    }

    let log_prob_sum = tape.add_all(&picked)?;
    let xe = tape.scale(log_prob_sum, -1.0)?;
    let xe_value = tape.value(xe).data()[0].to_f64();

    match cloning {
        Some((_, lambda)) if !kl_terms.is_empty() => {
            let kl_sum = tape.add_all(&kl_terms)?;
            let kl_mean = tape.scale(kl_sum, 1.0 / kl_terms.len() as f64)?;
            let kl_value = tape.value(kl_mean).data()[0].to_f64();
            let weighted = tape.scale(kl_mean, lambda)?;
            let total = tape.add(xe, weighted)?;
            Ok(XeImageLoss {
                total,
                xe_value,
                kl_value: Some(kl_value),
            })
        }
        _ => Ok(XeImageLoss {
            total: xe,
            xe_value,
            kl_value: None,
        }),
    }
}

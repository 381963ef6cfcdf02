//! Per-image sequence driver shared by training and decoding: one model
//! step consumes the previous token and produces the next word
//! distribution together with the visual-policy record.

use super::attend::{SubPolicyState, VisualContext};
use super::cavp::{cavp_step, CavpStepOutput, SpStates};
use super::config::ModelConfig;
use super::features::{bind_features, BoundFeatures, RegionFeatureSet};
use super::language::{language_step, LanguageStepOut};
use super::params::{BoundParams, ParamStore};
use crate::autodiff::{LstmState, Real, Tape, Tensor, Var};
use crate::error::Result;

/// Everything that evolves across steps of one sequence. Handles only;
/// cloning is cheap, which beam search relies on.
#[derive(Debug, Clone)]
pub struct StepState {
    pub sp: SpStates,
    pub lang: LstmState,
    pub ctx: VisualContext,
}

/// Per-step result: the word distribution plus the visual-policy record.
#[derive(Debug, Clone)]
pub struct StepOut {
    pub lang: LanguageStepOut,
    pub cavp: CavpStepOutput,
    pub state: StepState,
}

/// Model = configuration + named parameters.
#[derive(Debug, Clone)]
pub struct CavpModel<R: Real> {
    pub params: ParamStore<R>,
}

impl<R: Real> CavpModel<R> {
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        CavpModel {
            params: ParamStore::init(cfg, seed),
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.params.config
    }

    pub fn bind(&self, tape: &mut Tape<R>, trainable: bool) -> Result<BoundParams> {
        self.params.bind(tape, trainable)
    }
}

impl CavpModel<f32> {
    pub fn to_f64(&self) -> CavpModel<f64> {
        CavpModel {
            params: self.params.to_f64(),
        }
    }
}

/// Binds one image's features onto the tape.
pub fn bind_image<R: Real>(
    tape: &mut Tape<R>,
    feats: &RegionFeatureSet,
) -> Result<BoundFeatures> {
    bind_features(tape, feats)
}

/// Fresh per-image state: zero LSTM states, context seeded with the
/// mean-pooled regions.
pub fn init_state<R: Real>(
    tape: &mut Tape<R>,
    cfg: &ModelConfig,
    features: &BoundFeatures,
) -> StepState {
    let sp = SpStates::zeros(tape, cfg.hidden_dim);
    let lang = LstmState {
        h: tape.constant(Tensor::zeros(vec![cfg.hidden_dim])),
        c: tape.constant(Tensor::zeros(vec![cfg.hidden_dim])),
    };
    StepState {
        sp,
        lang,
        ctx: VisualContext::seeded(features.mean),
    }
}

/// One model step given the previously emitted (or teacher-forced) token.
pub fn model_step<R: Real>(
    tape: &mut Tape<R>,
    cfg: &ModelConfig,
    params: &BoundParams,
    features: &BoundFeatures,
    state: &StepState,
    prev_token: usize,
) -> Result<StepOut> {
    let prev_embed = tape.embed_row(params.embed, prev_token)?;
    let sp_state = SubPolicyState {
        lang_hidden: state.lang.h,
        mean_pool: features.mean,
        prev_embed,
    };
    let mut ctx = state.ctx.clone();
    let (cavp, sp_next) = cavp_step(tape, cfg, params, features, &sp_state, &state.sp, &mut ctx)?;
    let lang = language_step(tape, cavp.h_single, cavp.v, state.lang, params)?;
    Ok(StepOut {
        state: StepState {
            sp: sp_next,
            lang: lang.state,
            ctx,
        },
        lang,
        cavp,
    })
}

/// Word distribution as plain probabilities (exp of the log-softmax).
pub fn distribution_f64<R: Real>(tape: &Tape<R>, log_probs: Var) -> Vec<f64> {
    tape.value(log_probs)
        .data()
        .iter()
        .map(|v| v.to_f64().exp())
        .collect()
}

//! The visual policy: single, context, composition, and output
//! sub-policies composed into one per-step visual representation.

use super::attend::{sub_policy_attend, AttendOutcome, SubPolicyState, VisualContext};
use super::config::ModelConfig;
use super::features::BoundFeatures;
use super::params::BoundParams;
use crate::autodiff::{LstmState, Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Per-step LSTM states of the four sub-policies. States are never
/// shared even when parameters are.
#[derive(Debug, Clone, Copy)]
pub struct SpStates {
    pub single: LstmState,
    pub context: LstmState,
    pub composition: LstmState,
    pub output: LstmState,
}

impl SpStates {
    pub fn zeros<R: Real>(tape: &mut Tape<R>, hidden: usize) -> Self {
        let mut mk = || LstmState {
            h: tape.constant(Tensor::zeros(vec![hidden])),
            c: tape.constant(Tensor::zeros(vec![hidden])),
        };
        SpStates {
            single: mk(),
            context: mk(),
            composition: mk(),
            output: mk(),
        }
    }
}

/// Everything one CAVP step produces.
#[derive(Debug, Clone)]
pub struct CavpStepOutput {
    /// Fused visual representation v_t fed to the language policy and
    /// appended to the visual context.
    pub v: Var,
    /// Single-sub-policy feature v_t^s.
    pub v_single: Var,
    /// Composition feature v_t^p (absent in the Single variant).
    pub v_comp: Option<Var>,
    /// Post-transition hidden of the single sub-policy, h_t^s.
    pub h_single: Var,
    /// Attention distributions (simplex over each query set).
    pub attn_single: Var,
    pub attn_context: Option<Var>,
    pub attn_composition: Option<Var>,
    /// Two-way single-vs-composition distribution of the output
    /// sub-policy, exposed for behavior cloning and visualization.
    pub attn_output: Option<Var>,
    /// Pre-softmax scores of the output sub-policy (log-domain losses).
    pub output_logits: Option<Var>,
    /// Chosen context representation f_t^c.
    pub fused_context: Option<Var>,
    /// Context-region projections c_{t,i}, the composition queries.
    pub fused_regions: Option<Vec<Var>>,
}

/// Single sub-policy: attention over the detected region features.
pub fn single_sub_policy<R: Real>(
    tape: &mut Tape<R>,
    state: Var,
    lstm: LstmState,
    features: &BoundFeatures,
    params: &BoundParams,
) -> Result<AttendOutcome> {
    sub_policy_attend(tape, state, lstm, &features.regions, &params.single)
}

/// Context sub-policy: attention over the previous visual outputs.
pub fn context_sub_policy<R: Real>(
    tape: &mut Tape<R>,
    state: Var,
    lstm: LstmState,
    ctx: &VisualContext,
    params: &BoundParams,
) -> Result<AttendOutcome> {
    let queries = ctx.queries();
    let p = params
        .context
        .as_ref()
        .ok_or_else(|| Error::contract("context sub-policy not present in this variant"))?;
    sub_policy_attend(tape, state, lstm, &queries, p)
}

/// Projects `[f_t^c ; r_i]` back to the region feature dimension for
/// every region.
pub fn fuse_context<R: Real>(
    tape: &mut Tape<R>,
    fused_ctx: Var,
    features: &BoundFeatures,
    fuse_w: Var,
) -> Result<Vec<Var>> {
    let d = tape.value(fused_ctx).shape()[0];
    let ws = tape.value(fuse_w).shape().to_vec();
    if ws != [d, 2 * d] {
        return Err(Error::ShapeMismatch {
            op: "fuse_context (weight must map 2D -> D)",
            lhs: ws,
            rhs: vec![d, 2 * d],
        });
    }
    features
        .regions
        .iter()
        .map(|r| {
            let cat = tape.concat(&[fused_ctx, *r])?;
            tape.matvec(fuse_w, cat)
        })
        .collect()
}

/// Composition sub-policy: attention over the fused context-region pairs.
pub fn composition_sub_policy<R: Real>(
    tape: &mut Tape<R>,
    state: Var,
    lstm: LstmState,
    fused: &[Var],
    params: &BoundParams,
) -> Result<AttendOutcome> {
    let p = params
        .composition
        .as_ref()
        .ok_or_else(|| Error::contract("composition sub-policy not present in this variant"))?;
    sub_policy_attend(tape, state, lstm, fused, p)
}

/// Output sub-policy: two-way attention over the single and composition
/// features.
pub fn output_sub_policy<R: Real>(
    tape: &mut Tape<R>,
    state: Var,
    lstm: LstmState,
    v_single: Var,
    v_comp: Var,
    params: &BoundParams,
) -> Result<AttendOutcome> {
    let p = params
        .output
        .as_ref()
        .ok_or_else(|| Error::contract("output sub-policy not present in this variant"))?;
    sub_policy_attend(tape, state, lstm, &[v_single, v_comp], p)
}

/// One full CAVP step. Appends v_t to the context and returns the fresh
/// sub-policy states alongside the step record.
pub fn cavp_step<R: Real>(
    tape: &mut Tape<R>,
    cfg: &ModelConfig,
    params: &BoundParams,
    features: &BoundFeatures,
    sp_state: &SubPolicyState,
    states: &SpStates,
    ctx: &mut VisualContext,
) -> Result<(CavpStepOutput, SpStates)> {
    let state_vec = sp_state.concat(tape)?;
    let single = single_sub_policy(tape, state_vec, states.single, features, params)?;

    if !cfg.variant.has_composition() {
        let out = CavpStepOutput {
            v: single.fused,
            v_single: single.fused,
            v_comp: None,
            h_single: single.state.h,
            attn_single: single.weights,
            attn_context: None,
            attn_composition: None,
            attn_output: None,
            output_logits: None,
            fused_context: None,
            fused_regions: None,
        };
        ctx.push(out.v);
        let next = SpStates {
            single: single.state,
            ..*states
        };
        return Ok((out, next));
    }

    // Context: full attention over the history, or just the last output.
    let (fused_ctx, attn_context, context_state) = if cfg.variant.full_context_attention() {
        let c = context_sub_policy(tape, state_vec, states.context, ctx, params)?;
        (c.fused, Some(c.weights), c.state)
    } else {
        (ctx.last(), None, states.context)
    };

    let fuse_w = params
        .fuse_w
        .ok_or_else(|| Error::contract("fuse weight missing"))?;
    let fused_regions = fuse_context(tape, fused_ctx, features, fuse_w)?;
    let comp = composition_sub_policy(tape, state_vec, states.composition, &fused_regions, params)?;
    let output = output_sub_policy(
        tape,
        state_vec,
        states.output,
        single.fused,
        comp.fused,
        params,
    )?;

    let out = CavpStepOutput {
        v: output.fused,
        v_single: single.fused,
        v_comp: Some(comp.fused),
        h_single: single.state.h,
        attn_single: single.weights,
        attn_context,
        attn_composition: Some(comp.weights),
        attn_output: Some(output.weights),
        output_logits: Some(output.logits),
        fused_context: Some(fused_ctx),
        fused_regions: Some(fused_regions.clone()),
    };
    ctx.push(out.v);
    let next = SpStates {
        single: single.state,
        context: context_state,
        composition: comp.state,
        output: output.state,
    };
    Ok((out, next))
}

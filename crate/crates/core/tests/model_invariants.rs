//! Architecture invariants: simplex attention, convex-hull bounds,
//! weight-sharing counts, variant equalities, and context-order
//! behavior, checked by driving the model step by step.

use cavp_core::autodiff::{Tape, Tensor, Var};
use cavp_core::data::BOS;
use cavp_core::model::{
    bind_image, init_state, model_step, sub_policy_attend, CavpModel, CavpVariant, ModelConfig,
    ParamStore, RegionFeatureSet,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_features(cfg: &ModelConfig, seed: u64) -> RegionFeatureSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f32> = (0..cfg.num_regions * cfg.feature_dim)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    RegionFeatureSet::new(Tensor::matrix(cfg.num_regions, cfg.feature_dim, data).unwrap()).unwrap()
}

fn assert_simplex(dist: &[f32], what: &str) {
    let mut sum = 0.0f64;
    for v in dist {
        assert!(*v >= 0.0, "{what}: negative weight {v}");
        sum += *v as f64;
    }
    assert!((sum - 1.0).abs() < 1e-6, "{what}: sums to {sum}");
}

fn assert_in_hull(tape: &Tape<f32>, fused: Var, queries: &[Var], what: &str) {
    let f = tape.value(fused).data();
    for (d, fv) in f.iter().enumerate() {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for q in queries {
            let qv = tape.value(*q).data()[d];
            lo = lo.min(qv);
            hi = hi.max(qv);
        }
        assert!(
            *fv >= lo - 1e-6 && *fv <= hi + 1e-6,
            "{what}: component {d} = {fv} outside [{lo}, {hi}]"
        );
    }
}

#[test]
fn attention_simplex_and_hull_hold_across_random_decodes() {
    // Many random models and images, every step of a greedy rollout.
    let mut decodes = 0;
    for seed in 0..60u64 {
        let variant = match seed % 3 {
            0 => CavpVariant::Cavp4c,
            1 => CavpVariant::Cavp4p,
            _ => CavpVariant::Cavp3p,
        };
        let cfg = ModelConfig::miniature(variant);
        let model = CavpModel::<f32>::init(&cfg, seed);
        let feats = random_features(&cfg, seed ^ 0xf00d);
        let mut tape: Tape<f32> = Tape::new();
        let params = model.bind(&mut tape, false).unwrap();
        let bound = bind_image(&mut tape, &feats).unwrap();
        let mut state = init_state(&mut tape, &cfg, &bound);
        let mut prev = BOS;
        for step in 0..6 {
            let ctx_queries = state.ctx.queries();
            let out = model_step(&mut tape, &cfg, &params, &bound, &state, prev).unwrap();
            let what = format!("seed {seed} step {step}");

            assert_simplex(tape.value(out.cavp.attn_single).data(), &what);
            assert_in_hull(&tape, out.cavp.v_single, &bound.regions, &what);

            if let Some(w) = out.cavp.attn_context {
                assert_simplex(tape.value(w).data(), &what);
            }
            if let Some(fc) = out.cavp.fused_context {
                assert_in_hull(&tape, fc, &ctx_queries, &what);
            }
            if let (Some(w), Some(vc), Some(fr)) = (
                out.cavp.attn_composition,
                out.cavp.v_comp,
                out.cavp.fused_regions.as_ref(),
            ) {
                assert_simplex(tape.value(w).data(), &what);
                assert_in_hull(&tape, vc, fr, &what);
                let queries = [out.cavp.v_single, vc];
                assert_in_hull(&tape, out.cavp.v, &queries, &what);
            }
            if let Some(w) = out.cavp.attn_output {
                assert_simplex(tape.value(w).data(), &what);
            }
            // language distribution is a simplex too
            let probs: Vec<f32> = tape
                .value(out.lang.log_probs)
                .data()
                .iter()
                .map(|v| v.exp())
                .collect();
            assert_simplex(&probs, &what);

            // greedy next token
            let lp = tape.value(out.lang.log_probs).data();
            let mut best = 0;
            for (i, v) in lp.iter().enumerate() {
                if *v > lp[best] {
                    best = i;
                }
            }
            state = out.state;
            prev = best;
            decodes += 1;
        }
    }
    assert!(decodes >= 300);
}

#[test]
fn output_mixture_reconstructs_from_returned_weights() {
    let cfg = ModelConfig::miniature(CavpVariant::Cavp4c);
    let model = CavpModel::<f32>::init(&cfg, 5);
    let feats = random_features(&cfg, 6);
    let mut tape: Tape<f32> = Tape::new();
    let params = model.bind(&mut tape, false).unwrap();
    let bound = bind_image(&mut tape, &feats).unwrap();
    let state = init_state(&mut tape, &cfg, &bound);
    let out = model_step(&mut tape, &cfg, &params, &bound, &state, BOS).unwrap();

    let w = tape.value(out.cavp.attn_output.unwrap()).data().to_vec();
    let vs = tape.value(out.cavp.v_single).data().to_vec();
    let vp = tape.value(out.cavp.v_comp.unwrap()).data().to_vec();
    let v = tape.value(out.cavp.v).data();
    for d in 0..v.len() {
        let want = w[0] * vs[d] + w[1] * vp[d];
        assert!((v[d] - want).abs() < 1e-6, "dim {d}: {} vs {want}", v[d]);
    }
}

#[test]
fn sharing_counts_per_variant() {
    for (variant, want) in [
        (CavpVariant::Cavp4c, 1usize),
        (CavpVariant::Cavp4p, 1),
        (CavpVariant::Cavp3p, 2),
    ] {
        let store = ParamStore::<f32>::init(&ModelConfig::miniature(variant), 3);
        assert_eq!(store.distinct_sp_lstm_sets(), want, "{variant:?}");
        // attention triples stay distinct per sub-policy
        for name in ["single", "context", "composition", "output"] {
            assert!(store.get(&format!("sp.{name}.attn.w_a")).is_ok());
        }
    }
}

#[test]
fn cavp4p_and_cavp4c_agree_up_to_length_two() {
    // Same parameters, same inputs: with at most one element in the
    // context set the full attention reduces to the single query.
    for seed in 0..10u64 {
        let cfg4c = ModelConfig::miniature(CavpVariant::Cavp4c);
        let cfg4p = ModelConfig::miniature(CavpVariant::Cavp4p);
        let m4c = CavpModel::<f32>::init(&cfg4c, seed);
        let m4p = CavpModel::<f32>::init(&cfg4p, seed);
        for name in m4c.params.names() {
            assert_eq!(
                m4c.params.get(name).unwrap(),
                m4p.params.get(name).unwrap(),
                "init differs at {name}"
            );
        }
        let feats = random_features(&cfg4c, seed ^ 0xbeef);

        let run = |model: &CavpModel<f32>, cfg: &ModelConfig| -> Vec<Vec<f32>> {
            let mut tape: Tape<f32> = Tape::new();
            let params = model.bind(&mut tape, false).unwrap();
            let bound = bind_image(&mut tape, &feats).unwrap();
            let mut state = init_state(&mut tape, cfg, &bound);
            let mut outs = Vec::new();
            let mut prev = BOS;
            for _ in 0..2 {
                let out = model_step(&mut tape, cfg, &params, &bound, &state, prev).unwrap();
                outs.push(tape.value(out.cavp.v).data().to_vec());
                outs.push(tape.value(out.lang.log_probs).data().to_vec());
                let lp = tape.value(out.lang.log_probs).data();
                let mut best = 0;
                for (i, v) in lp.iter().enumerate() {
                    if *v > lp[best] {
                        best = i;
                    }
                }
                prev = best;
                state = out.state;
            }
            outs
        };
        let a = run(&m4c, &cfg4c);
        let b = run(&m4p, &cfg4p);
        for (x, y) in a.iter().zip(b.iter()) {
            for (u, v) in x.iter().zip(y.iter()) {
                assert!((u - v).abs() < 1e-6, "seed {seed}: {u} vs {v}");
            }
        }
    }
}

#[test]
fn context_permutation_leaves_weight_multiset_invariant() {
    // Attention over a permuted query set yields the permuted weights.
    let cfg = ModelConfig::miniature(CavpVariant::Cavp4c);
    let store = ParamStore::<f32>::init(&cfg, 21);
    let mut tape: Tape<f32> = Tape::new();
    let bound = store.bind(&mut tape, false).unwrap();
    let ctx_params = bound.context.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    let state_dim = cfg.sp_state_dim();
    let state = tape.constant(Tensor::vector(
        (0..state_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    ));
    let lstm = cavp_core::autodiff::LstmState {
        h: tape.constant(Tensor::vector(
            (0..cfg.hidden_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )),
        c: tape.constant(Tensor::zeros(vec![cfg.hidden_dim])),
    };
    let queries: Vec<Var> = (0..5)
        .map(|_| {
            tape.constant(Tensor::vector(
                (0..cfg.feature_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            ))
        })
        .collect();

    let base = sub_policy_attend(&mut tape, state, lstm, &queries, &ctx_params).unwrap();
    let mut base_w = tape.value(base.weights).data().to_vec();
    base_w.sort_by(f32::total_cmp);

    let permuted: Vec<Var> = vec![queries[3], queries[0], queries[4], queries[2], queries[1]];
    let perm = sub_policy_attend(&mut tape, state, lstm, &permuted, &ctx_params).unwrap();
    let mut perm_w = tape.value(perm.weights).data().to_vec();
    perm_w.sort_by(f32::total_cmp);

    for (a, b) in base_w.iter().zip(perm_w.iter()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn cavp_step_equals_manual_composition_of_sub_policies() {
    use cavp_core::model::attend::VisualContext;
    use cavp_core::model::cavp::{
        composition_sub_policy, context_sub_policy, fuse_context, output_sub_policy,
        single_sub_policy, SpStates,
    };
    use cavp_core::model::SubPolicyState;

    let cfg = ModelConfig::miniature(CavpVariant::Cavp4c);
    let model = CavpModel::<f32>::init(&cfg, 31);
    let feats = random_features(&cfg, 32);

    // integrated step
    let mut tape: Tape<f32> = Tape::new();
    let params = model.bind(&mut tape, false).unwrap();
    let bound = bind_image(&mut tape, &feats).unwrap();
    let state = init_state(&mut tape, &cfg, &bound);
    let out = model_step(&mut tape, &cfg, &params, &bound, &state, BOS).unwrap();
    let integrated_v = tape.value(out.cavp.v).data().to_vec();
    let integrated_h = tape.value(out.cavp.h_single).data().to_vec();

    // the same step assembled by hand from the four operations
    let mut tape2: Tape<f32> = Tape::new();
    let params2 = model.bind(&mut tape2, false).unwrap();
    let bound2 = bind_image(&mut tape2, &feats).unwrap();
    let state2 = init_state(&mut tape2, &cfg, &bound2);
    let emb = tape2.embed_row(params2.embed, BOS).unwrap();
    let sp_state = SubPolicyState {
        lang_hidden: state2.lang.h,
        mean_pool: bound2.mean,
        prev_embed: emb,
    };
    let sv = sp_state.concat(&mut tape2).unwrap();
    let states = SpStates::zeros(&mut tape2, cfg.hidden_dim);
    let single = single_sub_policy(&mut tape2, sv, states.single, &bound2, &params2).unwrap();
    let ctx = VisualContext::seeded(bound2.mean);
    let context = context_sub_policy(&mut tape2, sv, states.context, &ctx, &params2).unwrap();
    let fused = fuse_context(&mut tape2, context.fused, &bound2, params2.fuse_w.unwrap()).unwrap();
    let comp =
        composition_sub_policy(&mut tape2, sv, states.composition, &fused, &params2).unwrap();
    let output = output_sub_policy(
        &mut tape2,
        sv,
        states.output,
        single.fused,
        comp.fused,
        &params2,
    )
    .unwrap();

    let manual_v = tape2.value(output.fused).data().to_vec();
    let manual_h = tape2.value(single.state.h).data().to_vec();
    for (a, b) in integrated_v.iter().zip(manual_v.iter()) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    for (a, b) in integrated_h.iter().zip(manual_h.iter()) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn language_step_matches_manual_lstm_affine_softmax() {
    use cavp_core::autodiff::lstm_step;
    use cavp_core::model::language_step;

    let cfg = ModelConfig::miniature(CavpVariant::Cavp4c);
    let store = ParamStore::<f32>::init(&cfg, 77);
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let h_single: Vec<f32> = (0..cfg.hidden_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v: Vec<f32> = (0..cfg.feature_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let mut tape: Tape<f32> = Tape::new();
    let bound = store.bind(&mut tape, false).unwrap();
    let hs = tape.constant(Tensor::vector(h_single.clone()));
    let vv = tape.constant(Tensor::vector(v.clone()));
    let state = cavp_core::autodiff::LstmState {
        h: tape.constant(Tensor::zeros(vec![cfg.hidden_dim])),
        c: tape.constant(Tensor::zeros(vec![cfg.hidden_dim])),
    };
    let out = language_step(&mut tape, hs, vv, state, &bound).unwrap();

    // manual composition on a fresh tape
    let mut tape2: Tape<f32> = Tape::new();
    let bound2 = store.bind(&mut tape2, false).unwrap();
    let hs2 = tape2.constant(Tensor::vector(h_single));
    let vv2 = tape2.constant(Tensor::vector(v));
    let state2 = cavp_core::autodiff::LstmState {
        h: tape2.constant(Tensor::zeros(vec![cfg.hidden_dim])),
        c: tape2.constant(Tensor::zeros(vec![cfg.hidden_dim])),
    };
    let x = tape2.concat(&[hs2, vv2]).unwrap();
    let next = lstm_step(&mut tape2, x, state2, &bound2.lang_lstm).unwrap();
    let proj = tape2.matvec(bound2.proj_w, next.h).unwrap();
    let logits = tape2.add(proj, bound2.proj_b).unwrap();
    let log_probs = tape2.log_softmax(logits).unwrap();

    for (a, b) in tape
        .value(out.log_probs)
        .data()
        .iter()
        .zip(tape2.value(log_probs).data().iter())
    {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
    // the distribution really is the softmax of those logits
    let probs: f32 = tape.value(out.log_probs).data().iter().map(|l| l.exp()).sum();
    assert!((probs - 1.0).abs() < 1e-5);
}

#[test]
fn single_variant_output_equals_single_sub_policy() {
    let cfg = ModelConfig::miniature(CavpVariant::Single);
    let model = CavpModel::<f32>::init(&cfg, 8);
    let feats = random_features(&cfg, 9);
    let mut tape: Tape<f32> = Tape::new();
    let params = model.bind(&mut tape, false).unwrap();
    let bound = bind_image(&mut tape, &feats).unwrap();
    let state = init_state(&mut tape, &cfg, &bound);
    let out = model_step(&mut tape, &cfg, &params, &bound, &state, BOS).unwrap();
    assert!(out.cavp.v_comp.is_none());
    assert!(out.cavp.attn_output.is_none());
    assert_eq!(
        tape.value(out.cavp.v).data(),
        tape.value(out.cavp.v_single).data()
    );
}

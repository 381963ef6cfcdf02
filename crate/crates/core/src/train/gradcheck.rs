//! The full gradient-verification suite: every tape primitive, the LSTM
//! cell, and the composed whole-model cross-entropy loss, all against
//! central finite differences in double precision.

use super::expert::ExpertOutputPolicy;
use super::xe::xe_image_loss;
use crate::autodiff::check::{
    analytic_gradient, check_graph, fd_gradient, lstm_checks, max_rel_error, primitive_checks,
    CheckOutcome,
};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::Result;
use crate::model::{CavpModel, CavpVariant, ModelConfig, RegionFeatureSet};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub outcomes: Vec<CheckOutcome>,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn worst(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.max_rel_err)
            .fold(0.0, f64::max)
    }
}

fn random_features(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> RegionFeatureSet {
    let data: Vec<f32> = (0..cfg.num_regions * cfg.feature_dim)
        .map(|_| rng.gen_range(-1.0f32..1.0))
        .collect();
    RegionFeatureSet::new(
        Tensor::matrix(cfg.num_regions, cfg.feature_dim, data).expect("feature shape"),
    )
    .expect("finite features")
}

/// Whole-model teacher-forced loss as a function of every parameter,
/// checked by finite differences. `cloning` adds the behavior-cloning KL
/// with weight 0.1.
pub fn full_model_check(
    name: &str,
    variant: CavpVariant,
    cloning: bool,
    base: u64,
    count: u64,
    eps: f64,
    tol: f64,
) -> Result<CheckOutcome> {
    let cfg = ModelConfig::miniature(variant);
    let mut worst = 0.0f64;
    for seed in base..base + count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(6151).wrapping_add(3));
        let model = CavpModel::<f64>::init(&cfg, seed + 1);
        let features = random_features(&cfg, &mut rng);
        let targets: Vec<usize> = (0..3).map(|_| rng.gen_range(0..cfg.vocab_size)).collect();
        let expert = cloning.then(|| ExpertOutputPolicy {
            targets: vec![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]],
        });

        let inputs: Vec<Tensor<f64>> = (0..model.params.len())
            .map(|i| model.params.tensor_at(i).clone())
            .collect();
        let store = &model.params;
        let build = |tape: &mut Tape<f64>, vars: &[Var]| -> Result<Var> {
            let bound = store.resolve(vars.to_vec())?;
            let loss = xe_image_loss(
                tape,
                &cfg,
                &bound,
                &features,
                &targets,
                expert.as_ref().map(|e| (e, 0.1)),
            )?;
            Ok(loss.total)
        };
        let outcome = check_graph(name, &build, &inputs, eps, tol)?;
        worst = worst.max(outcome.max_rel_err);
    }
    Ok(CheckOutcome {
        name: name.to_string(),
        max_rel_err: worst,
        passed: worst < tol,
    })
}

/// A deliberately corrupted gradient that the comparison must flag;
/// the negative control for the suite itself.
fn fault_injection_check(eps: f64, tol: f64) -> Result<CheckOutcome> {
    let inputs = vec![Tensor::vector(vec![0.3f64, -0.7, 1.1])];
    let build = |tape: &mut Tape<f64>, vars: &[Var]| -> Result<Var> {
        let t = tape.tanh(vars[0])?;
        tape.sum(t)
    };
    let mut analytic = analytic_gradient(&build, &inputs)?;
    for g in analytic.iter_mut() {
        for v in g.iter_mut() {
            *v *= 1.02;
        }
    }
    let numeric = fd_gradient(&build, &inputs, eps)?;
    let err = max_rel_error(&analytic, &numeric);
    Ok(CheckOutcome {
        name: "fault_injection".to_string(),
        max_rel_err: err,
        passed: err < tol,
    })
}

/// Runs everything. With `inject_fault` a corrupted-gradient control is
/// added; the suite must then report failure.
pub fn run_full_suite(
    base: u64,
    count: u64,
    eps: f64,
    tol: f64,
    inject_fault: bool,
) -> Result<GradCheckReport> {
    let mut outcomes = primitive_checks(base, count, eps, tol)?;
    outcomes.push(lstm_checks(base, count, eps, tol)?);
    outcomes.push(full_model_check(
        "full_model_xe_cavp4c",
        CavpVariant::Cavp4c,
        false,
        base,
        count,
        eps,
        tol,
    )?);
    outcomes.push(full_model_check(
        "full_model_xe_cloning_cavp4c",
        CavpVariant::Cavp4c,
        true,
        base,
        count.min(5),
        eps,
        tol,
    )?);
    outcomes.push(full_model_check(
        "full_model_xe_cavp3p",
        CavpVariant::Cavp3p,
        false,
        base,
        count.min(5),
        eps,
        tol,
    )?);
    outcomes.push(full_model_check(
        "full_model_xe_single",
        CavpVariant::Single,
        false,
        base,
        count.min(5),
        eps,
        tol,
    )?);
    if inject_fault {
        outcomes.push(fault_injection_check(eps, tol)?);
    }
    Ok(GradCheckReport { outcomes, tol })
}

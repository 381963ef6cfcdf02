//! The training loop: batched gradient accumulation with a deterministic
//! ordered reduction, per-epoch checkpoints, and a line-delimited
//! metrics log.

use super::adam::Adam;
use super::checkpoint::save_checkpoint;
use super::config::{Phase, TrainConfig, SCST_GRAD_CLIP};
use super::expert::{build_expert_policy, ExpertOutputPolicy};
use super::scst::build_scst_image_loss;
use super::xe::xe_image_loss;
use crate::data::{vocab::EOS_TOKEN, Dataset, Split, Vocabulary, EOS};
use crate::error::{Error, Result};
use crate::metrics::{RewardKind, Rewarder, TfIdfIndex};
use crate::model::CavpModel;
use crate::autodiff::Tape;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One line of the metrics log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub phase: Phase,
    pub lr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xe_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cloning_kl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_sample_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_greedy_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_advantage: Option<f64>,
    pub skipped: usize,
}

/// Optimizer/RNG continuation when initializing from a same-phase
/// checkpoint.
pub struct ResumeState {
    pub epoch: usize,
    pub adam: Adam,
    pub rng: ChaCha8Rng,
}

pub fn checkpoint_path(out_dir: &Path, epoch: usize) -> PathBuf {
    out_dir.join(format!("ckpt_epoch_{epoch:03}.bin"))
}

struct ImageResult {
    grads: Option<Vec<Vec<f32>>>,
    xe: f64,
    kl: Option<f64>,
    sample_reward: f64,
    greedy_reward: f64,
    advantage: f64,
    skipped: bool,
}

struct ImageJob<'a> {
    index: usize,
    rng_seed: u64,
    ref_choice: usize,
    expert: Option<&'a ExpertOutputPolicy>,
}

struct TrainContext<'a> {
    model: &'a CavpModel<f32>,
    vocab: &'a Vocabulary,
    dataset: &'a Dataset,
    cfg: &'a TrainConfig,
    targets: &'a [Vec<Vec<usize>>],
    rewarder: Option<&'a Rewarder>,
}

fn run_image(ctx: &TrainContext, job: &ImageJob) -> Result<ImageResult> {
    let features = &ctx.dataset.features[job.index].features;
    match ctx.cfg.phase {
        Phase::Xe => {
            let target = &ctx.targets[job.index][job.ref_choice];
            let cloning = job
                .expert
                .map(|e| (e, ctx.cfg.cloning_weight))
                .filter(|_| ctx.cfg.cloning_weight > 0.0);
            let mut tape: Tape<f32> = Tape::new();
            let params = ctx.model.bind(&mut tape, true)?;
            let loss = xe_image_loss(
                &mut tape,
                ctx.model.config(),
                &params,
                features,
                target,
                cloning,
            )?;
            let grads = tape.backward(loss.total)?;
            let out = params
                .storage_vars
                .iter()
                .enumerate()
                .map(|(i, v)| match grads.get_slice(*v) {
                    Some(g) => g.to_vec(),
                    None => vec![0.0; ctx.model.params.tensor_at(i).numel()],
                })
                .collect();
            Ok(ImageResult {
                grads: Some(out),
                xe: loss.xe_value,
                kl: loss.kl_value,
                sample_reward: 0.0,
                greedy_reward: 0.0,
                advantage: 0.0,
                skipped: false,
            })
        }
        Phase::Scst => {
            let references = &ctx.dataset.captions[job.index].references;
            let rewarder = ctx
                .rewarder
                .ok_or_else(|| Error::contract("scst phase without a rewarder"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(job.rng_seed);
            let mut tape: Tape<f32> = Tape::new();
            let params = ctx.model.bind(&mut tape, true)?;
            let built = build_scst_image_loss(
                &mut tape, ctx.model, &params, features, references, rewarder, ctx.vocab,
                &mut rng,
            )?;
            let Some((loss, diag)) = built else {
                crate::util::log_warn(&format!(
                    "skipping image {}: sampled caption has no content words",
                    ctx.dataset.features[job.index].image_id
                ));
                return Ok(ImageResult {
                    grads: None,
                    xe: 0.0,
                    kl: None,
                    sample_reward: 0.0,
                    greedy_reward: 0.0,
                    advantage: 0.0,
                    skipped: true,
                });
            };
            let grads = tape.backward(loss)?;
            let out = params
                .storage_vars
                .iter()
                .enumerate()
                .map(|(i, v)| match grads.get_slice(*v) {
                    Some(g) => g.to_vec(),
                    None => vec![0.0; ctx.model.params.tensor_at(i).numel()],
                })
                .collect();
            Ok(ImageResult {
                grads: Some(out),
                xe: 0.0,
                kl: None,
                sample_reward: diag.sample_reward,
                greedy_reward: diag.greedy_reward,
                advantage: diag.advantage,
                skipped: false,
            })
        }
    }
}

fn run_batch(
    ctx: &TrainContext,
    jobs: &[ImageJob],
    threads: usize,
) -> Result<Vec<ImageResult>> {
    if threads <= 1 || jobs.len() <= 1 {
        return jobs.iter().map(|j| run_image(ctx, j)).collect();
    }
    let mut slots: Vec<Option<Result<ImageResult>>> = Vec::new();
    slots.resize_with(jobs.len(), || None);
    let chunk = jobs.len().div_ceil(threads);
    std::thread::scope(|scope| {
        for (job_chunk, slot_chunk) in jobs.chunks(chunk).zip(slots.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (job, slot) in job_chunk.iter().zip(slot_chunk.iter_mut()) {
                    *slot = Some(run_image(ctx, job));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect()
}

/// Runs the configured phase; writes `ckpt_epoch_NNN.bin` per epoch plus
/// `metrics.jsonl`, and returns the per-epoch logs. Deterministic for a
/// fixed config and seed regardless of `threads`.
pub fn train(
    model: &mut CavpModel<f32>,
    vocab: &Vocabulary,
    dataset: &Dataset,
    cfg: &TrainConfig,
    out_dir: &Path,
    threads: usize,
    resume: Option<ResumeState>,
) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    if model.config().variant != cfg.variant {
        return Err(Error::contract(format!(
            "model variant {:?} does not match training config {:?}",
            model.config().variant,
            cfg.variant
        )));
    }
    std::fs::create_dir_all(out_dir)?;

    let train_indices = dataset.split_indices(Split::Train);
    if train_indices.is_empty() && cfg.epochs > 0 {
        return Err(Error::data("training split is empty"));
    }

    // Encoded targets (reference tokens + end token) for every image.
    let targets: Vec<Vec<Vec<usize>>> = dataset
        .captions
        .iter()
        .map(|c| {
            c.references
                .iter()
                .map(|r| {
                    let mut ids = vocab.encode(r);
                    ids.push(EOS);
                    ids
                })
                .collect()
        })
        .collect();

    // Expert targets per (image, reference) when cloning is on.
    let experts: Option<Vec<Vec<ExpertOutputPolicy>>> = (cfg.cloning_weight > 0.0).then(|| {
        let lex: HashMap<_, _> = dataset.lexicon.iter().cloned().collect();
        dataset
            .captions
            .iter()
            .map(|c| {
                c.references
                    .iter()
                    .map(|r| {
                        let mut toks = r.clone();
                        toks.push(EOS_TOKEN.to_string());
                        build_expert_policy(&toks, &lex)
                    })
                    .collect()
            })
            .collect()
    });

    // Reward over the training reference corpus.
    let rewarder = match cfg.phase {
        Phase::Scst => {
            let index = (cfg.reward == RewardKind::CiderD).then(|| {
                TfIdfIndex::build(
                    train_indices
                        .iter()
                        .map(|&i| &dataset.captions[i].references),
                )
            });
            Some(Rewarder::new(cfg.reward, index)?)
        }
        Phase::Xe => None,
    };

    let (start_epoch, mut adam, mut rng) = match resume {
        Some(r) => (r.epoch, r.adam, r.rng),
        None => (
            0,
            Adam::new(&model.params),
            ChaCha8Rng::seed_from_u64(cfg.seed),
        ),
    };

    save_checkpoint(
        &checkpoint_path(out_dir, start_epoch),
        model,
        vocab,
        cfg,
        start_epoch,
        cfg.seed,
        rng.get_word_pos(),
        Some(adam.state()),
    )?;

    let metrics_path = out_dir.join("metrics.jsonl");
    let mut metrics_file = if start_epoch == 0 {
        std::fs::File::create(&metrics_path)?
    } else {
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&metrics_path)?
    };

    let mut logs = Vec::new();
    let ctx_rewarder = rewarder.as_ref();
    for epoch in start_epoch..cfg.epochs {
        let lr = cfg.lr.lr_at(epoch);
        let mut order = train_indices.clone();
        order.shuffle(&mut rng);

        let mut epoch_xe = 0.0f64;
        let mut epoch_kl = 0.0f64;
        let mut epoch_loss = 0.0f64;
        let mut epoch_sample_r = 0.0f64;
        let mut epoch_greedy_r = 0.0f64;
        let mut epoch_adv = 0.0f64;
        let mut contributing = 0usize;
        let mut skipped = 0usize;

        for batch in order.chunks(cfg.batch_size) {
            // Per-image randomness is drawn sequentially so threading
            // cannot change it.
            let jobs: Vec<ImageJob> = batch
                .iter()
                .map(|&index| {
                    let rng_seed: u64 = rng.gen();
                    let n_refs = targets[index].len();
                    let ref_choice = rng.gen_range(0..n_refs);
                    ImageJob {
                        index,
                        rng_seed,
                        ref_choice,
                        expert: experts.as_ref().map(|e| &e[index][ref_choice]),
                    }
                })
                .collect();

            let ctx = TrainContext {
                model,
                vocab,
                dataset,
                cfg,
                targets: &targets,
                rewarder: ctx_rewarder,
            };
            let results = run_batch(&ctx, &jobs, threads)?;

            let mut batch_grads: Vec<Vec<f32>> = (0..model.params.len())
                .map(|i| vec![0.0f32; model.params.tensor_at(i).numel()])
                .collect();
            let mut batch_n = 0usize;
            for r in &results {
                if r.skipped {
                    skipped += 1;
                    continue;
                }
                if let Some(g) = &r.grads {
                    for (acc, gi) in batch_grads.iter_mut().zip(g.iter()) {
                        for (a, b) in acc.iter_mut().zip(gi.iter()) {
                            *a += *b;
                        }
                    }
                }
                batch_n += 1;
                epoch_xe += r.xe;
                epoch_kl += r.kl.unwrap_or(0.0);
                epoch_loss += r.xe + cfg.cloning_weight * r.kl.unwrap_or(0.0);
                epoch_sample_r += r.sample_reward;
                epoch_greedy_r += r.greedy_reward;
                epoch_adv += r.advantage;
            }
            if batch_n == 0 {
                continue;
            }
            let inv = 1.0 / batch_n as f32;
            for g in batch_grads.iter_mut() {
                for v in g.iter_mut() {
                    *v *= inv;
                }
            }
            let clip = match cfg.phase {
                Phase::Scst => Some(SCST_GRAD_CLIP),
                Phase::Xe => None,
            };
            adam.step(&mut model.params, &batch_grads, lr, clip);
            contributing += batch_n;
        }

        if contributing > 0 && !(epoch_loss / contributing as f64).is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }

        let denom = contributing.max(1) as f64;
        let log = match cfg.phase {
            Phase::Xe => EpochLog {
                epoch: epoch + 1,
                phase: cfg.phase,
                lr,
                loss: Some(epoch_loss / denom),
                xe_loss: Some(epoch_xe / denom),
                cloning_kl: (cfg.cloning_weight > 0.0).then_some(epoch_kl / denom),
                mean_sample_reward: None,
                mean_greedy_reward: None,
                mean_advantage: None,
                skipped,
            },
            Phase::Scst => EpochLog {
                epoch: epoch + 1,
                phase: cfg.phase,
                lr,
                loss: None,
                xe_loss: None,
                cloning_kl: None,
                mean_sample_reward: Some(epoch_sample_r / denom),
                mean_greedy_reward: Some(epoch_greedy_r / denom),
                mean_advantage: Some(epoch_adv / denom),
                skipped,
            },
        };
        serde_json::to_writer(&mut metrics_file, &log)?;
        metrics_file.write_all(b"\n")?;
        metrics_file.flush()?;

        save_checkpoint(
            &checkpoint_path(out_dir, epoch + 1),
            model,
            vocab,
            cfg,
            epoch + 1,
            cfg.seed,
            rng.get_word_pos(),
            Some(adam.state()),
        )?;
        logs.push(log);
    }
    Ok(logs)
}

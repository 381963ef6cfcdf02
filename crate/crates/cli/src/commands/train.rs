use super::{train_vocab, PhaseArg, RewardArg, VariantArg};
use crate::manifest::{dir_manifest_path, RunManifest};
use cavp_core::data::Dataset;
use cavp_core::error::Error;
use cavp_core::model::{CavpModel, CavpVariant, ModelConfig};
use cavp_core::train::{load_checkpoint, train, Adam, Phase, ResumeState, TrainConfig};
use cavp_core::Result;
use clap::Args;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training phase
    #[arg(long, value_enum)]
    pub phase: PhaseArg,
    /// Architecture variant
    #[arg(long, value_enum, default_value = "cavp4c")]
    pub variant: VariantArg,
    /// Reward metric for the scst phase
    #[arg(long, value_enum, default_value = "ciderD")]
    pub reward: RewardArg,
    /// Behavior-cloning weight (xe phase only)
    #[arg(long, default_value_t = 0.0)]
    pub cloning_weight: f64,
    /// Named profile (desk | paper) or a path to a JSON override file
    #[arg(long, default_value = "desk")]
    pub config: String,
    /// Dataset directory (from datagen)
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for checkpoints and the metrics log
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint to initialize from; scst must start from a
    /// cross-entropy checkpoint
    #[arg(long, required_if_eq("phase", "scst"))]
    pub init: Option<PathBuf>,
    /// Override: number of epochs
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Override: batch size
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Override: base learning rate
    #[arg(long)]
    pub lr_base: Option<f64>,
    /// Override: learning-rate decay factor
    #[arg(long)]
    pub lr_decay: Option<f64>,
    /// Override: epochs between decays
    #[arg(long)]
    pub lr_every: Option<usize>,
    /// Vocabulary min-count threshold (desk default 1; paper profile 5)
    #[arg(long)]
    pub min_count: Option<usize>,
    /// Intra-run parallelism (1 = fully serial)
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

/// Optional overrides loaded from a JSON config file; any field may be
/// omitted. Flags take precedence over these, which take precedence
/// over the desk defaults.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigOverlay {
    hidden_dim: Option<usize>,
    embed_dim: Option<usize>,
    attn_dim: Option<usize>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    lr_base: Option<f64>,
    lr_decay: Option<f64>,
    lr_every: Option<usize>,
    cloning_weight: Option<f64>,
}

#[derive(Serialize)]
struct ResolvedConfig<'a> {
    model: &'a ModelConfig,
    train: &'a TrainConfig,
    min_count: usize,
    threads: usize,
    init: Option<String>,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let phase = match args.phase {
        PhaseArg::Xe => Phase::Xe,
        PhaseArg::Scst => Phase::Scst,
    };
    let variant: CavpVariant = args.variant.into();
    let reward = args.reward.into();

    // Precedence: flags > config file > built-in desk defaults.
    let (mut tc, paper_dims, overlay) = match args.config.as_str() {
        "desk" => (
            base_config(phase, variant, reward, args.seed, false),
            false,
            ConfigOverlay::default(),
        ),
        "paper" => (
            base_config(phase, variant, reward, args.seed, true),
            true,
            ConfigOverlay::default(),
        ),
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::data(format!("cannot read config file {path}: {e}")))?;
            let overlay: ConfigOverlay = serde_json::from_str(&text)
                .map_err(|e| Error::data(format!("malformed config file {path}: {e}")))?;
            (
                base_config(phase, variant, reward, args.seed, false),
                false,
                overlay,
            )
        }
    };
    if let Some(v) = overlay.epochs {
        tc.epochs = v;
    }
    if let Some(v) = overlay.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = overlay.lr_base {
        tc.lr.base = v;
    }
    if let Some(v) = overlay.lr_decay {
        tc.lr.decay = v;
    }
    if let Some(v) = overlay.lr_every {
        tc.lr.every_epochs = v;
    }
    if let Some(v) = overlay.cloning_weight {
        tc.cloning_weight = v;
    }
    if args.cloning_weight != 0.0 {
        tc.cloning_weight = args.cloning_weight;
    }
    if let Some(v) = args.epochs {
        tc.epochs = v;
    }
    if let Some(v) = args.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = args.lr_base {
        tc.lr.base = v;
    }
    if let Some(v) = args.lr_decay {
        tc.lr.decay = v;
    }
    if let Some(v) = args.lr_every {
        tc.lr.every_epochs = v;
    }
    tc.validate()?;
    let min_count = args.min_count.unwrap_or(if paper_dims { 5 } else { 1 });

    let dataset = Dataset::load(&args.data)?;
    let vocab = train_vocab(&dataset, min_count);

    // Model: fresh init, or loaded from --init.
    let (mut model, vocab, resume) = match &args.init {
        Some(ckpt_path) => {
            let loaded = load_checkpoint(ckpt_path)?;
            if loaded.model.config().variant != variant {
                return Err(Error::data(format!(
                    "checkpoint variant {:?} does not match --variant {:?}",
                    loaded.model.config().variant,
                    variant
                )));
            }
            // Same-phase checkpoints continue optimizer and RNG state;
            // cross-phase initialization starts both fresh.
            let resume = if loaded.train_config.phase == phase {
                let mut rng = ChaCha8Rng::seed_from_u64(loaded.rng_seed);
                rng.set_word_pos(loaded.rng_word_pos);
                loaded.adam.map(|a| ResumeState {
                    epoch: loaded.epoch,
                    adam: Adam::from_state(a),
                    rng,
                })
            } else {
                None
            };
            (loaded.model, loaded.vocab, resume)
        }
        None => {
            let mut mc = if paper_dims {
                ModelConfig::paper(vocab.len(), variant)
            } else {
                ModelConfig::desk(vocab.len(), variant)
            };
            if let Some(v) = overlay.hidden_dim {
                mc.hidden_dim = v;
            }
            if let Some(v) = overlay.embed_dim {
                mc.embed_dim = v;
            }
            if let Some(v) = overlay.attn_dim {
                mc.attn_dim = v;
            }
            mc.feature_dim = dataset.meta.feature_dim;
            mc.num_regions = dataset.meta.num_regions;
            (CavpModel::init(&mc, args.seed), vocab, None)
        }
    };
    if model.config().vocab_size != vocab.len() {
        return Err(Error::data(format!(
            "vocabulary size {} does not match the model's {}",
            vocab.len(),
            model.config().vocab_size
        )));
    }

    std::fs::create_dir_all(&args.out)?;
    let mc = model.config().clone();
    let mut manifest = RunManifest::new(
        "train",
        Some(args.seed),
        serde_json::to_value(ResolvedConfig {
            model: &mc,
            train: &tc,
            min_count,
            threads: args.threads,
            init: args.init.as_ref().map(|p| p.display().to_string()),
        })?,
    );
    for name in ["features.bin", "captions.jsonl", "lexicon.jsonl", "dataset.json"] {
        manifest.add_input(&args.data.join(name))?;
    }
    if let Some(ckpt) = &args.init {
        manifest.add_input(ckpt)?;
    }
    manifest.add_output(&args.out.join("metrics.jsonl"));
    manifest.write(&dir_manifest_path(&args.out))?;

    let logs = train(
        &mut model,
        &vocab,
        &dataset,
        &tc,
        &args.out,
        args.threads,
        resume,
    )?;
    if let Some(last) = logs.last() {
        match phase {
            Phase::Xe => println!(
                "finished {} epochs, final loss {:.4}",
                logs.len(),
                last.loss.unwrap_or(f64::NAN)
            ),
            Phase::Scst => println!(
                "finished {} epochs, final mean advantage {:.4}",
                logs.len(),
                last.mean_advantage.unwrap_or(f64::NAN)
            ),
        }
    } else {
        println!("no epochs requested; wrote the initial checkpoint only");
    }
    Ok(())
}

fn base_config(
    phase: Phase,
    variant: CavpVariant,
    reward: cavp_core::metrics::RewardKind,
    seed: u64,
    paper: bool,
) -> TrainConfig {
    let mut cfg = match (phase, paper) {
        (Phase::Xe, false) => TrainConfig::desk_xe(variant, seed),
        (Phase::Scst, false) => TrainConfig::desk_scst(variant, reward, seed),
        (Phase::Xe, true) => TrainConfig::paper_xe(variant, seed),
        (Phase::Scst, true) => TrainConfig::paper_scst(variant, reward, seed),
    };
    cfg.reward = reward;
    cfg
}

use crate::manifest::{dir_manifest_path, RunManifest};
use cavp_core::data::{generate_scenes, Dataset, DatasetMeta, GeneratorConfig};
use cavp_core::Result;
use clap::Args;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct DatagenArgs {
    /// Number of scenes to generate
    #[arg(long)]
    pub scenes: usize,
    /// Generation seed (also drives the train/val/test split)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One canonical caption per scene, bijective with the scene
    #[arg(long, default_value_t = false)]
    pub deterministic: bool,
    /// Stddev of the additive feature noise
    #[arg(long, default_value_t = 0.05)]
    pub noise_sigma: f32,
    /// Regions per image
    #[arg(long, default_value_t = 8)]
    pub regions: usize,
    /// Feature dimension
    #[arg(long, default_value_t = 24)]
    pub feature_dim: usize,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: DatagenArgs) -> Result<()> {
    let cfg = GeneratorConfig {
        deterministic: args.deterministic,
        num_regions: args.regions,
        feature_dim: args.feature_dim,
        noise_sigma: args.noise_sigma,
    };
    let meta = DatasetMeta {
        seed: args.seed,
        count: args.scenes,
        num_regions: cfg.num_regions,
        feature_dim: cfg.feature_dim,
        deterministic: cfg.deterministic,
        noise_sigma: cfg.noise_sigma,
    };

    std::fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new("datagen", Some(args.seed), serde_json::to_value(&meta)?);
    for name in ["features.bin", "captions.jsonl", "lexicon.jsonl", "dataset.json"] {
        manifest.add_output(&args.out.join(name));
    }
    manifest.write(&dir_manifest_path(&args.out))?;

    let generated = generate_scenes(args.scenes, args.seed, &cfg)?;
    Dataset::save(&args.out, &generated, &meta)?;
    println!(
        "wrote {} scenes to {}",
        generated.features.len(),
        args.out.display()
    );
    Ok(())
}

use crate::manifest::{file_manifest_path, RunManifest};
use cavp_core::data::Dataset;
use cavp_core::decode::{greedy_decode, write_trace};
use cavp_core::error::Error;
use cavp_core::train::load_checkpoint;
use cavp_core::Result;
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;

/// Greedy-decodes one image and dumps every sub-policy's attention
/// distribution per generated token.
#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Image id within the dataset
    #[arg(long)]
    pub image: String,
    /// Trace file (JSON lines, one row per step)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct TraceConfig<'a> {
    ckpt: String,
    image: &'a str,
}

pub fn run(args: TraceArgs) -> Result<()> {
    let loaded = load_checkpoint(&args.ckpt)?;
    let dataset = Dataset::load(&args.data)?;
    let index = dataset
        .index_of(&args.image)
        .ok_or_else(|| Error::data(format!("image {} not in dataset", args.image)))?;

    let mut manifest = RunManifest::new(
        "trace",
        None,
        serde_json::to_value(TraceConfig {
            ckpt: args.ckpt.display().to_string(),
            image: &args.image,
        })?,
    );
    manifest.add_input(&args.ckpt)?;
    manifest.add_input(&args.data.join("features.bin"))?;
    manifest.add_output(&args.out);
    manifest.write(&file_manifest_path(&args.out))?;

    let trajectory = greedy_decode(&loaded.model, &dataset.features[index].features)?;
    write_trace(&args.out, &trajectory, &loaded.vocab)?;
    println!(
        "wrote {} trace rows for {} ({})",
        trajectory.len(),
        args.image,
        trajectory.caption(&loaded.vocab)
    );
    Ok(())
}

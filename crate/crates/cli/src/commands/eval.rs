use super::SplitArg;
use crate::manifest::{file_manifest_path, RunManifest};
use cavp_core::data::Dataset;
use cavp_core::decode::{beam_decode, decode_rows, greedy_decode, write_decodes};
use cavp_core::error::Error;
use cavp_core::metrics::{score_corpus, MetricSelection};
use cavp_core::train::load_checkpoint;
use cavp_core::Result;
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint to evaluate
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Dataset directory
    #[arg(long)]
    pub data: PathBuf,
    /// Beam width; 1 selects plain greedy decoding
    #[arg(long, default_value_t = 5)]
    pub beam: usize,
    /// Comma-separated subset of bleu4,rougeL,meteorlite,ciderD
    #[arg(long, default_value = "bleu4,rougeL,meteorlite,ciderD")]
    pub metrics: String,
    /// Split to decode
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Report file (the decode file lands next to it)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct EvalConfig<'a> {
    ckpt: String,
    beam: usize,
    metrics: &'a str,
    split: &'a str,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let selection = MetricSelection::parse(&args.metrics)
        .ok_or_else(|| Error::contract(format!("unknown metric list: {}", args.metrics)))?;
    let split: cavp_core::data::Split = args.split.into();

    let loaded = load_checkpoint(&args.ckpt)?;
    let dataset = Dataset::load(&args.data)?;

    let decode_path = args.out.with_file_name(format!(
        "{}.decodes.jsonl",
        args.out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "eval".into())
    ));
    let mut manifest = RunManifest::new(
        "eval",
        None,
        serde_json::to_value(EvalConfig {
            ckpt: args.ckpt.display().to_string(),
            beam: args.beam,
            metrics: &args.metrics,
            split: split.as_str(),
        })?,
    );
    manifest.add_input(&args.ckpt)?;
    for name in ["features.bin", "captions.jsonl", "dataset.json"] {
        manifest.add_input(&args.data.join(name))?;
    }
    manifest.add_output(&args.out);
    manifest.add_output(&decode_path);
    manifest.write(&file_manifest_path(&args.out))?;

    let indices = dataset.split_indices(split);
    let model = loaded.model;
    let vocab = loaded.vocab;
    let mut items = Vec::with_capacity(indices.len());
    let mut pairs = Vec::with_capacity(indices.len());
    for &i in &indices {
        let features = &dataset.features[i].features;
        let trajectory = if args.beam <= 1 {
            greedy_decode(&model, features)?
        } else {
            beam_decode(&model, features, args.beam)?
        };
        pairs.push((
            trajectory.words(&vocab),
            dataset.captions[i].references.clone(),
        ));
        items.push((dataset.features[i].image_id.clone(), trajectory));
    }
    write_decodes(&decode_path, &decode_rows(&items, &vocab, None))?;

    let report = score_corpus(&pairs, selection)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

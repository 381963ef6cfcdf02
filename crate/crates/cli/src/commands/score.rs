use crate::manifest::{file_manifest_path, RunManifest};
use cavp_core::data::load_captions;
use cavp_core::decode::load_decodes;
use cavp_core::error::Error;
use cavp_core::metrics::{score_corpus, tokenize, MetricSelection};
use cavp_core::Result;
use clap::Args;
use serde::Serialize;
use std::collections::HashMap;
use std::path::PathBuf;

/// Stand-alone scorer over a decode file and a reference caption file,
/// both keyed by image id.
#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Decode file (JSON lines with image_id and caption)
    #[arg(long)]
    pub candidates: PathBuf,
    /// Reference caption file (JSON lines with image_id and captions)
    #[arg(long)]
    pub references: PathBuf,
    /// Comma-separated subset of bleu4,rougeL,meteorlite,ciderD
    #[arg(long, default_value = "bleu4,rougeL,meteorlite,ciderD")]
    pub metrics: String,
    /// Report file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ScoreConfig<'a> {
    metrics: &'a str,
}

pub fn run(args: ScoreArgs) -> Result<()> {
    let selection = MetricSelection::parse(&args.metrics)
        .ok_or_else(|| Error::contract(format!("unknown metric list: {}", args.metrics)))?;

    let mut manifest = RunManifest::new(
        "score",
        None,
        serde_json::to_value(ScoreConfig {
            metrics: &args.metrics,
        })?,
    );
    manifest.add_input(&args.candidates)?;
    manifest.add_input(&args.references)?;
    manifest.add_output(&args.out);
    manifest.write(&file_manifest_path(&args.out))?;

    let decodes = load_decodes(&args.candidates)?;
    let references = load_captions(&args.references)?;
    let by_id: HashMap<&str, &Vec<Vec<String>>> = references
        .iter()
        .map(|r| (r.image_id.as_str(), &r.references))
        .collect();

    let mut pairs = Vec::with_capacity(decodes.len());
    for row in &decodes {
        let refs = by_id.get(row.image_id.as_str()).ok_or_else(|| {
            Error::data(format!(
                "no references for image {} in {}",
                row.image_id,
                args.references.display()
            ))
        })?;
        pairs.push((tokenize(&row.caption), (*refs).clone()));
    }
    let report = score_corpus(&pairs, selection)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

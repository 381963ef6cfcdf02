//! Line-delimited decode outputs and attention traces.

use super::trajectory::Trajectory;
use crate::data::Vocabulary;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// One decoded image in the output file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecodeRow {
    pub image_id: String,
    pub caption: String,
    pub log_prob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_ref: Option<String>,
}

pub fn write_decodes(path: &Path, rows: &[DecodeRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_decodes(path: &Path) -> Result<Vec<DecodeRow>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: DecodeRow = serde_json::from_str(&line).map_err(|e| {
            Error::data(format!(
                "{} line {}: malformed decode row: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// One line per generated token: every sub-policy distribution with its
/// argmax region, for external plotting.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow<'a> {
    pub step: usize,
    pub token: &'a str,
    pub single: &'a [f64],
    pub single_argmax: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context_argmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition_argmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_single: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_composition: Option<f64>,
}

pub fn write_trace(path: &Path, trajectory: &Trajectory, vocab: &Vocabulary) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (step, (token, attn)) in trajectory
        .tokens
        .iter()
        .zip(trajectory.attention.iter())
        .enumerate()
    {
        let row = TraceRow {
            step,
            token: vocab.token(*token),
            single: &attn.single,
            single_argmax: attn.single_argmax,
            context: attn.context.as_deref(),
            context_argmax: attn.context_argmax,
            composition: attn.composition.as_deref(),
            composition_argmax: attn.composition_argmax,
            output_single: attn.output.map(|o| o[0]),
            output_composition: attn.output.map(|o| o[1]),
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Decode rows for a batch of trajectories.
pub fn decode_rows(
    items: &[(String, Trajectory)],
    vocab: &Vocabulary,
    trace_ref: Option<&str>,
) -> Vec<DecodeRow> {
    items
        .iter()
        .map(|(id, t)| DecodeRow {
            image_id: id.clone(),
            caption: t.caption(vocab),
            log_prob: t.total_log_prob,
            trace_ref: trace_ref.map(String::from),
        })
        .collect()
}

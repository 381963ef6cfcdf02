//! Caption records: JSON-lines keyed by image id, one record per image.

use crate::error::{Error, Result};
use crate::metrics::tokenize;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub const MAX_CAPTION_TOKENS: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CaptionLine {
    image_id: String,
    captions: Vec<String>,
}

/// One image's reference captions, tokenized and trimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionRecord {
    pub image_id: String,
    pub references: Vec<Vec<String>>,
}

impl CaptionRecord {
    pub fn new(image_id: String, raw: &[String]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::data(format!(
                "image {image_id} has no reference captions"
            )));
        }
        let references = raw
            .iter()
            .map(|c| {
                let mut toks = tokenize(c);
                toks.truncate(MAX_CAPTION_TOKENS);
                toks
            })
            .collect::<Vec<_>>();
        if references.iter().any(|r| r.is_empty()) {
            return Err(Error::data(format!("image {image_id} has a blank caption")));
        }
        Ok(CaptionRecord {
            image_id,
            references,
        })
    }
}

pub fn write_captions(path: &Path, records: &[CaptionRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        let line = CaptionLine {
            image_id: r.image_id.clone(),
            captions: r.references.iter().map(|t| t.join(" ")).collect(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_captions(path: &Path) -> Result<Vec<CaptionRecord>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CaptionLine = serde_json::from_str(&line).map_err(|e| {
            Error::data(format!(
                "{} line {}: malformed caption record: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        records.push(CaptionRecord::new(parsed.image_id, &parsed.captions)?);
    }
    Ok(records)
}

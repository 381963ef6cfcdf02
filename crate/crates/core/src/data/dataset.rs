//! On-disk dataset layout and the seed-derived train/val/test split.
//!
//! A dataset directory holds `features.bin`, `captions.jsonl`,
//! `lexicon.jsonl` and `dataset.json` (the metadata the split function
//! needs).

use super::captions::{load_captions, write_captions, CaptionRecord};
use super::features::{load_features, write_features, FeatureRecord};
use super::synthetic::{load_lexicon, write_lexicon, LexCategory, SyntheticDataset};
use crate::error::{Error, Result};
use crate::util::fnv1a64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Pure function of image id and seed: 80/10/10.
pub fn split_of(image_id: &str, seed: u64) -> Split {
    let mut bytes = image_id.as_bytes().to_vec();
    bytes.extend_from_slice(&seed.to_le_bytes());
    match fnv1a64(&bytes) % 10 {
        0..=7 => Split::Train,
        8 => Split::Val,
        _ => Split::Test,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub count: usize,
    pub num_regions: usize,
    pub feature_dim: usize,
    pub deterministic: bool,
    pub noise_sigma: f32,
}

/// A fully loaded dataset with aligned features and captions.
pub struct Dataset {
    pub meta: DatasetMeta,
    pub features: Vec<FeatureRecord>,
    pub captions: Vec<CaptionRecord>,
    pub lexicon: Vec<(String, LexCategory)>,
    by_id: HashMap<String, usize>,
}

impl Dataset {
    pub fn assemble(
        meta: DatasetMeta,
        features: Vec<FeatureRecord>,
        captions: Vec<CaptionRecord>,
        lexicon: Vec<(String, LexCategory)>,
    ) -> Result<Self> {
        if features.len() != captions.len() {
            return Err(Error::data(format!(
                "feature count {} differs from caption count {}",
                features.len(),
                captions.len()
            )));
        }
        let mut by_id = HashMap::new();
        for (i, (f, c)) in features.iter().zip(captions.iter()).enumerate() {
            if f.image_id != c.image_id {
                return Err(Error::data(format!(
                    "record {i}: feature id {} does not match caption id {}",
                    f.image_id, c.image_id
                )));
            }
            if by_id.insert(f.image_id.clone(), i).is_some() {
                return Err(Error::data(format!("duplicate image id {}", f.image_id)));
            }
        }
        Ok(Dataset {
            meta,
            features,
            captions,
            lexicon,
            by_id,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, image_id: &str) -> Option<usize> {
        self.by_id.get(image_id).copied()
    }

    pub fn split_of(&self, image_id: &str) -> Split {
        split_of(image_id, self.meta.seed)
    }

    /// Record indices belonging to one split, in file order.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.split_of(&self.features[i].image_id) == split)
            .collect()
    }

    pub fn save(dir: &Path, generated: &SyntheticDataset, meta: &DatasetMeta) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_features(&dir.join("features.bin"), &generated.features)?;
        write_captions(&dir.join("captions.jsonl"), &generated.captions)?;
        write_lexicon(&dir.join("lexicon.jsonl"), &generated.lexicon)?;
        let json = serde_json::to_string_pretty(meta)?;
        std::fs::write(dir.join("dataset.json"), json)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("dataset.json");
        let meta: DatasetMeta = serde_json::from_str(
            &std::fs::read_to_string(&meta_path)
                .map_err(|e| Error::data(format!("cannot read {}: {e}", meta_path.display())))?,
        )?;
        let features = load_features(&dir.join("features.bin"))?;
        let captions = load_captions(&dir.join("captions.jsonl"))?;
        let lexicon = load_lexicon(&dir.join("lexicon.jsonl"))?;
        Dataset::assemble(meta, features, captions, lexicon)
    }
}

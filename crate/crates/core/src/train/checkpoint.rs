//! Versioned checkpoint container: JSON header (config echo, vocabulary,
//! sharing map, RNG position, optimizer presence) followed by raw
//! little-endian f32 arrays in storage order.

use super::adam::AdamState;
use super::config::TrainConfig;
use crate::autodiff::Tensor;
use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{CavpModel, ModelConfig, ParamStore};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const CKPT_MAGIC: &[u8; 8] = b"CAVPCKPT";
pub const CKPT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    model_config: ModelConfig,
    vocab_tokens: Vec<String>,
    vocab_min_count: usize,
    sharing: BTreeMap<String, String>,
    param_names: Vec<String>,
    param_shapes: Vec<Vec<usize>>,
    train_config: TrainConfig,
    epoch: usize,
    rng_seed: u64,
    rng_word_pos: [u64; 2],
    adam_step: Option<u64>,
}

/// Everything a checkpoint restores.
pub struct LoadedCheckpoint {
    pub model: CavpModel<f32>,
    pub vocab: Vocabulary,
    pub train_config: TrainConfig,
    pub epoch: usize,
    pub rng_seed: u64,
    pub rng_word_pos: u128,
    pub adam: Option<AdamState>,
}

fn write_array(out: &mut impl Write, data: &[f32]) -> Result<()> {
    for v in data {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_array(reader: &mut impl Read, len: usize, what: &str) -> Result<Vec<f32>> {
    let mut buf = vec![0u8; len * 4];
    reader
        .read_exact(&mut buf)
        .map_err(|e| Error::data(format!("truncated checkpoint while reading {what}: {e}")))?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[allow(clippy::too_many_arguments)]
pub fn save_checkpoint(
    path: &Path,
    model: &CavpModel<f32>,
    vocab: &Vocabulary,
    train_config: &TrainConfig,
    epoch: usize,
    rng_seed: u64,
    rng_word_pos: u128,
    adam: Option<&AdamState>,
) -> Result<()> {
    let store = &model.params;
    let header = CheckpointHeader {
        model_config: store.config.clone(),
        vocab_tokens: vocab.tokens().to_vec(),
        vocab_min_count: vocab.min_count(),
        sharing: store.sharing().clone(),
        param_names: store.names().to_vec(),
        param_shapes: store
            .names()
            .iter()
            .enumerate()
            .map(|(i, _)| store.tensor_at(i).shape().to_vec())
            .collect(),
        train_config: train_config.clone(),
        epoch,
        rng_seed,
        rng_word_pos: [rng_word_pos as u64, (rng_word_pos >> 64) as u64],
        adam_step: adam.map(|a| a.step),
    };
    let header_bytes = serde_json::to_vec(&header)?;

    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(CKPT_MAGIC)?;
    out.write_all(&CKPT_VERSION.to_le_bytes())?;
    out.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    out.write_all(&header_bytes)?;
    for i in 0..store.len() {
        write_array(&mut out, store.tensor_at(i).data())?;
    }
    if let Some(a) = adam {
        for arr in a.m.iter().chain(a.v.iter()) {
            write_array(&mut out, arr)?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);

    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|e| Error::data(format!("truncated checkpoint: {e}")))?;
    if &magic != CKPT_MAGIC {
        return Err(Error::data(format!(
            "{} is not a checkpoint (bad magic)",
            path.display()
        )));
    }
    let mut u32buf = [0u8; 4];
    reader
        .read_exact(&mut u32buf)
        .map_err(|e| Error::data(format!("truncated checkpoint: {e}")))?;
    let version = u32::from_le_bytes(u32buf);
    if version != CKPT_VERSION {
        return Err(Error::data(format!("unsupported checkpoint version {version}")));
    }
    let mut u64buf = [0u8; 8];
    reader
        .read_exact(&mut u64buf)
        .map_err(|e| Error::data(format!("truncated checkpoint: {e}")))?;
    let header_len = u64::from_le_bytes(u64buf) as usize;
    let mut header_bytes = vec![0u8; header_len];
    reader
        .read_exact(&mut header_bytes)
        .map_err(|e| Error::data(format!("truncated checkpoint header: {e}")))?;
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)?;

    // Rebuild the parameter layout and overwrite values by name.
    let mut store = ParamStore::<f32>::init(&header.model_config, 0);
    if store.names() != header.param_names.as_slice() {
        return Err(Error::data(
            "checkpoint parameter names do not match the configured architecture",
        ));
    }
    if store.sharing() != &header.sharing {
        return Err(Error::data("checkpoint sharing map does not match"));
    }
    for (i, (name, shape)) in header
        .param_names
        .iter()
        .zip(header.param_shapes.iter())
        .enumerate()
    {
        if store.tensor_at(i).shape() != shape.as_slice() {
            return Err(Error::data(format!(
                "checkpoint parameter {name} has shape {shape:?}, expected {:?}",
                store.tensor_at(i).shape()
            )));
        }
        let data = read_array(&mut reader, store.tensor_at(i).numel(), name)?;
        *store.tensor_at_mut(i) = Tensor::new(shape.clone(), data)?;
    }
    let adam = match header.adam_step {
        Some(step) => {
            let mut m = Vec::with_capacity(store.len());
            let mut v = Vec::with_capacity(store.len());
            for i in 0..store.len() {
                m.push(read_array(&mut reader, store.tensor_at(i).numel(), "adam m")?);
            }
            for i in 0..store.len() {
                v.push(read_array(&mut reader, store.tensor_at(i).numel(), "adam v")?);
            }
            Some(AdamState { step, m, v })
        }
        None => None,
    };
    store.validate_finite()?;

    let vocab = Vocabulary::from_tokens(header.vocab_tokens, header.vocab_min_count)?;
    if vocab.len() != header.model_config.vocab_size {
        return Err(Error::data("checkpoint vocabulary size mismatch"));
    }
    Ok(LoadedCheckpoint {
        model: CavpModel { params: store },
        vocab,
        train_config: header.train_config,
        epoch: header.epoch,
        rng_seed: header.rng_seed,
        rng_word_pos: header.rng_word_pos[0] as u128 | ((header.rng_word_pos[1] as u128) << 64),
        adam,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;
    use crate::model::CavpVariant;

    #[test]
    fn checkpoint_roundtrip_preserves_everything() {
        let caps = vec![tokenize("red circle above blue square holding star")];
        let vocab = Vocabulary::build(&caps, 1);
        let cfg = ModelConfig {
            vocab_size: vocab.len(),
            ..ModelConfig::miniature(CavpVariant::Cavp3p)
        };
        let model = CavpModel::init(&cfg, 99);
        let tc = TrainConfig::desk_xe(CavpVariant::Cavp3p, 42);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.bin");
        save_checkpoint(&path, &model, &vocab, &tc, 7, 42, 123456, None).unwrap();

        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.epoch, 7);
        assert_eq!(loaded.rng_seed, 42);
        assert_eq!(loaded.rng_word_pos, 123456);
        assert_eq!(loaded.vocab.tokens(), vocab.tokens());
        assert_eq!(loaded.train_config, tc);
        for name in model.params.names() {
            assert_eq!(
                loaded.model.params.get(name).unwrap(),
                model.params.get(name).unwrap()
            );
        }
        assert!(loaded.adam.is_none());
    }

    #[test]
    fn save_is_byte_deterministic() {
        let caps = vec![tokenize("a b c d")];
        let vocab = Vocabulary::build(&caps, 1);
        let cfg = ModelConfig {
            vocab_size: vocab.len(),
            ..ModelConfig::miniature(CavpVariant::Cavp4c)
        };
        let model = CavpModel::init(&cfg, 7);
        let tc = TrainConfig::desk_xe(CavpVariant::Cavp4c, 1);
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.bin");
        let p2 = dir.path().join("b.bin");
        save_checkpoint(&p1, &model, &vocab, &tc, 0, 1, 0, None).unwrap();
        save_checkpoint(&p2, &model, &vocab, &tc, 0, 1, 0, None).unwrap();
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOTACKPT....").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}

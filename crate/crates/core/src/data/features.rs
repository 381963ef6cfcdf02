//! Binary region-feature files.
//!
//! Layout (all little-endian):
//!   magic "CAVF" | version u32 | k u32 | d u32 | count u64
//!   then per record: id_len u16 | id bytes (utf-8) | k*d f32 row-major

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::RegionFeatureSet;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const FEATURE_MAGIC: &[u8; 4] = b"CAVF";
pub const FEATURE_VERSION: u32 = 1;

/// One image's feature matrix as stored on disk.
#[derive(Debug, Clone)]
pub struct FeatureRecord {
    pub image_id: String,
    pub features: RegionFeatureSet,
}

pub fn write_features(path: &Path, records: &[FeatureRecord]) -> Result<()> {
    if records.is_empty() {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        out.write_all(FEATURE_MAGIC)?;
        out.write_all(&FEATURE_VERSION.to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&0u64.to_le_bytes())?;
        return Ok(());
    }
    let k = records[0].features.num_regions();
    let d = records[0].features.dim();
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(FEATURE_MAGIC)?;
    out.write_all(&FEATURE_VERSION.to_le_bytes())?;
    out.write_all(&(k as u32).to_le_bytes())?;
    out.write_all(&(d as u32).to_le_bytes())?;
    out.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        if r.features.num_regions() != k || r.features.dim() != d {
            return Err(Error::data(format!(
                "record {} shape ({}, {}) differs from file shape ({k}, {d})",
                r.image_id,
                r.features.num_regions(),
                r.features.dim()
            )));
        }
        let id = r.image_id.as_bytes();
        if id.len() > u16::MAX as usize {
            return Err(Error::data(format!("image id too long: {}", r.image_id)));
        }
        out.write_all(&(id.len() as u16).to_le_bytes())?;
        out.write_all(id)?;
        for v in r.features.regions().data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact_at(reader: &mut impl Read, buf: &mut [u8], what: &str, record: usize) -> Result<()> {
    reader.read_exact(buf).map_err(|e| {
        Error::data(format!(
            "truncated feature file while reading {what} of record {record}: {e}"
        ))
    })
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureRecord>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);

    let mut magic = [0u8; 4];
    read_exact_at(&mut reader, &mut magic, "magic", 0)?;
    if &magic != FEATURE_MAGIC {
        return Err(Error::data(format!(
            "{} is not a feature file (bad magic)",
            path.display()
        )));
    }
    let mut u32buf = [0u8; 4];
    read_exact_at(&mut reader, &mut u32buf, "version", 0)?;
    let version = u32::from_le_bytes(u32buf);
    if version != FEATURE_VERSION {
        return Err(Error::data(format!("unsupported feature file version {version}")));
    }
    read_exact_at(&mut reader, &mut u32buf, "k", 0)?;
    let k = u32::from_le_bytes(u32buf) as usize;
    read_exact_at(&mut reader, &mut u32buf, "d", 0)?;
    let d = u32::from_le_bytes(u32buf) as usize;
    let mut u64buf = [0u8; 8];
    read_exact_at(&mut reader, &mut u64buf, "count", 0)?;
    let count = u64::from_le_bytes(u64buf) as usize;

    let mut records = Vec::with_capacity(count);
    for rec in 0..count {
        let mut u16buf = [0u8; 2];
        read_exact_at(&mut reader, &mut u16buf, "id length", rec)?;
        let id_len = u16::from_le_bytes(u16buf) as usize;
        let mut id_bytes = vec![0u8; id_len];
        read_exact_at(&mut reader, &mut id_bytes, "id", rec)?;
        let image_id = String::from_utf8(id_bytes)
            .map_err(|_| Error::data(format!("record {rec}: image id is not utf-8")))?;
        let mut values = vec![0.0f32; k * d];
        let mut fbuf = [0u8; 4];
        for (i, v) in values.iter_mut().enumerate() {
            read_exact_at(&mut reader, &mut fbuf, "feature values", rec)?;
            *v = f32::from_le_bytes(fbuf);
            if !v.is_finite() {
                return Err(Error::data(format!(
                    "record {rec} ({image_id}): non-finite value at flat index {i}"
                )));
            }
        }
        let matrix = Tensor::matrix(k, d, values)
            .map_err(|e| Error::data(format!("record {rec} ({image_id}): {e}")))?;
        records.push(FeatureRecord {
            image_id,
            features: RegionFeatureSet::new(matrix)?,
        });
    }
    let mut tail = [0u8; 1];
    if reader.read(&mut tail)? != 0 {
        return Err(Error::data("trailing bytes after final feature record"));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, seed: f32) -> FeatureRecord {
        let values: Vec<f32> = (0..6).map(|i| seed + i as f32).collect();
        FeatureRecord {
            image_id: id.into(),
            features: RegionFeatureSet::new(Tensor::matrix(2, 3, values).unwrap()).unwrap(),
        }
    }

    #[test]
    fn roundtrip_write_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let recs = vec![record("a", 0.5), record("b", -2.0)];
        write_features(&path, &recs).unwrap();
        let back = load_features(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].image_id, "a");
        assert_eq!(
            back[1].features.regions().data(),
            recs[1].features.regions().data()
        );
    }

    #[test]
    fn truncated_file_is_a_structured_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        write_features(&path, &[record("a", 1.0)]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        let err = load_features(&path).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");
    }

    #[test]
    fn nan_values_are_rejected_with_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        write_features(&path, &[record("a", 1.0)]).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // overwrite the first float of the record payload with NaN
        let payload = bytes.len() - 24;
        bytes[payload..payload + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        let err = load_features(&path).unwrap_err().to_string();
        assert!(err.contains("non-finite"), "{err}");
    }

    #[test]
    fn empty_dataset_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        write_features(&path, &[]).unwrap();
        assert!(load_features(&path).unwrap().is_empty());
    }
}

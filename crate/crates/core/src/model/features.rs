use crate::autodiff::{Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Per-image encoder output: k region vectors and their mean pool.
#[derive(Debug, Clone)]
pub struct RegionFeatureSet {
    regions: Tensor<f32>,
    mean: Tensor<f32>,
}

impl RegionFeatureSet {
    pub fn new(regions: Tensor<f32>) -> Result<Self> {
        let shape = regions.shape();
        if shape.len() != 2 || shape[0] < 1 {
            return Err(Error::contract(format!(
                "region features must be a (k x d) matrix with k >= 1, got {shape:?}"
            )));
        }
        regions.validate_finite("region features")?;
        let (k, d) = (shape[0], shape[1]);
        let mut mean = vec![0.0f32; d];
        for r in 0..k {
            for (m, v) in mean.iter_mut().zip(regions.row(r).iter()) {
                *m += *v;
            }
        }
        for m in mean.iter_mut() {
            *m /= k as f32;
        }
        Ok(RegionFeatureSet {
            regions,
            mean: Tensor::vector(mean),
        })
    }

    pub fn num_regions(&self) -> usize {
        self.regions.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.regions.shape()[1]
    }

    pub fn regions(&self) -> &Tensor<f32> {
        &self.regions
    }

    pub fn mean_pool(&self) -> &Tensor<f32> {
        &self.mean
    }

    /// Checks the stored mean pool against a recomputation.
    pub fn validate(&self) -> Result<()> {
        let recomputed = RegionFeatureSet::new(self.regions.clone())?;
        for (a, b) in self.mean.data().iter().zip(recomputed.mean.data()) {
            if (a - b).abs() > 1e-6 {
                return Err(Error::contract("stored mean pool diverges from regions"));
            }
        }
        Ok(())
    }
}

/// Tape handles for one image's features. Constant leaves: features never
/// receive gradients.
#[derive(Debug, Clone)]
pub struct BoundFeatures {
    pub matrix: Var,
    pub regions: Vec<Var>,
    pub mean: Var,
}

pub fn bind_features<R: Real>(tape: &mut Tape<R>, feats: &RegionFeatureSet) -> Result<BoundFeatures> {
    let matrix = tape.constant(feats.regions().map(|v| R::from_f64(v as f64)));
    let k = feats.num_regions();
    let regions = (0..k)
        .map(|i| tape.embed_row(matrix, i))
        .collect::<Result<Vec<_>>>()?;
    let mean = tape.mean_rows(matrix)?;
    Ok(BoundFeatures {
        matrix,
        regions,
        mean,
    })
}

//! Adaptive-moment optimizer with optional global-norm clipping.

use crate::model::ParamStore;
use serde::{Deserialize, Serialize};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Serializable optimizer state, aligned with the parameter storage
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f32>>,
    pub v: Vec<Vec<f32>>,
}

#[derive(Debug, Clone)]
pub struct Adam {
    state: AdamState,
}

impl Adam {
    pub fn new(store: &ParamStore<f32>) -> Self {
        let zeros = (0..store.len())
            .map(|i| vec![0.0f32; store.tensor_at(i).numel()])
            .collect::<Vec<_>>();
        Adam {
            state: AdamState {
                step: 0,
                m: zeros.clone(),
                v: zeros,
            },
        }
    }

    pub fn from_state(state: AdamState) -> Self {
        Adam { state }
    }

    pub fn state(&self) -> &AdamState {
        &self.state
    }

    /// One update over every parameter, gradients aligned with storage
    /// order. `clip` caps the global L2 norm before the update.
    pub fn step(
        &mut self,
        store: &mut ParamStore<f32>,
        grads: &[Vec<f32>],
        lr: f64,
        clip: Option<f64>,
    ) {
        debug_assert_eq!(grads.len(), store.len());
        let scale = match clip {
            Some(max_norm) => {
                let mut sq = 0.0f64;
                for g in grads {
                    for v in g {
                        sq += (*v as f64) * (*v as f64);
                    }
                }
                let norm = sq.sqrt();
                if norm > max_norm {
                    max_norm / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };

        self.state.step += 1;
        let t = self.state.step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for (i, g) in grads.iter().enumerate() {
            let m = &mut self.state.m[i];
            let v = &mut self.state.v[i];
            let p = store.tensor_at_mut(i).data_mut();
            for j in 0..g.len() {
                let gj = g[j] as f64 * scale;
                let mj = ADAM_BETA1 * m[j] as f64 + (1.0 - ADAM_BETA1) * gj;
                let vj = ADAM_BETA2 * v[j] as f64 + (1.0 - ADAM_BETA2) * gj * gj;
                m[j] = mj as f32;
                v[j] = vj as f32;
                let update = lr * (mj / bc1) / ((vj / bc2).sqrt() + ADAM_EPS);
                p[j] -= update as f32;
            }
        }
    }
}

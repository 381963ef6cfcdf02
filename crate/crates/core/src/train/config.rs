use crate::error::{Error, Result};
use crate::metrics::RewardKind;
use crate::model::CavpVariant;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Xe,
    Scst,
}

impl Phase {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "xe" => Some(Phase::Xe),
            "scst" => Some(Phase::Scst),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Xe => "xe",
            Phase::Scst => "scst",
        }
    }
}

/// Step decay: `base * decay^(epoch / every_epochs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub base: f64,
    pub decay: f64,
    pub every_epochs: usize,
}

impl LrSchedule {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.base * self.decay.powi((epoch / self.every_epochs.max(1)) as i32)
    }
}

/// Gradient-norm cap applied during policy-gradient training.
pub const SCST_GRAD_CLIP: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub phase: Phase,
    pub reward: RewardKind,
    pub lr: LrSchedule,
    pub batch_size: usize,
    pub epochs: usize,
    pub variant: CavpVariant,
    /// Behavior-cloning weight for the output sub-policy; 0 disables.
    pub cloning_weight: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn desk_xe(variant: CavpVariant, seed: u64) -> Self {
        TrainConfig {
            phase: Phase::Xe,
            reward: RewardKind::CiderD,
            lr: LrSchedule {
                base: 1e-3,
                decay: 0.8,
                every_epochs: 5,
            },
            batch_size: 8,
            epochs: 30,
            variant,
            cloning_weight: 0.0,
            seed,
        }
    }

    pub fn desk_scst(variant: CavpVariant, reward: RewardKind, seed: u64) -> Self {
        TrainConfig {
            phase: Phase::Scst,
            reward,
            // Policy-gradient fine-tuning wants a gentle, flat rate and a
            // larger batch than the xe phase; pushing either harder
            // degrades the policy instead of improving it.
            lr: LrSchedule {
                base: 1.3e-4,
                decay: 1.0,
                every_epochs: 10,
            },
            batch_size: 24,
            epochs: 30,
            variant,
            cloning_weight: 0.0,
            seed,
        }
    }

    /// Full-scale schedules (batch 100, 37 supervised epochs then policy
    /// gradient to epoch 100). Kept as a named profile; not desk-runnable.
    pub fn paper_xe(variant: CavpVariant, seed: u64) -> Self {
        TrainConfig {
            phase: Phase::Xe,
            reward: RewardKind::CiderD,
            lr: LrSchedule {
                base: 5e-4,
                decay: 0.8,
                every_epochs: 3,
            },
            batch_size: 100,
            epochs: 37,
            variant,
            cloning_weight: 0.0,
            seed,
        }
    }

    pub fn paper_scst(variant: CavpVariant, reward: RewardKind, seed: u64) -> Self {
        TrainConfig {
            phase: Phase::Scst,
            reward,
            lr: LrSchedule {
                base: 5e-5,
                decay: 0.1,
                every_epochs: 55,
            },
            batch_size: 100,
            epochs: 63,
            variant,
            cloning_weight: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cloning_weight < 0.0 {
            return Err(Error::contract("cloning weight must be non-negative"));
        }
        if self.cloning_weight > 0.0 && self.phase != Phase::Xe {
            return Err(Error::contract(
                "behavior cloning is only valid during cross-entropy training",
            ));
        }
        if self.cloning_weight > 0.0 && !self.variant.has_composition() {
            return Err(Error::contract(
                "behavior cloning requires a variant with an output sub-policy",
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::contract("batch size must be positive"));
        }
        Ok(())
    }
}

//! Two-phase optimization: cross-entropy imitation, then self-critical
//! policy gradient, with optional behavior cloning of the output
//! sub-policy.

pub mod adam;
pub mod checkpoint;
pub mod config;
pub mod driver;
pub mod expert;
pub mod gradcheck;
pub mod scst;
pub mod xe;

pub use adam::{Adam, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, LoadedCheckpoint};
pub use config::{LrSchedule, Phase, TrainConfig, SCST_GRAD_CLIP};
pub use driver::{checkpoint_path, train, EpochLog, ResumeState};
pub use expert::{build_expert_policy, kl_divergence, ExpertOutputPolicy};
pub use gradcheck::{run_full_suite, GradCheckReport};
pub use scst::{build_scst_image_loss, scst_step, ScstDiag};
pub use xe::{xe_image_loss, XeImageLoss};

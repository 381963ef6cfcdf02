//! The captioning model: region features, the four-sub-policy visual
//! attention network, and the language policy on top.

pub mod attend;
pub mod cavp;
pub mod config;
pub mod features;
pub mod language;
pub mod params;
pub mod runner;

pub use attend::{sub_policy_attend, AttendOutcome, SubPolicyState, VisualContext};
pub use cavp::{cavp_step, CavpStepOutput, SpStates};
pub use config::{CavpVariant, ModelConfig};
pub use features::{bind_features, BoundFeatures, RegionFeatureSet};
pub use language::{language_step, sequence_log_prob, LanguageStepOut};
pub use params::{BoundParams, BoundSubPolicy, ParamStore};
pub use runner::{bind_image, distribution_f64, init_state, model_step, CavpModel, StepOut, StepState};

//! Sequence-level image captioning with a context-aware visual policy.
//!
//! The crate bundles everything needed for a desk-scale, end-to-end run:
//! a small reverse-mode differentiation engine, the four-sub-policy
//! visual attention model with its language policy, caption metrics that
//! double as reinforcement rewards, two-phase training (cross entropy,
//! then self-critical policy gradient), greedy/sampled/beam decoding,
//! and a synthetic compositional-scene data pipeline.

pub mod autodiff;
pub mod data;
pub mod decode;
pub mod error;
pub mod metrics;
pub mod model;
pub mod train;
pub mod util;

pub use error::{Error, Result};

//! Caption generation over a frozen model.

pub mod decoder;
pub mod output;
pub mod trajectory;

pub use decoder::{beam_decode, greedy_decode, replay_log_prob, sample_decode};
pub use output::{decode_rows, load_decodes, write_decodes, write_trace, DecodeRow};
pub use trajectory::{StepAttention, Trajectory};

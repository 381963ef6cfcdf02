//! Minimal reverse-mode differentiation engine: tensors, the operation
//! tape, the LSTM cell, and finite-difference verification tools.

pub mod check;
pub mod lstm;
pub mod tape;
pub mod tensor;

pub use lstm::{lstm_step, LstmState, LstmVars};
pub use tape::{Gradients, Tape, Var};
pub use tensor::{Real, Tensor};

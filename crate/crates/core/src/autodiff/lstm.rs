//! Vanilla LSTM cell built from tape primitives.
//!
//! Gate matrices act on the concatenation `[x, h]`; the forget-gate bias
//! is initialized to 1.0 at parameter-store construction time.

use super::tape::{Tape, Var};
use super::tensor::Real;
use crate::error::Result;

/// Tape handles for one LSTM cell: per-gate weight `(hidden x (input+hidden))`
/// and bias `(hidden)`. Gate order is input, forget, candidate, output.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub w_input: Var,
    pub b_input: Var,
    pub w_forget: Var,
    pub b_forget: Var,
    pub w_cand: Var,
    pub b_cand: Var,
    pub w_out: Var,
    pub b_out: Var,
}

/// Hidden and cell state handles for one cell instance.
#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

/// One cell transition: returns the next (h, c).
pub fn lstm_step<R: Real>(
    tape: &mut Tape<R>,
    x: Var,
    state: LstmState,
    p: &LstmVars,
) -> Result<LstmState> {
    let z = tape.concat(&[x, state.h])?;

    let gate = |tape: &mut Tape<R>, w: Var, b: Var| -> Result<Var> {
        let a = tape.matvec(w, z)?;
        tape.add(a, b)
    };

    let ai = gate(tape, p.w_input, p.b_input)?;
    let af = gate(tape, p.w_forget, p.b_forget)?;
    let ag = gate(tape, p.w_cand, p.b_cand)?;
    let ao = gate(tape, p.w_out, p.b_out)?;

    let i = tape.sigmoid(ai)?;
    let f = tape.sigmoid(af)?;
    let g = tape.tanh(ag)?;
    let o = tape.sigmoid(ao)?;

    let fc = tape.mul(f, state.c)?;
    let ig = tape.mul(i, g)?;
    let c_next = tape.add(fc, ig)?;
    let tc = tape.tanh(c_next)?;
    let h_next = tape.mul(o, tc)?;

    Ok(LstmState {
        h: h_next,
        c: c_next,
    })
}

//! Central finite-difference gradient checking.
//!
//! The numerical side only ever evaluates the forward pass on fresh
//! tapes, so it is independent of the backward implementation it is
//! used to verify.

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::Result;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_TOL: f64 = 1e-4;

/// Graph under test: given a tape and leaf handles (one per input, in
/// order, all requiring gradient), produce a scalar loss.
pub type LossBuilder<'a> = &'a dyn Fn(&mut Tape<f64>, &[Var]) -> Result<Var>;

fn eval_loss(build: LossBuilder, inputs: &[Tensor<f64>]) -> Result<f64> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|t| tape.leaf(t.clone(), true))
        .collect();
    let loss = build(&mut tape, &vars)?;
    Ok(tape.value(loss).data()[0])
}

/// Central-difference gradient of the loss w.r.t. every input element.
pub fn fd_gradient(
    build: LossBuilder,
    inputs: &[Tensor<f64>],
    eps: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut grads = Vec::with_capacity(inputs.len());
    for i in 0..inputs.len() {
        let mut g = Vec::with_capacity(inputs[i].numel());
        for j in 0..inputs[i].numel() {
            let mut bumped: Vec<Tensor<f64>> = inputs.to_vec();
            bumped[i].data_mut()[j] += eps;
            let up = eval_loss(build, &bumped)?;
            bumped[i].data_mut()[j] -= 2.0 * eps;
            let down = eval_loss(build, &bumped)?;
            g.push((up - down) / (2.0 * eps));
        }
        grads.push(g);
    }
    Ok(grads)
}

/// Reverse-mode gradient of the same graph.
pub fn analytic_gradient(build: LossBuilder, inputs: &[Tensor<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|t| tape.leaf(t.clone(), true))
        .collect();
    let loss = build(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;
    Ok(vars.iter().map(|v| grads.get(*v).into_data()).collect())
}

/// `|a - n| / max(|a|, |n|, 1e-4)`, maximized over all elements. The
/// floor keeps central-difference truncation noise (~1e-10 at eps 1e-5)
/// on near-zero gradients from registering as relative error, while a
/// gradient that is wrong by a factor still fails at any magnitude
/// above the noise floor.
pub fn max_rel_error(analytic: &[Vec<f64>], numeric: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (ga, gn) in analytic.iter().zip(numeric.iter()) {
        for (a, n) in ga.iter().zip(gn.iter()) {
            let denom = a.abs().max(n.abs()).max(1e-4);
            worst = worst.max((a - n).abs() / denom);
        }
    }
    worst
}

/// Result of one named gradient check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub max_rel_err: f64,
    pub passed: bool,
}

/// Runs one graph through both routes and compares.
pub fn check_graph(
    name: &str,
    build: LossBuilder,
    inputs: &[Tensor<f64>],
    eps: f64,
    tol: f64,
) -> Result<CheckOutcome> {
    let analytic = analytic_gradient(build, inputs)?;
    let numeric = fd_gradient(build, inputs, eps)?;
    let err = max_rel_error(&analytic, &numeric);
    Ok(CheckOutcome {
        name: name.to_string(),
        max_rel_err: err,
        passed: err < tol,
    })
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::new(shape, data).unwrap()
}

/// Reduces an arbitrary-shape output to a scalar through a fixed random
/// projection so every output element influences the loss.
fn project(tape: &mut Tape<f64>, out: Var, weights: &Tensor<f64>) -> Result<Var> {
    let w = tape.constant(weights.clone());
    let prod = tape.mul(out, w)?;
    tape.sum(prod)
}

struct PrimitiveCase {
    name: &'static str,
    shapes: Vec<Vec<usize>>,
    // builder gets (tape, inputs, projection weights for the output)
    build: fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
    out_shape: Vec<usize>,
    positive_inputs: bool,
}

fn primitive_cases() -> Vec<PrimitiveCase> {
    vec![
        PrimitiveCase {
            name: "matvec",
            shapes: vec![vec![3, 4], vec![4]],
            build: |t, v| t.matvec(v[0], v[1]),
            out_shape: vec![3],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "matmul",
            shapes: vec![vec![2, 3], vec![3, 4]],
            build: |t, v| t.matmul(v[0], v[1]),
            out_shape: vec![2, 4],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "add",
            shapes: vec![vec![5], vec![5]],
            build: |t, v| t.add(v[0], v[1]),
            out_shape: vec![5],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "mul",
            shapes: vec![vec![5], vec![5]],
            build: |t, v| t.mul(v[0], v[1]),
            out_shape: vec![5],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "scale_by",
            shapes: vec![vec![1], vec![4]],
            build: |t, v| t.scale_by(v[0], v[1]),
            out_shape: vec![4],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "scale",
            shapes: vec![vec![4]],
            build: |t, v| t.scale(v[0], 1.7),
            out_shape: vec![4],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "dot",
            shapes: vec![vec![5], vec![5]],
            build: |t, v| t.dot(v[0], v[1]),
            out_shape: vec![1],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "concat",
            shapes: vec![vec![2], vec![3], vec![1]],
            build: |t, v| t.concat(v),
            out_shape: vec![6],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "sigmoid",
            shapes: vec![vec![6]],
            build: |t, v| t.sigmoid(v[0]),
            out_shape: vec![6],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "tanh",
            shapes: vec![vec![6]],
            build: |t, v| t.tanh(v[0]),
            out_shape: vec![6],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "log",
            shapes: vec![vec![5]],
            build: |t, v| t.log(v[0]),
            out_shape: vec![5],
            positive_inputs: true,
        },
        PrimitiveCase {
            name: "softmax",
            shapes: vec![vec![5]],
            build: |t, v| t.softmax(v[0]),
            out_shape: vec![5],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "log_softmax",
            shapes: vec![vec![5]],
            build: |t, v| t.log_softmax(v[0]),
            out_shape: vec![5],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "sum",
            shapes: vec![vec![2, 3]],
            build: |t, v| t.sum(v[0]),
            out_shape: vec![1],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "index",
            shapes: vec![vec![5]],
            build: |t, v| t.index(v[0], 2),
            out_shape: vec![1],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "mean_rows",
            shapes: vec![vec![3, 4]],
            build: |t, v| t.mean_rows(v[0]),
            out_shape: vec![4],
            positive_inputs: false,
        },
        PrimitiveCase {
            name: "embed_row",
            shapes: vec![vec![6, 3]],
            build: |t, v| t.embed_row(v[0], 2),
            out_shape: vec![3],
            positive_inputs: false,
        },
    ]
}

/// Checks every registered primitive over `count` random draws starting
/// at `base`. Returns one outcome per primitive with the worst error
/// observed.
pub fn primitive_checks(base: u64, count: u64, eps: f64, tol: f64) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = Vec::new();
    for case in primitive_cases() {
        let mut worst = 0.0f64;
        for seed in base..base + count {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(7919).wrapping_add(13));
            let inputs: Vec<Tensor<f64>> = case
                .shapes
                .iter()
                .map(|s| {
                    let mut t = rand_tensor(&mut rng, s.clone());
                    if case.positive_inputs {
                        for v in t.data_mut() {
                            *v = v.abs() + 0.2;
                        }
                    }
                    t
                })
                .collect();
            let proj = rand_tensor(&mut rng, case.out_shape.clone());
            let build = |tape: &mut Tape<f64>, vars: &[Var]| -> Result<Var> {
                let out = (case.build)(tape, vars)?;
                project(tape, out, &proj)
            };
            let outcome = check_graph(case.name, &build, &inputs, eps, tol)?;
            worst = worst.max(outcome.max_rel_err);
        }
        outcomes.push(CheckOutcome {
            name: case.name.to_string(),
            max_rel_err: worst,
            passed: worst < tol,
        });
    }
    Ok(outcomes)
}

/// LSTM cell composite check (all eight parameter tensors plus x, h, c).
pub fn lstm_checks(base: u64, count: u64, eps: f64, tol: f64) -> Result<CheckOutcome> {
    use super::lstm::{lstm_step, LstmState, LstmVars};
    let input = 3usize;
    let hidden = 2usize;
    let mut worst = 0.0f64;
    for seed in base..base + count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(104729).wrapping_add(7));
        let mut inputs = Vec::new();
        // x, h, c
        inputs.push(rand_tensor(&mut rng, vec![input]));
        inputs.push(rand_tensor(&mut rng, vec![hidden]));
        inputs.push(rand_tensor(&mut rng, vec![hidden]));
        // 4 gates of (w, b)
        for _ in 0..4 {
            inputs.push(rand_tensor(&mut rng, vec![hidden, input + hidden]));
            inputs.push(rand_tensor(&mut rng, vec![hidden]));
        }
        let proj_h = rand_tensor(&mut rng, vec![hidden]);
        let proj_c = rand_tensor(&mut rng, vec![hidden]);
        let build = |tape: &mut Tape<f64>, v: &[Var]| -> Result<Var> {
            let p = LstmVars {
                w_input: v[3],
                b_input: v[4],
                w_forget: v[5],
                b_forget: v[6],
                w_cand: v[7],
                b_cand: v[8],
                w_out: v[9],
                b_out: v[10],
            };
            let next = lstm_step(tape, v[0], LstmState { h: v[1], c: v[2] }, &p)?;
            let lh = project(tape, next.h, &proj_h)?;
            let lc = project(tape, next.c, &proj_c)?;
            tape.add(lh, lc)
        };
        let outcome = check_graph("lstm_step", &build, &inputs, eps, tol)?;
        worst = worst.max(outcome.max_rel_err);
    }
    Ok(CheckOutcome {
        name: "lstm_step".to_string(),
        max_rel_err: worst,
        passed: worst < tol,
    })
}

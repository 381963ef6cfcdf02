//! Tape-based reverse-mode differentiation over the primitive set the
//! model needs: products, concatenation, pointwise nonlinearities,
//! softmax/log-softmax, reductions, and embedding lookup.
//!
//! Forward values are computed eagerly as operations are recorded; the
//! backward pass replays the record in reverse, visiting each node once.

use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a value stored on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Recorded primitive; inputs are tape positions of earlier nodes.
#[derive(Debug, Clone)]
enum Op {
    /// Leaf value (input or parameter); nothing to propagate.
    Leaf,
    /// (r x c) matrix times (c) vector.
    MatVec { m: Var, v: Var },
    /// (a x b) times (b x c).
    MatMul { a: Var, b: Var },
    /// Elementwise sum of two same-shape tensors.
    Add { a: Var, b: Var },
    /// Elementwise product of two same-shape tensors.
    Mul { a: Var, b: Var },
    /// Scalar variable times vector.
    ScaleBy { s: Var, v: Var },
    /// Constant times tensor.
    Scale { x: Var, c: f64 },
    /// Vector dot product -> scalar.
    Dot { a: Var, b: Var },
    /// Concatenation of rank-1 tensors.
    Concat { parts: Vec<Var> },
    Sigmoid { x: Var },
    Tanh { x: Var },
    /// Elementwise natural log.
    Log { x: Var },
    /// Softmax over a rank-1 tensor (max-subtracted).
    Softmax { x: Var },
    /// Log-softmax over a rank-1 tensor; never computed as log(softmax).
    LogSoftmax { x: Var },
    /// Sum of all elements -> scalar.
    Sum { x: Var },
    /// Single element of a rank-1 tensor -> scalar.
    Index { x: Var, i: usize },
    /// Column-wise mean of a (k x d) matrix -> (d).
    MeanRows { m: Var },
    /// Row `i` of a (n x d) matrix -> (d).
    EmbedRow { table: Var, row: usize },
}

struct Node<R: Real> {
    value: Tensor<R>,
    op: Op,
    requires_grad: bool,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients<R: Real> {
    grads: Vec<Option<Vec<R>>>,
    shapes: Vec<Vec<usize>>,
}

impl<R: Real> Gradients<R> {
    /// Gradient of the loss w.r.t. `var`; zeros if nothing flowed to it.
    pub fn get(&self, var: Var) -> Tensor<R> {
        let i = var.index();
        match &self.grads[i] {
            Some(g) => Tensor::new(self.shapes[i].clone(), g.clone()).expect("grad shape"),
            None => Tensor::zeros(self.shapes[i].clone()),
        }
    }

    /// Borrowed view; `None` means no gradient flowed (i.e. exactly zero).
    pub fn get_slice(&self, var: Var) -> Option<&[R]> {
        self.grads[var.index()].as_deref()
    }
}

/// Ordered record of primitive operations and their values.
pub struct Tape<R: Real> {
    nodes: Vec<Node<R>>,
}

impl<R: Real> Default for Tape<R> {
    fn default() -> Self {
        Self::new()
    }
}

fn mismatch(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Error {
    Error::ShapeMismatch {
        op,
        lhs: lhs.to_vec(),
        rhs: rhs.to_vec(),
    }
}

impl<R: Real> Tape<R> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<R>, op: Op, requires_grad: bool) -> Var {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(id)
    }

    /// Registers a leaf value. `requires_grad` marks it as a target for
    /// [`Tape::backward`].
    pub fn leaf(&mut self, value: Tensor<R>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// Constant leaf (no gradient).
    pub fn constant(&mut self, value: Tensor<R>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, var: Var) -> &Tensor<R> {
        &self.nodes[var.index()].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.index()].requires_grad
    }

    fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.index()].value.shape()
    }

    fn data(&self, var: Var) -> &[R] {
        self.nodes[var.index()].value.data()
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.requires_grad(*v))
    }

    // ── Forward primitives ──────────────────────────────────────────

    pub fn matvec(&mut self, m: Var, v: Var) -> Result<Var> {
        let ms = self.shape(m);
        let vs = self.shape(v);
        if ms.len() != 2 || vs.len() != 1 || ms[1] != vs[0] {
            return Err(mismatch("matvec", ms, vs));
        }
        let (rows, cols) = (ms[0], ms[1]);
        let md = self.data(m);
        let vd = self.data(v);
        let mut out = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = &md[r * cols..(r + 1) * cols];
            let mut acc = R::ZERO;
            for (a, b) in row.iter().zip(vd.iter()) {
                acc += *a * *b;
            }
            out.push(acc);
        }
        let rg = self.any_grad(&[m, v]);
        Ok(self.push(Tensor::vector(out), Op::MatVec { m, v }, rg))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let asp = self.shape(a);
        let bsp = self.shape(b);
        if asp.len() != 2 || bsp.len() != 2 || asp[1] != bsp[0] {
            return Err(mismatch("matmul", asp, bsp));
        }
        let (n, k, m) = (asp[0], asp[1], bsp[1]);
        let ad = self.data(a);
        let bd = self.data(b);
        let mut out = vec![R::ZERO; n * m];
        for i in 0..n {
            for p in 0..k {
                let aip = ad[i * k + p];
                let brow = &bd[p * m..(p + 1) * m];
                let orow = &mut out[i * m..(i + 1) * m];
                for (o, b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aip * *b;
                }
            }
        }
        let rg = self.any_grad(&[a, b]);
        let t = Tensor::new(vec![n, m], out)?;
        Ok(self.push(t, Op::MatMul { a, b }, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(mismatch("add", self.shape(a), self.shape(b)));
        }
        let out: Vec<R> = self
            .data(a)
            .iter()
            .zip(self.data(b).iter())
            .map(|(x, y)| *x + *y)
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::new(shape, out)?, Op::Add { a, b }, rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(mismatch("mul", self.shape(a), self.shape(b)));
        }
        let out: Vec<R> = self
            .data(a)
            .iter()
            .zip(self.data(b).iter())
            .map(|(x, y)| *x * *y)
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::new(shape, out)?, Op::Mul { a, b }, rg))
    }

    /// Scalar variable times tensor.
    pub fn scale_by(&mut self, s: Var, v: Var) -> Result<Var> {
        if !self.value(s).is_scalar() {
            return Err(mismatch("scale_by", self.shape(s), self.shape(v)));
        }
        let sv = self.data(s)[0];
        let out: Vec<R> = self.data(v).iter().map(|x| sv * *x).collect();
        let shape = self.shape(v).to_vec();
        let rg = self.any_grad(&[s, v]);
        Ok(self.push(Tensor::new(shape, out)?, Op::ScaleBy { s, v }, rg))
    }

    /// Constant times tensor.
    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let cf = R::from_f64(c);
        let out: Vec<R> = self.data(x).iter().map(|v| cf * *v).collect();
        let shape = self.shape(x).to_vec();
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::new(shape, out)?, Op::Scale { x, c }, rg))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let asp = self.shape(a);
        let bsp = self.shape(b);
        if asp.len() != 1 || asp != bsp {
            return Err(mismatch("dot", asp, bsp));
        }
        let mut acc = R::ZERO;
        for (x, y) in self.data(a).iter().zip(self.data(b).iter()) {
            acc += *x * *y;
        }
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::scalar(acc), Op::Dot { a, b }, rg))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::contract("concat of zero parts"));
        }
        let mut out = Vec::new();
        for p in parts {
            let sp = self.shape(*p);
            if sp.len() != 1 {
                return Err(mismatch("concat", sp, &[]));
            }
            out.extend_from_slice(self.data(*p));
        }
        let rg = self.any_grad(parts);
        Ok(self.push(
            Tensor::vector(out),
            Op::Concat {
                parts: parts.to_vec(),
            },
            rg,
        ))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let out: Vec<R> = self
            .data(x)
            .iter()
            .map(|v| R::ONE / (R::ONE + (-*v).exp()))
            .collect();
        let shape = self.shape(x).to_vec();
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::new(shape, out)?, Op::Sigmoid { x }, rg))
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        let out: Vec<R> = self.data(x).iter().map(|v| v.tanh()).collect();
        let shape = self.shape(x).to_vec();
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::new(shape, out)?, Op::Tanh { x }, rg))
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        let out: Vec<R> = self.data(x).iter().map(|v| v.ln()).collect();
        let shape = self.shape(x).to_vec();
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::new(shape, out)?, Op::Log { x }, rg))
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let sp = self.shape(x);
        if sp.len() != 1 {
            return Err(mismatch("softmax", sp, &[]));
        }
        let d = self.data(x);
        let mut maxv = d[0];
        for v in d.iter() {
            maxv = maxv.maximum(*v);
        }
        let exps: Vec<R> = d.iter().map(|v| (*v - maxv).exp()).collect();
        let mut sum = R::ZERO;
        for e in &exps {
            sum += *e;
        }
        let out: Vec<R> = exps.iter().map(|e| *e / sum).collect();
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::vector(out), Op::Softmax { x }, rg))
    }

    pub fn log_softmax(&mut self, x: Var) -> Result<Var> {
        let sp = self.shape(x);
        if sp.len() != 1 {
            return Err(mismatch("log_softmax", sp, &[]));
        }
        let d = self.data(x);
        let mut maxv = d[0];
        for v in d.iter() {
            maxv = maxv.maximum(*v);
        }
        let mut sum = R::ZERO;
        for v in d.iter() {
            sum += (*v - maxv).exp();
        }
        let lse = sum.ln();
        let out: Vec<R> = d.iter().map(|v| *v - maxv - lse).collect();
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::vector(out), Op::LogSoftmax { x }, rg))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let mut acc = R::ZERO;
        for v in self.data(x) {
            acc += *v;
        }
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::scalar(acc), Op::Sum { x }, rg))
    }

    pub fn index(&mut self, x: Var, i: usize) -> Result<Var> {
        let sp = self.shape(x);
        if sp.len() != 1 || i >= sp[0] {
            return Err(Error::contract(format!(
                "index {i} out of bounds for shape {sp:?}"
            )));
        }
        let v = self.data(x)[i];
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::scalar(v), Op::Index { x, i }, rg))
    }

    pub fn mean_rows(&mut self, m: Var) -> Result<Var> {
        let sp = self.shape(m);
        if sp.len() != 2 {
            return Err(mismatch("mean_rows", sp, &[]));
        }
        let (k, d) = (sp[0], sp[1]);
        let md = self.data(m);
        let inv = R::from_f64(1.0 / k as f64);
        let mut out = vec![R::ZERO; d];
        for r in 0..k {
            for (o, v) in out.iter_mut().zip(md[r * d..(r + 1) * d].iter()) {
                *o += *v;
            }
        }
        for o in out.iter_mut() {
            *o = *o * inv;
        }
        let rg = self.requires_grad(m);
        Ok(self.push(Tensor::vector(out), Op::MeanRows { m }, rg))
    }

    pub fn embed_row(&mut self, table: Var, row: usize) -> Result<Var> {
        let sp = self.shape(table);
        if sp.len() != 2 || row >= sp[0] {
            return Err(Error::contract(format!(
                "row {row} out of bounds for table shape {sp:?}"
            )));
        }
        let d = sp[1];
        let out = self.data(table)[row * d..(row + 1) * d].to_vec();
        let rg = self.requires_grad(table);
        Ok(self.push(Tensor::vector(out), Op::EmbedRow { table, row }, rg))
    }

    /// Sum of a non-empty list of same-shape vectors.
    pub fn add_all(&mut self, parts: &[Var]) -> Result<Var> {
        let mut it = parts.iter();
        let first = *it
            .next()
            .ok_or_else(|| Error::contract("add_all of zero parts"))?;
        let mut acc = first;
        for v in it {
            acc = self.add(acc, *v)?;
        }
        Ok(acc)
    }

    // ── Backward ────────────────────────────────────────────────────

    /// Reverse pass from a scalar loss. Returns a gradient for every
    /// requires-grad tensor; tensors the loss does not depend on get
    /// exactly zero.
    pub fn backward(&self, loss: Var) -> Result<Gradients<R>> {
        if !self.value(loss).is_scalar() {
            return Err(Error::contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<R>>> = vec![None; n];
        grads[loss.index()] = Some(vec![R::ONE]);

        for idx in (0..=loss.index()).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let g = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn accum(grads: &mut [Option<Vec<R>>], var: Var, add: impl FnOnce(&mut [R]), len: usize) {
        let slot = &mut grads[var.index()];
        if slot.is_none() {
            *slot = Some(vec![R::ZERO; len]);
        }
        add(slot.as_mut().unwrap());
    }

    fn propagate(&self, idx: usize, g: &[R], grads: &mut [Option<Vec<R>>]) {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::MatVec { m, v } => {
                let cols = self.shape(*m)[1];
                let rows = self.shape(*m)[0];
                if self.requires_grad(*m) {
                    let vd = self.data(*v);
                    Self::accum(
                        grads,
                        *m,
                        |gm| {
                            for r in 0..rows {
                                let gr = g[r];
                                let row = &mut gm[r * cols..(r + 1) * cols];
                                for (o, x) in row.iter_mut().zip(vd.iter()) {
                                    *o += gr * *x;
                                }
                            }
                        },
                        rows * cols,
                    );
                }
                if self.requires_grad(*v) {
                    let md = self.data(*m);
                    Self::accum(
                        grads,
                        *v,
                        |gv| {
                            for r in 0..rows {
                                let gr = g[r];
                                let row = &md[r * cols..(r + 1) * cols];
                                for (o, x) in gv.iter_mut().zip(row.iter()) {
                                    *o += gr * *x;
                                }
                            }
                        },
                        cols,
                    );
                }
            }
            Op::MatMul { a, b } => {
                let (n, k) = (self.shape(*a)[0], self.shape(*a)[1]);
                let m = self.shape(*b)[1];
                if self.requires_grad(*a) {
                    let bd = self.data(*b);
                    Self::accum(
                        grads,
                        *a,
                        |ga| {
                            // dA = g @ B^T
                            for i in 0..n {
                                for p in 0..k {
                                    let mut acc = R::ZERO;
                                    for j in 0..m {
                                        acc += g[i * m + j] * bd[p * m + j];
                                    }
                                    ga[i * k + p] += acc;
                                }
                            }
                        },
                        n * k,
                    );
                }
                if self.requires_grad(*b) {
                    let ad = self.data(*a);
                    Self::accum(
                        grads,
                        *b,
                        |gb| {
                            // dB = A^T @ g
                            for p in 0..k {
                                for i in 0..n {
                                    let aip = ad[i * k + p];
                                    for j in 0..m {
                                        gb[p * m + j] += aip * g[i * m + j];
                                    }
                                }
                            }
                        },
                        k * m,
                    );
                }
            }
            Op::Add { a, b } => {
                for side in [a, b] {
                    if self.requires_grad(*side) {
                        Self::accum(
                            grads,
                            *side,
                            |gs| {
                                for (o, x) in gs.iter_mut().zip(g.iter()) {
                                    *o += *x;
                                }
                            },
                            g.len(),
                        );
                    }
                }
            }
            Op::Mul { a, b } => {
                if self.requires_grad(*a) {
                    let bd = self.data(*b);
                    Self::accum(
                        grads,
                        *a,
                        |ga| {
                            for ((o, x), y) in ga.iter_mut().zip(g.iter()).zip(bd.iter()) {
                                *o += *x * *y;
                            }
                        },
                        g.len(),
                    );
                }
                if self.requires_grad(*b) {
                    let ad = self.data(*a);
                    Self::accum(
                        grads,
                        *b,
                        |gb| {
                            for ((o, x), y) in gb.iter_mut().zip(g.iter()).zip(ad.iter()) {
                                *o += *x * *y;
                            }
                        },
                        g.len(),
                    );
                }
            }
            Op::ScaleBy { s, v } => {
                if self.requires_grad(*s) {
                    let vd = self.data(*v);
                    Self::accum(
                        grads,
                        *s,
                        |gs| {
                            let mut acc = R::ZERO;
                            for (x, y) in g.iter().zip(vd.iter()) {
                                acc += *x * *y;
                            }
                            gs[0] += acc;
                        },
                        1,
                    );
                }
                if self.requires_grad(*v) {
                    let sv = self.data(*s)[0];
                    Self::accum(
                        grads,
                        *v,
                        |gv| {
                            for (o, x) in gv.iter_mut().zip(g.iter()) {
                                *o += sv * *x;
                            }
                        },
                        g.len(),
                    );
                }
            }
            Op::Scale { x, c } => {
                if self.requires_grad(*x) {
                    let cf = R::from_f64(*c);
                    Self::accum(
                        grads,
                        *x,
                        |gx| {
                            for (o, v) in gx.iter_mut().zip(g.iter()) {
                                *o += cf * *v;
                            }
                        },
                        g.len(),
                    );
                }
            }
            Op::Dot { a, b } => {
                let gs = g[0];
                if self.requires_grad(*a) {
                    let bd = self.data(*b);
                    Self::accum(
                        grads,
                        *a,
                        |ga| {
                            for (o, y) in ga.iter_mut().zip(bd.iter()) {
                                *o += gs * *y;
                            }
                        },
                        bd.len(),
                    );
                }
                if self.requires_grad(*b) {
                    let ad = self.data(*a);
                    Self::accum(
                        grads,
                        *b,
                        |gb| {
                            for (o, y) in gb.iter_mut().zip(ad.iter()) {
                                *o += gs * *y;
                            }
                        },
                        ad.len(),
                    );
                }
            }
            Op::Concat { parts } => {
                let mut offset = 0;
                for p in parts {
                    let len = self.value(*p).numel();
                    if self.requires_grad(*p) {
                        let seg = &g[offset..offset + len];
                        Self::accum(
                            grads,
                            *p,
                            |gp| {
                                for (o, x) in gp.iter_mut().zip(seg.iter()) {
                                    *o += *x;
                                }
                            },
                            len,
                        );
                    }
                    offset += len;
                }
            }
            Op::Sigmoid { x } => {
                if self.requires_grad(*x) {
                    let y = node.value.data();
                    Self::accum(
                        grads,
                        *x,
                        |gx| {
                            for ((o, gi), yi) in gx.iter_mut().zip(g.iter()).zip(y.iter()) {
                                *o += *gi * *yi * (R::ONE - *yi);
                            }
                        },
                        g.len(),
                    );
                }
            }
            Op::Tanh { x } => {
                if self.requires_grad(*x) {
                    let y = node.value.data();
                    Self::accum(
                        grads,
                        *x,
                        |gx| {
                            for ((o, gi), yi) in gx.iter_mut().zip(g.iter()).zip(y.iter()) {
                                *o += *gi * (R::ONE - *yi * *yi);
                            }
                        },
                        g.len(),
                    );
                }
            }
            Op::Log { x } => {
                if self.requires_grad(*x) {
                    let xd = self.data(*x);
                    Self::accum(
                        grads,
                        *x,
                        |gx| {
                            for ((o, gi), xi) in gx.iter_mut().zip(g.iter()).zip(xd.iter()) {
                                *o += *gi / *xi;
                            }
                        },
                        g.len(),
                    );
                }
            }
            Op::Softmax { x } => {
                if self.requires_grad(*x) {
                    let y = node.value.data();
                    let mut gy = R::ZERO;
                    for (gi, yi) in g.iter().zip(y.iter()) {
                        gy += *gi * *yi;
                    }
                    Self::accum(
                        grads,
                        *x,
                        |gx| {
                            for ((o, gi), yi) in gx.iter_mut().zip(g.iter()).zip(y.iter()) {
                                *o += *yi * (*gi - gy);
                            }
                        },
                        g.len(),
                    );
                }
            }
            Op::LogSoftmax { x } => {
                if self.requires_grad(*x) {
                    let y = node.value.data();
                    let mut gsum = R::ZERO;
                    for gi in g.iter() {
                        gsum += *gi;
                    }
                    Self::accum(
                        grads,
                        *x,
                        |gx| {
                            for ((o, gi), yi) in gx.iter_mut().zip(g.iter()).zip(y.iter()) {
                                *o += *gi - yi.exp() * gsum;
                            }
                        },
                        g.len(),
                    );
                }
            }
            Op::Sum { x } => {
                if self.requires_grad(*x) {
                    let gs = g[0];
                    let len = self.value(*x).numel();
                    Self::accum(
                        grads,
                        *x,
                        |gx| {
                            for o in gx.iter_mut() {
                                *o += gs;
                            }
                        },
                        len,
                    );
                }
            }
            Op::Index { x, i } => {
                if self.requires_grad(*x) {
                    let gs = g[0];
                    let len = self.value(*x).numel();
                    let i = *i;
                    Self::accum(grads, *x, |gx| gx[i] += gs, len);
                }
            }
            Op::MeanRows { m } => {
                if self.requires_grad(*m) {
                    let sp = self.shape(*m);
                    let (k, d) = (sp[0], sp[1]);
                    let inv = R::from_f64(1.0 / k as f64);
                    Self::accum(
                        grads,
                        *m,
                        |gm| {
                            for r in 0..k {
                                for (o, x) in gm[r * d..(r + 1) * d].iter_mut().zip(g.iter()) {
                                    *o += inv * *x;
                                }
                            }
                        },
                        k * d,
                    );
                }
            }
            Op::EmbedRow { table, row } => {
                if self.requires_grad(*table) {
                    let sp = self.shape(*table);
                    let (n, d) = (sp[0], sp[1]);
                    let row = *row;
                    Self::accum(
                        grads,
                        *table,
                        |gt| {
                            for (o, x) in gt[row * d..(row + 1) * d].iter_mut().zip(g.iter()) {
                                *o += *x;
                            }
                        },
                        n * d,
                    );
                }
            }
        }
    }
}

//! Reverse-mode differentiation over matrix-valued operations.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are
//! referenced in place rather than copied onto the tape, and their gradients
//! are accumulated densely by [`Tape::backward`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::kernels::{self, AttentionMask};
use super::params::{Gradients, ParamId, Parameters};
use super::tensor::{gemm_into, matmul, MatView, Matrix, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Node(usize),
    Param(ParamId),
}

enum Op<T> {
    Gather {
        table: ParamId,
        ids: Vec<usize>,
    },
    Add(Var, Var),
    AddRow(Var, Var),
    MatMul(Var, Var),
    /// `a b^T`
    MatMulBT(Var, Var),
    LayerNorm {
        x: Var,
        gain: Var,
        xhat: Vec<T>,
        rstd: Vec<T>,
        bias: Var,
    },
    Gelu(Var),
    Dropout {
        x: Var,
        mask: Vec<T>,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        probs: Vec<T>,
    },
    CrossEntropy {
        logits: Var,
        targets: Vec<Option<usize>>,
        probs: Matrix<T>,
        count: usize,
    },
}

struct Node<T> {
    value: Matrix<T>,
    op: Op<T>,
}

pub struct Tape<'p, T> {
    params: &'p Parameters<T>,
    nodes: Vec<Node<T>>,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p Parameters<T>) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p Parameters<T> {
        self.params
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        match v {
            Var::Node(i) => &self.nodes[i].value,
            Var::Param(p) => &self.params.tensors[p],
        }
    }

    pub fn into_value(mut self, v: Var) -> Matrix<T> {
        match v {
            Var::Node(i) => std::mem::replace(&mut self.nodes[i].value, Matrix::zeros(0, 0)),
            Var::Param(p) => self.params.tensors[p].clone(),
        }
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var::Node(self.nodes.len() - 1)
    }

    /// Rows `ids` of a parameter table. Ids must be in range.
    pub fn gather(&mut self, table: ParamId, ids: Vec<usize>) -> Var {
        let t = &self.params.tensors[table];
        let mut out = Matrix::zeros(ids.len(), t.cols);
        for (r, &id) in ids.iter().enumerate() {
            out.row_mut(r).copy_from_slice(t.row(id));
        }
        self.push(out, Op::Gather { table, ids })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(out, Op::Add(a, b))
    }

    pub fn add_row(&mut self, x: Var, b: Var) -> Var {
        let mut out = self.value(x).clone();
        kernels::add_row(&mut out, self.value(b));
        self.push(out, Op::AddRow(x, b))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = matmul(self.value(a).view(), self.value(b).view());
        self.push(out, Op::MatMul(a, b))
    }

    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let out = matmul(self.value(a).view(), self.value(b).view().t());
        self.push(out, Op::MatMulBT(a, b))
    }

    /// `x W + b`, recorded as a product followed by a bias broadcast.
    pub fn linear(&mut self, x: Var, w: ParamId, b: ParamId) -> Var {
        let y = self.matmul(x, Var::Param(w));
        self.add_row(y, Var::Param(b))
    }

    pub fn layer_norm(&mut self, x: Var, gain: ParamId, bias: ParamId) -> Var {
        let out = kernels::layer_norm(
            self.value(x),
            &self.params.tensors[gain],
            &self.params.tensors[bias],
        );
        self.push(
            out.y,
            Op::LayerNorm {
                x,
                gain: Var::Param(gain),
                xhat: out.xhat,
                rstd: out.rstd,
                bias: Var::Param(bias),
            },
        )
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let out = Matrix::from_vec(v.rows, v.cols, v.data.iter().map(|&z| kernels::gelu(z)).collect());
        self.push(out, Op::Gelu(x))
    }

    /// Inverted dropout; the identity when `rate == 0`.
    pub fn dropout(&mut self, x: Var, rate: f64, rng: &mut ChaCha8Rng) -> Var {
        if rate <= 0.0 {
            return x;
        }
        let keep = T::of(1.0 / (1.0 - rate));
        let v = self.value(x);
        let mask: Vec<T> = (0..v.len())
            .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
            .collect();
        let out = Matrix::from_vec(
            v.rows,
            v.cols,
            v.data.iter().zip(&mask).map(|(&a, &m)| a * m).collect(),
        );
        self.push(out, Op::Dropout { x, mask })
    }

    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize, mask: &AttentionMask) -> Var {
        let (out, probs) = kernels::attention(self.value(q), self.value(k), self.value(v), heads, mask);
        self.push(out, Op::Attention { q, k, v, heads, probs })
    }

    /// Attention weights recorded so far, as `(heads, queries, keys, weights)`.
    pub fn attention_weights(&self) -> Vec<(usize, usize, usize, &[T])> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.op {
                Op::Attention { q, k, heads, probs, .. } => {
                    Some((*heads, self.value(*q).rows, self.value(*k).rows, probs.as_slice()))
                }
                _ => None,
            })
            .collect()
    }

    /// Mean negative log-likelihood over rows whose target is `Some`.
    /// Produces a `1 x 1` node; the caller guarantees at least one target.
    pub fn cross_entropy(&mut self, logits: Var, targets: Vec<Option<usize>>) -> Var {
        let (loss, probs, count) = cross_entropy_forward(self.value(logits), &targets);
        self.push(
            Matrix::from_vec(1, 1, vec![loss]),
            Op::CrossEntropy {
                logits,
                targets,
                probs,
                count,
            },
        )
    }

    /// Gradients of the scalar node `root` with respect to every parameter.
    pub fn backward(self, root: Var) -> Gradients<T> {
        let mut sink = Sink {
            nodes: (0..self.nodes.len()).map(|_| None).collect(),
            params: self.params.zeros_like(),
        };
        let Var::Node(root) = root else {
            return sink.params;
        };
        let rv = &self.nodes[root].value;
        sink.nodes[root] = Some(Matrix::from_vec(rv.rows, rv.cols, vec![T::one(); rv.len()]));

        for i in (0..=root).rev() {
            let Some(g) = sink.nodes[i].take() else {
                continue;
            };
            match &self.nodes[i].op {
                Op::Gather { table, ids } => {
                    let dt = &mut sink.params.tensors[*table];
                    for (r, &id) in ids.iter().enumerate() {
                        for (a, &b) in dt.row_mut(id).iter_mut().zip(g.row(r)) {
                            *a = *a + b;
                        }
                    }
                }
                Op::Add(a, b) => {
                    sink.add(*b, &g);
                    sink.add_owned(*a, g);
                }
                Op::AddRow(x, b) => {
                    let db = sink.target(*b, 1, g.cols);
                    for r in 0..g.rows {
                        for (a, &v) in db.data.iter_mut().zip(g.row(r)) {
                            *a = *a + v;
                        }
                    }
                    sink.add_owned(*x, g);
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let da = sink.target(*a, av.rows, av.cols);
                    gemm_into(T::one(), g.view(), bv.view().t(), T::one(), da, 0);
                    let db = sink.target(*b, bv.rows, bv.cols);
                    gemm_into(T::one(), av.view().t(), g.view(), T::one(), db, 0);
                }
                Op::MatMulBT(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let da = sink.target(*a, av.rows, av.cols);
                    gemm_into(T::one(), g.view(), bv.view(), T::one(), da, 0);
                    let db = sink.target(*b, bv.rows, bv.cols);
                    gemm_into(T::one(), g.view().t(), av.view(), T::one(), db, 0);
                }
                Op::LayerNorm {
                    x,
                    gain,
                    xhat,
                    rstd,
                    bias,
                } => {
                    let (rows, cols) = g.shape();
                    let gv = self.value(*gain);
                    let n = T::of(cols as f64);
                    let mut dx = Matrix::zeros(rows, cols);
                    for r in 0..rows {
                        let gr = g.row(r);
                        let xh = &xhat[r * cols..(r + 1) * cols];
                        let mut mean_d = T::zero();
                        let mut mean_dx = T::zero();
                        for c in 0..cols {
                            let d = gr[c] * gv.data[c];
                            mean_d = mean_d + d;
                            mean_dx = mean_dx + d * xh[c];
                        }
                        mean_d = mean_d / n;
                        mean_dx = mean_dx / n;
                        let out = dx.row_mut(r);
                        for c in 0..cols {
                            let d = gr[c] * gv.data[c];
                            out[c] = rstd[r] * (d - mean_d - xh[c] * mean_dx);
                        }
                    }
                    let dg = sink.target(*gain, 1, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            dg.data[c] = dg.data[c] + g.get(r, c) * xhat[r * cols + c];
                        }
                    }
                    let db = sink.target(*bias, 1, cols);
                    for r in 0..rows {
                        for (a, &v) in db.data.iter_mut().zip(g.row(r)) {
                            *a = *a + v;
                        }
                    }
                    sink.add_owned(*x, dx);
                }
                Op::Gelu(x) => {
                    let xv = self.value(*x);
                    let dx = Matrix::from_vec(
                        g.rows,
                        g.cols,
                        g.data
                            .iter()
                            .zip(&xv.data)
                            .map(|(&gg, &z)| gg * kernels::gelu_grad(z))
                            .collect(),
                    );
                    sink.add_owned(*x, dx);
                }
                Op::Dropout { x, mask } => {
                    let dx = Matrix::from_vec(
                        g.rows,
                        g.cols,
                        g.data.iter().zip(mask).map(|(&a, &m)| a * m).collect(),
                    );
                    sink.add_owned(*x, dx);
                }
                Op::Attention { q, k, v, heads, probs } => {
                    let (qv, kv, vv) = (self.value(*q), self.value(*k), self.value(*v));
                    let (dq, dk, dv) = attention_backward(qv, kv, vv, *heads, probs, &g);
                    sink.add_owned(*q, dq);
                    sink.add_owned(*k, dk);
                    sink.add_owned(*v, dv);
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                    count,
                } => {
                    let scale = g.data[0] / T::of(*count as f64);
                    let mut dl = Matrix::zeros(probs.rows, probs.cols);
                    for (r, t) in targets.iter().enumerate() {
                        if let Some(t) = *t {
                            let out = dl.row_mut(r);
                            for (o, &p) in out.iter_mut().zip(probs.row(r)) {
                                *o = p * scale;
                            }
                            out[t] = out[t] - scale;
                        }
                    }
                    sink.add_owned(*logits, dl);
                }
            }
        }
        sink.params
    }
}

struct Sink<T> {
    nodes: Vec<Option<Matrix<T>>>,
    params: Gradients<T>,
}

impl<T: Scalar> Sink<T> {
    fn target(&mut self, v: Var, rows: usize, cols: usize) -> &mut Matrix<T> {
        match v {
            Var::Param(p) => &mut self.params.tensors[p],
            Var::Node(i) => self.nodes[i].get_or_insert_with(|| Matrix::zeros(rows, cols)),
        }
    }

    fn add(&mut self, v: Var, g: &Matrix<T>) {
        self.target(v, g.rows, g.cols).add_assign(g);
    }

    fn add_owned(&mut self, v: Var, g: Matrix<T>) {
        match v {
            Var::Node(i) if self.nodes[i].is_none() => self.nodes[i] = Some(g),
            _ => self.add(v, &g),
        }
    }
}

fn attention_backward<T: Scalar>(
    q: &Matrix<T>,
    k: &Matrix<T>,
    v: &Matrix<T>,
    heads: usize,
    probs: &[T],
    g: &Matrix<T>,
) -> (Matrix<T>, Matrix<T>, Matrix<T>) {
    let (lq, d) = q.shape();
    let lk = k.rows;
    let dh = d / heads;
    let scale = T::one() / T::of(dh as f64).sqrt();
    let mut dq = Matrix::zeros(lq, d);
    let mut dk = Matrix::zeros(lk, d);
    let mut dv = Matrix::zeros(lk, d);
    let mut dp = Matrix::zeros(lq, lk);
    for h in 0..heads {
        let p = &probs[h * lq * lk..(h + 1) * lq * lk];
        let pv = MatView::new(p, lq, lk);
        let gh = g.view().cols(h * dh, dh);
        gemm_into(T::one(), pv.t(), gh, T::zero(), &mut dv, h * dh);
        gemm_into(T::one(), gh, v.view().cols(h * dh, dh).t(), T::zero(), &mut dp, 0);
        // softmax backward in place: dS = P * (dP - <dP, P>)
        for i in 0..lq {
            let pr = &p[i * lk..(i + 1) * lk];
            let row = dp.row_mut(i);
            let dot = row.iter().zip(pr).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            for (x, &pp) in row.iter_mut().zip(pr) {
                *x = pp * (*x - dot);
            }
        }
        gemm_into(scale, dp.view(), k.view().cols(h * dh, dh), T::zero(), &mut dq, h * dh);
        gemm_into(scale, dp.view().t(), q.view().cols(h * dh, dh), T::zero(), &mut dk, h * dh);
    }
    (dq, dk, dv)
}

/// Returns `(mean loss, softmax probabilities, number of scored rows)`.
pub(crate) fn cross_entropy_forward<T: Scalar>(
    logits: &Matrix<T>,
    targets: &[Option<usize>],
) -> (T, Matrix<T>, usize) {
    let mut probs = Matrix::zeros(logits.rows, logits.cols);
    let mut total = T::zero();
    let mut count = 0;
    for (r, t) in targets.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for (p, &x) in probs.row_mut(r).iter_mut().zip(row) {
            *p = (x - max).exp();
            sum = sum + *p;
        }
        for p in probs.row_mut(r) {
            *p = *p / sum;
        }
        if let Some(t) = *t {
            total = total + (max + sum.ln() - row[t]);
            count += 1;
        }
    }
    let loss = if count > 0 { total / T::of(count as f64) } else { T::zero() };
    (loss, probs, count)
}

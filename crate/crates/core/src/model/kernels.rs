//! Forward primitives shared by the autodiff tape and the incremental decoder.

use super::tensor::{gemm_into, matmul, MatView, Matrix, Scalar};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// `x W + b` with `b` a `1 x n` row broadcast over rows.
pub fn linear<T: Scalar>(x: &Matrix<T>, w: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let mut y = matmul(x.view(), w.view());
    add_row(&mut y, b);
    y
}

pub fn add_row<T: Scalar>(y: &mut Matrix<T>, b: &Matrix<T>) {
    debug_assert_eq!(b.rows, 1);
    debug_assert_eq!(b.cols, y.cols);
    for r in 0..y.rows {
        for (v, &bb) in y.row_mut(r).iter_mut().zip(&b.data) {
            *v = *v + bb;
        }
    }
}

pub struct LayerNormOut<T> {
    pub y: Matrix<T>,
    pub xhat: Vec<T>,
    pub rstd: Vec<T>,
}

pub fn layer_norm<T: Scalar>(x: &Matrix<T>, gain: &Matrix<T>, bias: &Matrix<T>) -> LayerNormOut<T> {
    let (rows, cols) = x.shape();
    let n = T::of(cols as f64);
    let eps = T::of(LAYER_NORM_EPS);
    let mut y = Matrix::zeros(rows, cols);
    let mut xhat = vec![T::zero(); rows * cols];
    let mut rstd = vec![T::zero(); rows];
    for r in 0..rows {
        let row = x.row(r);
        let mean = row.iter().copied().sum::<T>() / n;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let rs = T::one() / (var + eps).sqrt();
        rstd[r] = rs;
        for c in 0..cols {
            let h = (row[c] - mean) * rs;
            xhat[r * cols + c] = h;
            y.data[r * cols + c] = h * gain.data[c] + bias.data[c];
        }
    }
    LayerNormOut { y, xhat, rstd }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

/// Tanh approximation of GELU.
pub fn gelu<T: Scalar>(x: T) -> T {
    let half = T::of(0.5);
    let inner = T::of(GELU_C) * (x + T::of(GELU_A) * x * x * x);
    half * x * (T::one() + inner.tanh())
}

pub fn gelu_grad<T: Scalar>(x: T) -> T {
    let half = T::of(0.5);
    let c = T::of(GELU_C);
    let a = T::of(GELU_A);
    let t = (c * (x + a * x * x * x)).tanh();
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::of(3.0) * a * x * x)
}

/// Masking rule for one attention call.
#[derive(Clone, Debug, Default)]
pub struct AttentionMask {
    /// Query `i` may only see keys `<= i + causal_offset`.
    pub causal: bool,
    pub causal_offset: usize,
    /// `false` marks a padded key.
    pub key_valid: Option<Vec<bool>>,
}

impl AttentionMask {
    pub fn allows(&self, q: usize, k: usize) -> bool {
        if self.causal && k > q + self.causal_offset {
            return false;
        }
        self.key_valid.as_ref().map_or(true, |m| m[k])
    }
}

/// Multi-head scaled dot-product attention on already-projected `q`, `k`, `v`.
/// Returns the concatenated head outputs and the row-stochastic attention
/// weights laid out as `[head][query][key]`. A query whose keys are all
/// masked gets zero weights and a zero output.
pub fn attention<T: Scalar>(
    q: &Matrix<T>,
    k: &Matrix<T>,
    v: &Matrix<T>,
    heads: usize,
    mask: &AttentionMask,
) -> (Matrix<T>, Vec<T>) {
    let (lq, d) = q.shape();
    let lk = k.rows;
    let dh = d / heads;
    let scale = T::one() / T::of(dh as f64).sqrt();
    let mut out = Matrix::zeros(lq, d);
    let mut probs = vec![T::zero(); heads * lq * lk];
    let mut scores = Matrix::zeros(lq, lk);
    for h in 0..heads {
        gemm_into(
            scale,
            q.view().cols(h * dh, dh),
            k.view().cols(h * dh, dh).t(),
            T::zero(),
            &mut scores,
            0,
        );
        let p = &mut probs[h * lq * lk..(h + 1) * lq * lk];
        for i in 0..lq {
            softmax_masked(scores.row(i), &mut p[i * lk..(i + 1) * lk], |j| mask.allows(i, j));
        }
        gemm_into(T::one(), MatView::new(p, lq, lk), v.view().cols(h * dh, dh), T::zero(), &mut out, h * dh);
    }
    (out, probs)
}

fn softmax_masked<T: Scalar>(scores: &[T], out: &mut [T], allowed: impl Fn(usize) -> bool) {
    let mut max = T::neg_infinity();
    for (j, &s) in scores.iter().enumerate() {
        if allowed(j) && s > max {
            max = s;
        }
    }
    if max == T::neg_infinity() {
        out.iter_mut().for_each(|o| *o = T::zero());
        return;
    }
    let mut sum = T::zero();
    for (j, &s) in scores.iter().enumerate() {
        let e = if allowed(j) { (s - max).exp() } else { T::zero() };
        out[j] = e;
        sum = sum + e;
    }
    for o in out.iter_mut() {
        *o = *o / sum;
    }
}

/// Row-wise log-softmax, computed in `f64`.
pub fn log_softmax_row<T: Scalar>(row: &[T]) -> Vec<f64> {
    let max = row.iter().map(|x| x.f64()).fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|x| (x.f64() - max).exp()).sum::<f64>().ln();
    row.iter().map(|x| x.f64() - lse).collect()
}

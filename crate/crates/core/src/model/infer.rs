//! Tape-free inference with cached decoder keys and values.

use std::sync::Arc;

use super::beam::StepModel;
use super::kernels::{self, AttentionMask};
use super::params::{AttnIds, FfnIds, NormIds, Parameters};
use super::tensor::{matmul, Matrix, Scalar};
use super::transformer::{embed_encoder_input, encoder_key_mask, gather};
use crate::error::{Error, Result};
use crate::vocab::{EncodedInput, BOS_ID};

fn norm<T: Scalar>(p: &Parameters<T>, x: &Matrix<T>, ids: NormIds) -> Matrix<T> {
    kernels::layer_norm(x, &p.tensors[ids.gain], &p.tensors[ids.bias]).y
}

fn ffn<T: Scalar>(p: &Parameters<T>, x: &Matrix<T>, ids: &FfnIds) -> Matrix<T> {
    let mut h = kernels::linear(x, &p.tensors[ids.w1], &p.tensors[ids.b1]);
    h.data.iter_mut().for_each(|z| *z = kernels::gelu(*z));
    kernels::linear(&h, &p.tensors[ids.w2], &p.tensors[ids.b2])
}

fn project<T: Scalar>(p: &Parameters<T>, x: &Matrix<T>, w: usize, b: usize) -> Matrix<T> {
    kernels::linear(x, &p.tensors[w], &p.tensors[b])
}

/// Final encoder states for one input, eval mode.
pub fn encode<T: Scalar>(p: &Parameters<T>, enc: &EncodedInput) -> Result<Matrix<T>> {
    let mut x = embed_encoder_input(p, enc)?;
    let mask = AttentionMask {
        key_valid: encoder_key_mask(enc),
        ..Default::default()
    };
    let heads = p.config.n_heads;
    for layer in &p.layout.encoder {
        let h = norm(p, &x, layer.norm1);
        let a = &layer.attn;
        let q = project(p, &h, a.wq, a.bq);
        let k = project(p, &h, a.wk, a.bk);
        let v = project(p, &h, a.wv, a.bv);
        let (o, _) = kernels::attention(&q, &k, &v, heads, &mask);
        x.add_assign(&project(p, &o, a.wo, a.bo));
        let h = norm(p, &x, layer.norm2);
        x.add_assign(&ffn(p, &h, &layer.ffn));
    }
    Ok(norm(p, &x, p.layout.encoder_norm))
}

struct Memory<T> {
    cross_k: Vec<Matrix<T>>,
    cross_v: Vec<Matrix<T>>,
    mask: AttentionMask,
}

/// Self-attention cache after feeding `len` tokens.
#[derive(Clone)]
pub struct DecoderState<T> {
    keys: Vec<Matrix<T>>,
    values: Vec<Matrix<T>>,
    len: usize,
}

impl<T> DecoderState<T> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Step-wise decoder over one encoded input.
pub struct IncrementalDecoder<'p, T> {
    params: &'p Parameters<T>,
    memory: Arc<Memory<T>>,
}

impl<'p, T: Scalar> IncrementalDecoder<'p, T> {
    pub fn new(params: &'p Parameters<T>, enc: &EncodedInput) -> Result<Self> {
        let out = encode(params, enc)?;
        let (cross_k, cross_v) = params
            .layout
            .decoder
            .iter()
            .map(|l| {
                let a = &l.cross_attn;
                (project(params, &out, a.wk, a.bk), project(params, &out, a.wv, a.bv))
            })
            .unzip();
        Ok(IncrementalDecoder {
            params,
            memory: Arc::new(Memory {
                cross_k,
                cross_v,
                mask: AttentionMask {
                    key_valid: encoder_key_mask(enc),
                    ..Default::default()
                },
            }),
        })
    }

    fn attend(&self, x: &Matrix<T>, ids: &AttnIds, k: &Matrix<T>, v: &Matrix<T>, mask: &AttentionMask) -> Matrix<T> {
        let p = self.params;
        let q = project(p, x, ids.wq, ids.bq);
        let (o, _) = kernels::attention(&q, k, v, p.config.n_heads, mask);
        project(p, &o, ids.wo, ids.bo)
    }

    /// Feeds one token and returns the new state and the raw logits row.
    pub fn step_logits(&self, state: &DecoderState<T>, token: u32) -> Result<(DecoderState<T>, Vec<T>)> {
        let p = self.params;
        let c = &p.config;
        if token as usize >= c.vocab_size {
            return Err(Error::OutOfRange {
                what: "token embedding",
                index: token as usize,
                size: c.vocab_size,
            });
        }
        if state.len >= c.max_positions {
            return Err(Error::OutOfRange {
                what: "position embedding",
                index: state.len,
                size: c.max_positions,
            });
        }
        let l = &p.layout;
        let mut x = gather(&p.tensors[l.token_embedding], &[token]);
        x.add_assign(&gather(&p.tensors[l.position_embedding], &[state.len as u32]));
        let mut next = state.clone();
        let no_mask = AttentionMask::default();
        for (i, layer) in l.decoder.iter().enumerate() {
            let h = norm(p, &x, layer.norm1);
            let a = &layer.self_attn;
            next.keys[i].push_rows(&project(p, &h, a.wk, a.bk));
            next.values[i].push_rows(&project(p, &h, a.wv, a.bv));
            x.add_assign(&self.attend(&h, a, &next.keys[i], &next.values[i], &no_mask));
            let h = norm(p, &x, layer.norm2);
            x.add_assign(&self.attend(
                &h,
                &layer.cross_attn,
                &self.memory.cross_k[i],
                &self.memory.cross_v[i],
                &self.memory.mask,
            ));
            let h = norm(p, &x, layer.norm3);
            x.add_assign(&ffn(p, &h, &layer.ffn));
        }
        next.len += 1;
        let y = norm(p, &x, l.decoder_norm);
        let logits = matmul(y.view(), p.tensors[l.token_embedding].view().t());
        Ok((next, logits.data))
    }

    pub fn empty_state(&self) -> DecoderState<T> {
        let d = self.params.config.d_model;
        let n = self.params.layout.decoder.len();
        DecoderState {
            keys: (0..n).map(|_| Matrix::zeros(0, d)).collect(),
            values: (0..n).map(|_| Matrix::zeros(0, d)).collect(),
            len: 0,
        }
    }
}

impl<T: Scalar> StepModel for IncrementalDecoder<'_, T> {
    type State = DecoderState<T>;

    fn start(&self) -> Result<(Self::State, Vec<f64>)> {
        self.advance(&self.empty_state(), BOS_ID)
    }

    fn advance(&self, state: &Self::State, token: u32) -> Result<(Self::State, Vec<f64>)> {
        let (s, logits) = self.step_logits(state, token)?;
        Ok((s, kernels::log_softmax_row(&logits)))
    }

    fn max_steps(&self) -> usize {
        self.params.config.max_positions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward, ModelConfig};

    #[test]
    fn incremental_logits_match_full_forward() {
        let c = ModelConfig {
            d_model: 8,
            n_layers: 2,
            n_heads: 2,
            d_ff: 16,
            vocab_size: 13,
            max_positions: 12,
            max_level: 2,
            dropout_rate: 0.0,
            seed: 9,
            structural_embeddings: true,
        };
        let mut p = Parameters::<f64>::init(&c).unwrap();
        // non-zero structural tables so they matter
        p.tensors[p.layout.level_embedding].data.iter_mut().enumerate().for_each(|(i, x)| *x = 0.01 * i as f64);
        let enc = EncodedInput {
            token_ids: vec![4, 8, 5, 9, 6, 10, 0],
            role_ids: vec![0, 0, 1, 1, 2, 2, 2],
            level_ids: vec![0, 0, 0, 0, 1, 1, 2],
        };
        let dec = [BOS_ID, 8, 11, 9, 7];
        let full = forward(&p, &enc, &dec).unwrap();
        let d = IncrementalDecoder::new(&p, &enc).unwrap();
        let mut s = d.empty_state();
        for (t, &tok) in dec.iter().enumerate() {
            let (ns, row) = d.step_logits(&s, tok).unwrap();
            for (a, b) in row.iter().zip(full.row(t)) {
                assert!((a - b).abs() < 1e-12, "position {t}");
            }
            s = ns;
        }
    }
}

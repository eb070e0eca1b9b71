//! Teacher-forced forward and backward passes.

use rand_chacha::ChaCha8Rng;

use super::kernels::AttentionMask;
use super::params::{AttnIds, FfnIds, Gradients, Parameters};
use super::tape::{cross_entropy_forward, Tape, Var};
use super::tensor::{Matrix, Scalar};
use crate::error::{Error, Result};
use crate::vocab::{EncodedInput, PAD_ID};

/// Attention weights of one attention call, laid out `[head][query][key]`.
#[derive(Debug, Clone)]
pub struct AttentionWeights<T> {
    pub heads: usize,
    pub queries: usize,
    pub keys: usize,
    pub weights: Vec<T>,
}

pub struct ForwardTrace<T> {
    pub logits: Matrix<T>,
    /// Encoder self-attention per layer, then decoder self- and cross-attention
    /// interleaved per layer.
    pub attention: Vec<AttentionWeights<T>>,
}

fn check_range(what: &'static str, ids: &[u32], size: usize) -> Result<()> {
    match ids.iter().find(|&&i| i as usize >= size) {
        Some(&i) => Err(Error::OutOfRange {
            what,
            index: i as usize,
            size,
        }),
        None => Ok(()),
    }
}

fn check_inputs<T: Scalar>(params: &Parameters<T>, enc: &EncodedInput, dec_ids: &[u32]) -> Result<()> {
    let c = &params.config;
    if enc.is_empty() {
        return Err(Error::Shape("encoder input is empty".into()));
    }
    if enc.role_ids.len() != enc.len() || enc.level_ids.len() != enc.len() {
        return Err(Error::Shape(format!(
            "encoder streams differ in length: tokens {}, roles {}, levels {}",
            enc.len(),
            enc.role_ids.len(),
            enc.level_ids.len()
        )));
    }
    if dec_ids.is_empty() {
        return Err(Error::Shape("decoder input is empty".into()));
    }
    check_range("token embedding", &enc.token_ids, c.vocab_size)?;
    check_range("token embedding", dec_ids, c.vocab_size)?;
    check_range("role embedding", &enc.role_ids, super::ModelConfig::N_ROLES)?;
    check_range("level embedding", &enc.level_ids, c.max_level + 1)?;
    let longest = enc.len().max(dec_ids.len());
    if longest > c.max_positions {
        return Err(Error::OutOfRange {
            what: "position embedding",
            index: longest - 1,
            size: c.max_positions,
        });
    }
    Ok(())
}

fn ids(v: &[u32]) -> Vec<usize> {
    v.iter().map(|&i| i as usize).collect()
}

/// Token, position, role and level rows summed in that order.
pub fn embed_encoder_input<T: Scalar>(params: &Parameters<T>, enc: &EncodedInput) -> Result<Matrix<T>> {
    check_inputs(params, enc, &[0])?;
    let l = &params.layout;
    let mut x = gather(&params.tensors[l.token_embedding], &enc.token_ids);
    let positions: Vec<u32> = (0..enc.len() as u32).collect();
    x.add_assign(&gather(&params.tensors[l.position_embedding], &positions));
    if params.config.structural_embeddings {
        x.add_assign(&gather(&params.tensors[l.role_embedding], &enc.role_ids));
        x.add_assign(&gather(&params.tensors[l.level_embedding], &enc.level_ids));
    }
    Ok(x)
}

pub(crate) fn gather<T: Scalar>(table: &Matrix<T>, ids: &[u32]) -> Matrix<T> {
    let mut out = Matrix::zeros(ids.len(), table.cols);
    for (r, &id) in ids.iter().enumerate() {
        out.row_mut(r).copy_from_slice(table.row(id as usize));
    }
    out
}

pub(crate) fn encoder_key_mask(enc: &EncodedInput) -> Option<Vec<bool>> {
    if enc.token_ids.contains(&PAD_ID) {
        Some(enc.token_ids.iter().map(|&t| t != PAD_ID).collect())
    } else {
        None
    }
}

struct Builder<'a, 'p, T> {
    tape: Tape<'p, T>,
    rng: Option<&'a mut ChaCha8Rng>,
    rate: f64,
    heads: usize,
}

impl<'a, 'p, T: Scalar> Builder<'a, 'p, T> {
    fn dropout(&mut self, x: Var) -> Var {
        match self.rng.as_deref_mut() {
            Some(rng) => self.tape.dropout(x, self.rate, rng),
            None => x,
        }
    }

    fn attention(&mut self, x: Var, memory: Var, ids: &AttnIds, mask: &AttentionMask) -> Var {
        let q = self.tape.linear(x, ids.wq, ids.bq);
        let k = self.tape.linear(memory, ids.wk, ids.bk);
        let v = self.tape.linear(memory, ids.wv, ids.bv);
        let a = self.tape.attention(q, k, v, self.heads, mask);
        self.tape.linear(a, ids.wo, ids.bo)
    }

    fn ffn(&mut self, x: Var, ids: &FfnIds) -> Var {
        let h = self.tape.linear(x, ids.w1, ids.b1);
        let h = self.tape.gelu(h);
        let h = self.dropout(h);
        self.tape.linear(h, ids.w2, ids.b2)
    }

    fn residual(&mut self, x: Var, sub: Var) -> Var {
        let sub = self.dropout(sub);
        self.tape.add(x, sub)
    }

    fn build(&mut self, enc: &EncodedInput, dec_ids: &[u32]) -> Var {
        let params = self.tape.params();
        let l = &params.layout;

        // encoder
        let mut x = self.tape.gather(l.token_embedding, ids(&enc.token_ids));
        let pos = self.tape.gather(l.position_embedding, (0..enc.len()).collect());
        x = self.tape.add(x, pos);
        if params.config.structural_embeddings {
            let role = self.tape.gather(l.role_embedding, ids(&enc.role_ids));
            x = self.tape.add(x, role);
            let level = self.tape.gather(l.level_embedding, ids(&enc.level_ids));
            x = self.tape.add(x, level);
        }
        x = self.dropout(x);
        let enc_mask = AttentionMask {
            key_valid: encoder_key_mask(enc),
            ..Default::default()
        };
        for layer in &l.encoder {
            let h = self.tape.layer_norm(x, layer.norm1.gain, layer.norm1.bias);
            let a = self.attention(h, h, &layer.attn, &enc_mask);
            x = self.residual(x, a);
            let h = self.tape.layer_norm(x, layer.norm2.gain, layer.norm2.bias);
            let f = self.ffn(h, &layer.ffn);
            x = self.residual(x, f);
        }
        let memory = self.tape.layer_norm(x, l.encoder_norm.gain, l.encoder_norm.bias);

        // decoder
        let mut y = self.tape.gather(l.token_embedding, ids(dec_ids));
        let pos = self.tape.gather(l.position_embedding, (0..dec_ids.len()).collect());
        y = self.tape.add(y, pos);
        y = self.dropout(y);
        let causal = AttentionMask {
            causal: true,
            ..Default::default()
        };
        for layer in &l.decoder {
            let h = self.tape.layer_norm(y, layer.norm1.gain, layer.norm1.bias);
            let a = self.attention(h, h, &layer.self_attn, &causal);
            y = self.residual(y, a);
            let h = self.tape.layer_norm(y, layer.norm2.gain, layer.norm2.bias);
            let a = self.attention(h, memory, &layer.cross_attn, &enc_mask);
            y = self.residual(y, a);
            let h = self.tape.layer_norm(y, layer.norm3.gain, layer.norm3.bias);
            let f = self.ffn(h, &layer.ffn);
            y = self.residual(y, f);
        }
        let y = self.tape.layer_norm(y, l.decoder_norm.gain, l.decoder_norm.bias);
        self.tape.matmul_bt(y, Var::Param(l.token_embedding))
    }
}

fn builder<'a, 'p, T: Scalar>(
    params: &'p Parameters<T>,
    rng: Option<&'a mut ChaCha8Rng>,
) -> Builder<'a, 'p, T> {
    Builder {
        tape: Tape::new(params),
        rate: params.config.dropout_rate,
        heads: params.config.n_heads,
        rng,
    }
}

/// Logits `[dec_len x vocab_size]` with dropout disabled.
pub fn forward<T: Scalar>(params: &Parameters<T>, enc: &EncodedInput, dec_ids: &[u32]) -> Result<Matrix<T>> {
    check_inputs(params, enc, dec_ids)?;
    let mut b = builder(params, None);
    let logits = b.build(enc, dec_ids);
    Ok(b.tape.into_value(logits))
}

/// Like [`forward`], also returning every attention weight matrix.
pub fn forward_traced<T: Scalar>(
    params: &Parameters<T>,
    enc: &EncodedInput,
    dec_ids: &[u32],
) -> Result<ForwardTrace<T>> {
    check_inputs(params, enc, dec_ids)?;
    let mut b = builder(params, None);
    let logits = b.build(enc, dec_ids);
    let attention = b
        .tape
        .attention_weights()
        .into_iter()
        .map(|(heads, queries, keys, w)| AttentionWeights {
            heads,
            queries,
            keys,
            weights: w.to_vec(),
        })
        .collect();
    Ok(ForwardTrace {
        logits: b.tape.value(logits).clone(),
        attention,
    })
}

fn target_slots(targets: &[u32], pad_id: u32) -> Result<Vec<Option<usize>>> {
    let slots: Vec<Option<usize>> = targets
        .iter()
        .map(|&t| (t != pad_id).then_some(t as usize))
        .collect();
    if slots.iter().all(Option::is_none) {
        return Err(Error::Shape("every target position is padding".into()));
    }
    Ok(slots)
}

/// Mean negative log-likelihood over non-pad targets.
pub fn cross_entropy_loss<T: Scalar>(logits: &Matrix<T>, targets: &[u32], pad_id: u32) -> Result<f64> {
    if targets.len() != logits.rows {
        return Err(Error::Shape(format!(
            "{} targets for {} logit rows",
            targets.len(),
            logits.rows
        )));
    }
    check_range("logit columns", targets, logits.cols)?;
    let slots = target_slots(targets, pad_id)?;
    Ok(cross_entropy_forward(logits, &slots).0.f64())
}

/// Splits `[BOS, w.., EOS]` into decoder input and next-token targets.
pub fn teacher_forcing(target: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let n = target.len().saturating_sub(1);
    (target[..n].to_vec(), target[1..].to_vec())
}

/// Loss and parameter gradients. Dropout is applied when `dropout_rng` is
/// given and the configured rate is positive.
pub fn loss_and_gradients<T: Scalar>(
    params: &Parameters<T>,
    enc: &EncodedInput,
    dec_ids: &[u32],
    targets: &[u32],
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Gradients<T>)> {
    check_inputs(params, enc, dec_ids)?;
    if targets.len() != dec_ids.len() {
        return Err(Error::Shape(format!(
            "{} targets for {} decoder positions",
            targets.len(),
            dec_ids.len()
        )));
    }
    check_range("token embedding", targets, params.config.vocab_size)?;
    let slots = target_slots(targets, PAD_ID)?;
    let mut b = builder(params, dropout_rng);
    let logits = b.build(enc, dec_ids);
    let loss = b.tape.cross_entropy(logits, slots);
    let value = b.tape.value(loss).data[0].f64();
    Ok((value, b.tape.backward(loss)))
}

/// Gradients of the eval-mode loss.
pub fn backward<T: Scalar>(
    params: &Parameters<T>,
    enc: &EncodedInput,
    dec_ids: &[u32],
    targets: &[u32],
) -> Result<Gradients<T>> {
    loss_and_gradients(params, enc, dec_ids, targets, None).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn tiny() -> ModelConfig {
        ModelConfig {
            d_model: 8,
            n_layers: 1,
            n_heads: 2,
            d_ff: 12,
            vocab_size: 11,
            max_positions: 16,
            max_level: 3,
            dropout_rate: 0.0,
            seed: 3,
            structural_embeddings: true,
        }
    }

    fn input() -> EncodedInput {
        EncodedInput {
            token_ids: vec![4, 7, 5, 8, 6, 9],
            role_ids: vec![0, 0, 1, 1, 2, 2],
            level_ids: vec![0, 0, 0, 0, 0, 1],
        }
    }

    #[test]
    fn uniform_logits_give_log_vocab() {
        let logits = Matrix::<f64>::zeros(3, 10);
        let loss = cross_entropy_loss(&logits, &[1, 2, 3], PAD_ID).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn all_pad_targets_rejected() {
        let logits = Matrix::<f64>::zeros(2, 5);
        assert!(cross_entropy_loss(&logits, &[PAD_ID, PAD_ID], PAD_ID).is_err());
    }

    #[test]
    fn dominant_logit_gives_near_zero_loss() {
        let mut logits = Matrix::<f64>::zeros(1, 4);
        logits.data[2] = 60.0;
        assert!(cross_entropy_loss(&logits, &[2], PAD_ID).unwrap() < 1e-20);
    }

    #[test]
    fn unused_level_rows_get_zero_gradient() {
        let p = Parameters::<f64>::init(&tiny()).unwrap();
        let g = backward(&p, &input(), &[1, 7, 8], &[7, 8, 2]).unwrap();
        let lvl = &g.tensors[p.layout.level_embedding];
        assert!(lvl.row(2).iter().chain(lvl.row(3)).all(|&x| x == 0.0));
        assert!(lvl.row(0).iter().any(|&x| x != 0.0));
    }

    #[test]
    fn out_of_range_ids_rejected() {
        let p = Parameters::<f32>::init(&tiny()).unwrap();
        let mut enc = input();
        enc.level_ids[0] = 4;
        assert!(matches!(forward(&p, &enc, &[1]), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn traced_softmax_rows_sum_to_one() {
        let p = Parameters::<f64>::init(&tiny()).unwrap();
        let t = forward_traced(&p, &input(), &[1, 7, 8]).unwrap();
        assert_eq!(t.attention.len(), 3);
        for a in &t.attention {
            for row in a.weights.chunks(a.keys) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}

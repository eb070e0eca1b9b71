#![allow(dead_code)]

pub mod graphs;
pub mod metric_cases;
pub mod model_checks;
pub mod oracles;

use g2t_core::model::{backward, cross_entropy_loss, forward, ModelConfig, Parameters};
use g2t_core::EncodedInput;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small model with every table non-zero so all gradient paths are active.
pub fn gradcheck_setup(seed: u64) -> (Parameters<f64>, EncodedInput, Vec<u32>, Vec<u32>) {
    let config = ModelConfig {
        d_model: 16,
        n_layers: 2,
        n_heads: 4,
        d_ff: 24,
        vocab_size: 23,
        max_positions: 16,
        max_level: 4,
        dropout_rate: 0.0,
        seed,
        structural_embeddings: true,
    };
    let mut p = Parameters::<f64>::init(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    // larger weights than the init scale, so nonlinearities are exercised
    for (name, t) in p.names.iter().zip(p.tensors.iter_mut()) {
        let s = if name.ends_with("gain") { 0.3 } else { 0.5 };
        for x in &mut t.data {
            *x += rng.gen_range(-s..s);
        }
    }
    let enc = EncodedInput {
        token_ids: vec![4, 9, 10, 5, 11, 6, 12, 13, 4, 12, 5, 14, 6, 15],
        role_ids: vec![0, 0, 0, 1, 1, 2, 2, 2, 0, 0, 1, 1, 2, 2],
        level_ids: vec![0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2],
    };
    let dec = vec![1, 9, 10, 16, 17, 12, 18];
    let tgt = vec![9, 10, 16, 17, 12, 18, 2];
    (p, enc, dec, tgt)
}

pub fn loss(p: &Parameters<f64>, enc: &EncodedInput, dec: &[u32], tgt: &[u32]) -> f64 {
    cross_entropy_loss(&forward(p, enc, dec).unwrap(), tgt, 0).unwrap()
}

pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst: String,
    pub families: Vec<String>,
}

/// Relative error is `|a - n| / max(|a|, |n|, floor)`. The floor keeps
/// coordinates whose gradient is zero by symmetry (key biases, by softmax
/// shift invariance) from dividing finite-difference noise by zero.
pub const REL_FLOOR: f64 = 1e-6;

/// Central differences on `per_tensor` random coordinates of every tensor.
pub fn gradient_check(seed: u64, per_tensor: usize, h: f64) -> GradCheck {
    let (mut p, enc, dec, tgt) = gradcheck_setup(seed);
    let g = backward(&p, &enc, &dec, &tgt).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradCheck {
        checked: 0,
        max_rel_error: 0.0,
        worst: String::new(),
        families: Vec::new(),
    };
    for i in 0..p.tensors.len() {
        let name = p.names[i].clone();
        let n = p.tensors[i].len();
        for _ in 0..per_tensor {
            // level rows beyond those used have exactly zero gradient; sample used rows
            let j = if name == "level_embedding" {
                rng.gen_range(0..3 * p.tensors[i].cols)
            } else {
                rng.gen_range(0..n)
            };
            let orig = p.tensors[i].data[j];
            p.tensors[i].data[j] = orig + h;
            let lp = loss(&p, &enc, &dec, &tgt);
            p.tensors[i].data[j] = orig - h;
            let lm = loss(&p, &enc, &dec, &tgt);
            p.tensors[i].data[j] = orig;
            let num = (lp - lm) / (2.0 * h);
            let ana = g.tensors[i].data[j];
            let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(REL_FLOOR);
            if rel > out.max_rel_error {
                out.max_rel_error = rel;
                out.worst = format!("{name}[{j}]: analytic {ana:e}, numeric {num:e}");
            }
            out.checked += 1;
        }
        let family = name.rsplit('.').next().unwrap().to_string();
        if !out.families.contains(&family) {
            out.families.push(family);
        }
    }
    out
}

//! Model-level checks shared by the model tests and the acceptance run.

use g2t_core::data::{generate_synthetic, SynthConfig};
use g2t_core::model::{adam_step, forward, AdamConfig, AdamState, ModelConfig, Parameters};
use g2t_core::train::{batch_gradient, prepare_pairs, TrainingPair};
use g2t_core::vocab::build_vocab;
use g2t_core::EncodedInput;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_input(rng: &mut ChaCha8Rng, config: &ModelConfig) -> (EncodedInput, Vec<u32>) {
    let n = rng.gen_range(1..=40);
    let m = rng.gen_range(1..=30);
    let v = config.vocab_size as u32;
    let enc = EncodedInput {
        token_ids: (0..n).map(|_| rng.gen_range(1..v)).collect(),
        role_ids: (0..n).map(|_| rng.gen_range(0..3)).collect(),
        level_ids: (0..n).map(|_| rng.gen_range(0..=config.max_level as u32)).collect(),
    };
    let dec = (0..m).map(|_| rng.gen_range(1..v)).collect();
    (enc, dec)
}

/// Number of inputs, out of `n`, on which a freshly initialized model (zero
/// role and level tables) and the same model without those tables produce
/// logits that differ in any bit.
pub fn structural_noop_mismatches(n: usize, seed: u64) -> usize {
    let extended = ModelConfig {
        vocab_size: 300,
        seed,
        ..ModelConfig::default()
    };
    let plain = ModelConfig {
        structural_embeddings: false,
        ..extended.clone()
    };
    let pe = Parameters::<f32>::init(&extended).unwrap();
    let pp = Parameters::<f32>::init(&plain).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .filter(|_| {
            let (enc, dec) = random_input(&mut rng, &extended);
            let a = forward(&pe, &enc, &dec).unwrap();
            let b = forward(&pp, &enc, &dec).unwrap();
            a.data.iter().map(|x| x.to_bits()).ne(b.data.iter().map(|x| x.to_bits()))
        })
        .count()
}

pub const OVERFIT_STEPS: usize = 50;
pub const OVERFIT_LR: f64 = 3e-3;
pub const OVERFIT_BATCH: usize = 2;

/// Loss before and after `OVERFIT_STEPS` Adam steps on one fixed batch: the
/// `OVERFIT_BATCH` shortest pairs of the default synthetic corpus, default
/// model, no dropout.
pub fn overfit_losses(model_seed: u64) -> (f64, f64) {
    let (clean, _) = generate_synthetic(&SynthConfig::default()).unwrap();
    let vocab = build_vocab(&[&clean], 1).unwrap();
    let model = ModelConfig {
        seed: model_seed,
        ..ModelConfig::default()
    }
    .with_vocab_size(vocab.len());
    let mut pairs = prepare_pairs(&clean, &vocab, &model, 100, 100).unwrap();
    pairs.sort_by_key(|p| p.targets.len());
    let batch: Vec<&TrainingPair> = pairs[..OVERFIT_BATCH].iter().collect();
    let mut params = Parameters::<f32>::init(&model).unwrap();
    let mut state = AdamState::new(&params);
    let config = AdamConfig {
        lr: OVERFIT_LR,
        ..AdamConfig::default()
    };
    let initial = batch_gradient(&params, &batch, None).unwrap().0;
    for _ in 0..OVERFIT_STEPS {
        let (_, g) = batch_gradient(&params, &batch, None).unwrap();
        adam_step(&mut params, &g, &mut state, &config).unwrap();
    }
    (initial, batch_gradient(&params, &batch, None).unwrap().0)
}

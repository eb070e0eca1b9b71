//! Encoder-decoder transformer with role and tree-level input embeddings.

pub mod adam;
pub mod beam;
pub mod checkpoint;
pub mod infer;
pub mod kernels;
pub mod params;
pub mod tape;
pub mod tensor;
pub mod transformer;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linearize::{SegmentRole, DEFAULT_MAX_LEVEL};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use beam::{beam_search, beam_search_decode, greedy_decode, BeamConfig, StepModel};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use params::{Gradients, Parameters};
pub use tensor::{Matrix, Scalar};
pub use transformer::{backward, cross_entropy_loss, embed_encoder_input, forward, loss_and_gradients};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_positions: usize,
    pub max_level: usize,
    pub dropout_rate: f64,
    pub seed: u64,
    /// Adds role and level embeddings to the encoder input. When false the
    /// tables still exist but are never read.
    pub structural_embeddings: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            d_ff: 128,
            vocab_size: 7,
            max_positions: 128,
            max_level: DEFAULT_MAX_LEVEL,
            dropout_rate: 0.1,
            seed: 0,
            structural_embeddings: true,
        }
    }
}

impl ModelConfig {
    pub const N_ROLES: usize = SegmentRole::COUNT;

    pub fn with_vocab_size(mut self, vocab_size: usize) -> Self {
        self.vocab_size = vocab_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("d_model", self.d_model),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("vocab_size", self.vocab_size),
            ("max_positions", self.max_positions),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout_rate {} not in [0, 1)", self.dropout_rate)));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// `key=value` lines in a fixed key order.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.kv_pairs() {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    fn kv_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("d_model", self.d_model.to_string()),
            ("n_layers", self.n_layers.to_string()),
            ("n_heads", self.n_heads.to_string()),
            ("d_ff", self.d_ff.to_string()),
            ("vocab_size", self.vocab_size.to_string()),
            ("max_positions", self.max_positions.to_string()),
            ("n_roles", Self::N_ROLES.to_string()),
            ("max_level", self.max_level.to_string()),
            // bit pattern keeps the round trip exact
            ("dropout_rate", format!("{:#018x}", self.dropout_rate.to_bits())),
            ("seed", self.seed.to_string()),
            ("structural_embeddings", self.structural_embeddings.to_string()),
        ]
    }

    /// Parses the `to_kv` form. Unknown keys are ignored; every known key is
    /// required.
    pub fn from_kv(map: &BTreeMap<String, String>) -> Result<Self> {
        fn get<'a>(map: &'a BTreeMap<String, String>, k: &str) -> Result<&'a str> {
            map.get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Config(format!("missing `{k}`")))
        }
        fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, k: &str) -> Result<T> {
            get(map, k)?
                .parse()
                .map_err(|_| Error::Config(format!("bad value for `{k}`")))
        }
        let n_roles: usize = num(map, "n_roles")?;
        if n_roles != Self::N_ROLES {
            return Err(Error::Config(format!("n_roles must be {}, found {n_roles}", Self::N_ROLES)));
        }
        let bits = get(map, "dropout_rate")?;
        let bits = u64::from_str_radix(bits.trim_start_matches("0x"), 16)
            .map_err(|_| Error::Config("bad value for `dropout_rate`".into()))?;
        let config = ModelConfig {
            d_model: num(map, "d_model")?,
            n_layers: num(map, "n_layers")?,
            n_heads: num(map, "n_heads")?,
            d_ff: num(map, "d_ff")?,
            vocab_size: num(map, "vocab_size")?,
            max_positions: num(map, "max_positions")?,
            max_level: num(map, "max_level")?,
            dropout_rate: f64::from_bits(bits),
            seed: num(map, "seed")?,
            structural_embeddings: num(map, "structural_embeddings")?,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses `key=value` lines, skipping blanks.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected key=value, found `{line}`"),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::tensor::{Matrix, Scalar};
use super::ModelConfig;
use crate::error::{Error, Result};

pub type ParamId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    Normal,
    Zeros,
    Ones,
}

#[derive(Debug, Clone, Copy)]
pub struct NormIds {
    pub gain: ParamId,
    pub bias: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct AttnIds {
    pub wq: ParamId,
    pub bq: ParamId,
    pub wk: ParamId,
    pub bk: ParamId,
    pub wv: ParamId,
    pub bv: ParamId,
    pub wo: ParamId,
    pub bo: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct FfnIds {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct EncoderLayerIds {
    pub norm1: NormIds,
    pub attn: AttnIds,
    pub norm2: NormIds,
    pub ffn: FfnIds,
}

#[derive(Debug, Clone, Copy)]
pub struct DecoderLayerIds {
    pub norm1: NormIds,
    pub self_attn: AttnIds,
    pub norm2: NormIds,
    pub cross_attn: AttnIds,
    pub norm3: NormIds,
    pub ffn: FfnIds,
}

/// Where each named tensor lives in [`Parameters::tensors`].
#[derive(Debug, Clone)]
pub struct Layout {
    pub token_embedding: ParamId,
    pub position_embedding: ParamId,
    pub role_embedding: ParamId,
    pub level_embedding: ParamId,
    pub encoder: Vec<EncoderLayerIds>,
    pub encoder_norm: NormIds,
    pub decoder: Vec<DecoderLayerIds>,
    pub decoder_norm: NormIds,
}

/// Name, shape and initializer of every tensor, in storage order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    init: Init,
}

struct Builder {
    specs: Vec<TensorSpec>,
}

impl Builder {
    fn add(&mut self, name: String, rows: usize, cols: usize, init: Init) -> ParamId {
        self.specs.push(TensorSpec { name, rows, cols, init });
        self.specs.len() - 1
    }

    fn norm(&mut self, prefix: &str, d: usize) -> NormIds {
        NormIds {
            gain: self.add(format!("{prefix}.gain"), 1, d, Init::Ones),
            bias: self.add(format!("{prefix}.bias"), 1, d, Init::Zeros),
        }
    }

    fn attn(&mut self, prefix: &str, d: usize) -> AttnIds {
        let mut pair = |n: &str| {
            (
                self.add(format!("{prefix}.w_{n}"), d, d, Init::Normal),
                self.add(format!("{prefix}.b_{n}"), 1, d, Init::Zeros),
            )
        };
        let (wq, bq) = pair("q");
        let (wk, bk) = pair("k");
        let (wv, bv) = pair("v");
        let (wo, bo) = pair("o");
        AttnIds { wq, bq, wk, bk, wv, bv, wo, bo }
    }

    fn ffn(&mut self, prefix: &str, d: usize, ff: usize) -> FfnIds {
        FfnIds {
            w1: self.add(format!("{prefix}.w_in"), d, ff, Init::Normal),
            b1: self.add(format!("{prefix}.b_in"), 1, ff, Init::Zeros),
            w2: self.add(format!("{prefix}.w_out"), ff, d, Init::Normal),
            b2: self.add(format!("{prefix}.b_out"), 1, d, Init::Zeros),
        }
    }
}

pub fn layout(config: &ModelConfig) -> (Layout, Vec<TensorSpec>) {
    let d = config.d_model;
    let mut b = Builder { specs: Vec::new() };
    let token_embedding = b.add("token_embedding".into(), config.vocab_size, d, Init::Normal);
    let position_embedding = b.add("position_embedding".into(), config.max_positions, d, Init::Normal);
    let role_embedding = b.add("role_embedding".into(), ModelConfig::N_ROLES, d, Init::Zeros);
    let level_embedding = b.add("level_embedding".into(), config.max_level + 1, d, Init::Zeros);
    let encoder = (0..config.n_layers)
        .map(|l| {
            let p = format!("encoder.{l}");
            EncoderLayerIds {
                norm1: b.norm(&format!("{p}.norm1"), d),
                attn: b.attn(&format!("{p}.self_attn"), d),
                norm2: b.norm(&format!("{p}.norm2"), d),
                ffn: b.ffn(&format!("{p}.ffn"), d, config.d_ff),
            }
        })
        .collect();
    let encoder_norm = b.norm("encoder.final_norm", d);
    let decoder = (0..config.n_layers)
        .map(|l| {
            let p = format!("decoder.{l}");
            DecoderLayerIds {
                norm1: b.norm(&format!("{p}.norm1"), d),
                self_attn: b.attn(&format!("{p}.self_attn"), d),
                norm2: b.norm(&format!("{p}.norm2"), d),
                cross_attn: b.attn(&format!("{p}.cross_attn"), d),
                norm3: b.norm(&format!("{p}.norm3"), d),
                ffn: b.ffn(&format!("{p}.ffn"), d, config.d_ff),
            }
        })
        .collect();
    let decoder_norm = b.norm("decoder.final_norm", d);
    (
        Layout {
            token_embedding,
            position_embedding,
            role_embedding,
            level_embedding,
            encoder,
            encoder_norm,
            decoder,
            decoder_norm,
        },
        b.specs,
    )
}

/// All model weights. The output projection is tied to `token_embedding`.
#[derive(Debug, Clone)]
pub struct Parameters<T> {
    pub config: ModelConfig,
    pub layout: Layout,
    pub names: Vec<String>,
    pub tensors: Vec<Matrix<T>>,
}

impl<T: Scalar> Parameters<T> {
    /// Normal(0, 0.02) weights from the config seed; norm gains 1; biases and
    /// the role/level tables 0.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let (layout, specs) = layout(config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0f64, 0.02).expect("valid normal");
        let tensors = specs
            .iter()
            .map(|s| {
                let n = s.rows * s.cols;
                let data = match s.init {
                    Init::Normal => (0..n).map(|_| T::of(normal.sample(&mut rng))).collect(),
                    Init::Zeros => vec![T::zero(); n],
                    Init::Ones => vec![T::one(); n],
                };
                Matrix::from_vec(s.rows, s.cols, data)
            })
            .collect();
        Ok(Parameters {
            config: config.clone(),
            layout,
            names: specs.into_iter().map(|s| s.name).collect(),
            tensors,
        })
    }

    /// Assembles parameters from named tensors, checking names and shapes
    /// against the layout implied by `config`.
    pub fn from_named(config: &ModelConfig, named: Vec<(String, Matrix<T>)>) -> Result<Self> {
        config.validate()?;
        let (layout, specs) = layout(config);
        if named.len() != specs.len() {
            return Err(Error::Shape(format!(
                "expected {} tensors, found {}",
                specs.len(),
                named.len()
            )));
        }
        let mut tensors = Vec::with_capacity(specs.len());
        for (spec, (name, m)) in specs.iter().zip(named) {
            if spec.name != name {
                return Err(Error::Shape(format!("expected tensor `{}`, found `{name}`", spec.name)));
            }
            if m.shape() != (spec.rows, spec.cols) {
                return Err(Error::Shape(format!(
                    "`{name}` has shape {:?}, expected {:?}",
                    m.shape(),
                    (spec.rows, spec.cols)
                )));
            }
            tensors.push(m);
        }
        Ok(Parameters {
            config: config.clone(),
            layout,
            names: specs.into_iter().map(|s| s.name).collect(),
            tensors,
        })
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Matrix::len).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Matrix<T>> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Matrix<T>> {
        self.names.iter().position(|n| n == name).map(|i| &mut self.tensors[i])
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Matrix::all_finite)
    }

    pub fn cast<U: Scalar>(&self) -> Parameters<U> {
        Parameters {
            config: self.config.clone(),
            layout: self.layout.clone(),
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Matrix::cast).collect(),
        }
    }

    pub fn zeros_like(&self) -> Gradients<T> {
        Gradients {
            tensors: self.tensors.iter().map(|m| Matrix::zeros(m.rows, m.cols)).collect(),
        }
    }
}

/// Gradients aligned index-for-index with [`Parameters::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Matrix<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.tensors {
            a.scale(s);
        }
    }
}

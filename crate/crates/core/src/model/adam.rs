use serde::{Deserialize, Serialize};

use super::params::{Gradients, Parameters};
use super::tensor::{Matrix, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 3e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Matrix<T>>,
    pub v: Vec<Matrix<T>>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &Parameters<T>) -> Self {
        AdamState {
            m: params.zeros_like().tensors,
            v: params.zeros_like().tensors,
            t: 0,
        }
    }

    fn check_shapes(&self, params: &Parameters<T>) -> Result<()> {
        for (i, p) in params.tensors.iter().enumerate() {
            let (m, v) = (self.m.get(i), self.v.get(i));
            if m.map(Matrix::shape) != Some(p.shape()) || v.map(Matrix::shape) != Some(p.shape()) {
                return Err(Error::Shape(format!("optimizer moments for `{}`", params.names[i])));
            }
        }
        if self.m.len() != params.tensors.len() || self.v.len() != params.tensors.len() {
            return Err(Error::Shape("optimizer state has extra tensors".into()));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update. Nothing is modified when any gradient is
/// non-finite.
pub fn adam_step<T: Scalar>(
    params: &mut Parameters<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    config: &AdamConfig,
) -> Result<()> {
    state.check_shapes(params)?;
    if grads.tensors.len() != params.tensors.len() {
        return Err(Error::Shape(format!(
            "{} gradients for {} parameters",
            grads.tensors.len(),
            params.tensors.len()
        )));
    }
    for (i, g) in grads.tensors.iter().enumerate() {
        if g.shape() != params.tensors[i].shape() {
            return Err(Error::Shape(format!("gradient for `{}`", params.names[i])));
        }
        if !g.all_finite() {
            return Err(Error::NonFinite {
                tensor: params.names[i].clone(),
            });
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::of(config.beta1), T::of(config.beta2));
    let c1 = T::one() - T::of(config.beta1.powi(t));
    let c2 = T::one() - T::of(config.beta2.powi(t));
    let (lr, eps) = (T::of(config.lr), T::of(config.eps));
    for (i, p) in params.tensors.iter_mut().enumerate() {
        let g = &grads.tensors[i].data;
        let m = &mut state.m[i].data;
        let v = &mut state.v[i].data;
        for j in 0..p.data.len() {
            m[j] = b1 * m[j] + (T::one() - b1) * g[j];
            v[j] = b2 * v[j] + (T::one() - b2) * g[j] * g[j];
            let mhat = m[j] / c1;
            let vhat = v[j] / c2;
            p.data[j] = p.data[j] - lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn tiny() -> Parameters<f64> {
        let c = ModelConfig {
            d_model: 4,
            n_layers: 1,
            n_heads: 1,
            d_ff: 4,
            vocab_size: 8,
            max_positions: 4,
            max_level: 1,
            ..Default::default()
        };
        Parameters::init(&c).unwrap()
    }

    #[test]
    fn zero_gradients_leave_parameters() {
        let mut p = tiny();
        let before = p.tensors.clone();
        let mut s = AdamState::new(&p);
        let g = p.zeros_like();
        adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p.tensors, before);
        assert!(s.m.iter().chain(&s.v).all(|m| m.data.iter().all(|&x| x == 0.0)));
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_on_unit_gradient() {
        let mut p = tiny();
        let before = p.tensors[0].data[0];
        let mut s = AdamState::new(&p);
        let mut g = p.zeros_like();
        g.tensors[0].data[0] = 1.0;
        let cfg = AdamConfig::default();
        adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        let expected = -cfg.lr / (1.0 + cfg.eps);
        assert!((p.tensors[0].data[0] - before - expected).abs() < 1e-18);
    }

    #[test]
    fn non_finite_gradient_names_tensor_and_aborts() {
        let mut p = tiny();
        let before = p.tensors.clone();
        let mut s = AdamState::new(&p);
        let mut g = p.zeros_like();
        g.tensors[0].data[0] = 1.0;
        g.tensors[2].data[1] = f64::NAN;
        let err = adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { ref tensor } if tensor == "role_embedding"));
        assert_eq!(p.tensors, before);
        assert_eq!(s.t, 0);
    }
}

//! Paired t-test over metric scores on random corpus subsets.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub degrees_of_freedom: usize,
    pub n_subsets: usize,
    /// `(score_a, score_b)` per subset.
    pub pairs: Vec<(f64, f64)>,
}

/// `k` subsets of `round(fraction * corpus_size)` distinct indices each,
/// sorted ascending.
pub fn sample_subsets(corpus_size: usize, k: usize, fraction: f64, seed: u64) -> Result<Vec<Vec<usize>>> {
    if corpus_size < 2 {
        return Err(Error::Config(format!("corpus size {corpus_size} is below 2")));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("subset fraction {fraction} not in (0, 1]")));
    }
    let size = ((fraction * corpus_size as f64).round() as usize).clamp(1, corpus_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..k)
        .map(|_| {
            let mut idx = sample(&mut rng, corpus_size, size).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect())
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: usize) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

pub fn paired_t_test(scores_a: &[f64], scores_b: &[f64]) -> Result<SignificanceResult> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::Metric(format!(
            "paired samples differ in length: {} and {}",
            scores_a.len(),
            scores_b.len()
        )));
    }
    let k = scores_a.len();
    if k < 2 {
        return Err(Error::Metric(format!("paired t-test needs at least 2 pairs, got {k}")));
    }
    let d: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / k as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    let sd = var.sqrt();
    let t = if sd == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(mean)
        }
    } else {
        mean * (k as f64).sqrt() / sd
    };
    Ok(SignificanceResult {
        t_statistic: t,
        p_value: two_sided_p(t, k - 1),
        degrees_of_freedom: k - 1,
        n_subsets: k,
        pairs: scores_a.iter().copied().zip(scores_b.iter().copied()).collect(),
    })
}

//! Length-normalized beam search over any step-wise scorer.

use std::cmp::Ordering;

use super::infer::IncrementalDecoder;
use super::params::Parameters;
use super::tensor::Scalar;
use crate::error::{Error, Result};
use crate::vocab::{EncodedInput, DEFAULT_MAX_TARGET_LENGTH, EOS_ID};

pub const MAX_BEAM_SIZE: usize = 8;

/// A left-to-right model exposing next-token log-probabilities.
pub trait StepModel {
    type State: Clone;

    /// State after the start symbol and the distribution of the first token.
    fn start(&self) -> Result<(Self::State, Vec<f64>)>;

    fn advance(&self, state: &Self::State, token: u32) -> Result<(Self::State, Vec<f64>)>;

    /// Upper bound on the number of tokens the model can consume.
    fn max_steps(&self) -> usize {
        usize::MAX
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub max_len: usize,
    pub length_penalty: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_size: 5,
            max_len: DEFAULT_MAX_TARGET_LENGTH,
            length_penalty: 1.0,
        }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_BEAM_SIZE).contains(&self.beam_size) {
            return Err(Error::Config(format!(
                "beam size {} outside [1, {MAX_BEAM_SIZE}]",
                self.beam_size
            )));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max target length must be at least 1".into()));
        }
        Ok(())
    }
}

/// A finished output. `tokens` excludes the start and end symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<u32>,
    pub log_prob: f64,
    /// Normalized length: content tokens plus one for the end symbol when it
    /// was generated.
    pub length: usize,
    pub score: f64,
}

struct Alive<S> {
    tokens: Vec<u32>,
    log_prob: f64,
    state: S,
    next: Vec<f64>,
}

fn rank(a: &(f64, u32, usize), b: &(f64, u32, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
}

pub fn beam_search<M: StepModel>(model: &M, config: &BeamConfig) -> Result<Hypothesis> {
    config.validate()?;
    let k = config.beam_size;
    let max_len = config.max_len.min(model.max_steps());
    let normalize = |log_prob: f64, length: usize| log_prob / (length.max(1) as f64).powf(config.length_penalty);
    let finish = |tokens: Vec<u32>, log_prob: f64, length: usize| Hypothesis {
        score: normalize(log_prob, length),
        tokens,
        log_prob,
        length,
    };

    let (state, next) = model.start()?;
    let mut alive = vec![Alive {
        tokens: Vec::new(),
        log_prob: 0.0,
        state,
        next,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    while !alive.is_empty() && finished.len() < k {
        let mut cands: Vec<(f64, u32, usize)> = Vec::new();
        for (b, h) in alive.iter().enumerate() {
            cands.extend(h.next.iter().enumerate().map(|(v, &lp)| (h.log_prob + lp, v as u32, b)));
        }
        // at most k end symbols can precede the k-th continuation
        let keep = (2 * k).min(cands.len());
        if keep < cands.len() {
            cands.select_nth_unstable_by(keep, rank);
            cands.truncate(keep);
        }
        cands.sort_by(rank);

        let mut next_alive = Vec::with_capacity(k);
        let mut slots = 0;
        for (r, &(score, token, b)) in cands.iter().enumerate() {
            let parent = &alive[b];
            if token == EOS_ID {
                if r < k {
                    finished.push(finish(parent.tokens.clone(), score, parent.tokens.len() + 1));
                }
                continue;
            }
            if slots == k {
                continue;
            }
            slots += 1;
            let mut tokens = parent.tokens.clone();
            tokens.push(token);
            if tokens.len() >= max_len {
                let n = tokens.len();
                finished.push(finish(tokens, score, n));
            } else {
                let (state, next) = model.advance(&parent.state, token)?;
                next_alive.push(Alive {
                    tokens,
                    log_prob: score,
                    state,
                    next,
                });
            }
        }
        alive = next_alive;
    }

    let mut best: Option<Hypothesis> = None;
    for h in finished {
        if best.as_ref().map_or(true, |b| h.score > b.score) {
            best = Some(h);
        }
    }
    best.ok_or_else(|| Error::Config("beam search produced no hypothesis".into()))
}

/// Argmax decoding; ties go to the lowest token id.
pub fn greedy_decode<M: StepModel>(model: &M, max_len: usize) -> Result<Vec<u32>> {
    let max_len = max_len.min(model.max_steps());
    let (mut state, mut next) = model.start()?;
    let mut out = Vec::new();
    while out.len() < max_len {
        let mut best = 0;
        for (v, &lp) in next.iter().enumerate() {
            if lp > next[best] {
                best = v;
            }
        }
        let token = best as u32;
        if token == EOS_ID {
            break;
        }
        out.push(token);
        if out.len() == max_len {
            break;
        }
        (state, next) = model.advance(&state, token)?;
    }
    Ok(out)
}

/// Decodes one encoded input with the transformer.
pub fn beam_search_decode<T: Scalar>(
    params: &Parameters<T>,
    enc: &EncodedInput,
    config: &BeamConfig,
) -> Result<Vec<u32>> {
    config.validate()?;
    let decoder = IncrementalDecoder::new(params, enc)?;
    Ok(beam_search(&decoder, config)?.tokens)
}

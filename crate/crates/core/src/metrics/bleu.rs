//! Corpus BLEU in the multi-bleu convention.

use std::collections::HashMap;

use super::tokenize;
use crate::error::{Error, Result};

/// Sufficient statistics summed over a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BleuStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    fn new(max_n: usize) -> Self {
        BleuStats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            hyp_len: 0,
            ref_len: 0,
        }
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..self.matches.len() {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// BLEU in percent; zero when any order has no match.
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches.iter().any(|&m| m == 0) {
            return 0.0;
        }
        let n = self.matches.len() as f64;
        let log_prec: f64 = self
            .matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| (m as f64 / t as f64).ln())
            .sum::<f64>()
            / n;
        let bp = if self.hyp_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        };
        100.0 * bp * log_prec.exp()
    }
}

fn ngram_counts<'t, 'a>(tokens: &'t [&'a str], n: usize) -> HashMap<&'t [&'a str], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Statistics of one sentence against its references (already tokenized).
pub fn sentence_stats(hyp: &[&str], refs: &[Vec<&str>], max_n: usize) -> BleuStats {
    let mut s = BleuStats::new(max_n);
    s.hyp_len = hyp.len() as u64;
    // closest reference length, ties to the shorter
    let mut best: Option<usize> = None;
    for r in refs {
        let take = match best {
            None => true,
            Some(b) => {
                let (d, db) = (r.len().abs_diff(hyp.len()), b.abs_diff(hyp.len()));
                d < db || (d == db && r.len() < b)
            }
        };
        if take {
            best = Some(r.len());
        }
    }
    s.ref_len = best.unwrap_or(0) as u64;
    for n in 1..=max_n {
        let hc = ngram_counts(hyp, n);
        let mut max_ref: HashMap<&[&str], u64> = HashMap::new();
        for r in refs {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        s.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
        s.matches[n - 1] = hc
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
    }
    s
}

pub fn corpus_stats<S: AsRef<str>, R: AsRef<str>>(
    predictions: &[S],
    references: &[Vec<R>],
    max_n: usize,
) -> Result<BleuStats> {
    if predictions.len() != references.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} reference sets",
            predictions.len(),
            references.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Metric("no predictions".into()));
    }
    if max_n == 0 {
        return Err(Error::Metric("max n-gram order must be at least 1".into()));
    }
    let mut total = BleuStats::new(max_n);
    for (i, (p, refs)) in predictions.iter().zip(references).enumerate() {
        if refs.is_empty() {
            return Err(Error::Metric(format!("example {i} has no references")));
        }
        let p = tokenize(p.as_ref());
        let refs: Vec<String> = refs.iter().map(|r| r.as_ref().to_lowercase()).collect();
        let refs: Vec<Vec<&str>> = refs.iter().map(|r| r.split_whitespace().collect()).collect();
        let hyp: Vec<&str> = p.iter().map(String::as_str).collect();
        total.add(&sentence_stats(&hyp, &refs, max_n));
    }
    Ok(total)
}

/// Corpus BLEU (percent) with n-gram orders `1..=max_n`.
pub fn corpus_bleu_n<S: AsRef<str>, R: AsRef<str>>(
    predictions: &[S],
    references: &[Vec<R>],
    max_n: usize,
) -> Result<f64> {
    Ok(corpus_stats(predictions, references, max_n)?.score())
}

pub fn corpus_bleu<S: AsRef<str>, R: AsRef<str>>(predictions: &[S], references: &[Vec<R>]) -> Result<f64> {
    corpus_bleu_n(predictions, references, 4)
}

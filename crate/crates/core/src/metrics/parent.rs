//! PARENT with the word-overlap entailment model.
//!
//! Each triple contributes its subject and object tokens to the table
//! vocabulary. Per reference, n-gram precision credits a predicted n-gram by
//! its reference match or, failing that, by its entailment probability;
//! recall blends reference recall with table recall geometrically. The
//! best-F reference is kept per example and corpus scores are per-example
//! means.

use std::collections::{HashMap, HashSet};

use super::tokenize;
use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParentConfig {
    pub lambda: f64,
    pub smoothing: f64,
    pub max_order: usize,
    /// Added to numerator and denominator of the mention probability.
    pub mention_smoothing: f64,
}

impl Default for ParentConfig {
    fn default() -> Self {
        ParentConfig {
            lambda: 0.5,
            smoothing: 1e-5,
            max_order: 4,
            mention_smoothing: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct ParentScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// A triple as (head tokens, tail tokens).
type Entry = (Vec<String>, Vec<String>);

fn table_entries(graph: &KnowledgeGraph) -> Vec<Entry> {
    graph
        .iter()
        .map(|t| (tokenize(&t.subject), tokenize(&t.object)))
        .collect()
}

/// N-gram counts in first-occurrence order, so sums are reproducible.
struct Counts<'a> {
    order: Vec<(&'a [String], f64)>,
    index: HashMap<&'a [String], usize>,
}

impl<'a> Counts<'a> {
    fn new(tokens: &'a [String], n: usize) -> Self {
        let mut c = Counts {
            order: Vec::new(),
            index: HashMap::new(),
        };
        if tokens.len() >= n {
            for w in tokens.windows(n) {
                match c.index.get(w) {
                    Some(&i) => c.order[i].1 += 1.0,
                    None => {
                        c.index.insert(w, c.order.len());
                        c.order.push((w, 1.0));
                    }
                }
            }
        }
        c
    }

    fn get(&self, g: &[String]) -> f64 {
        self.index.get(g).map_or(0.0, |&i| self.order[i].1)
    }
}

fn entailment(ngram: &[String], values: &HashSet<&str>) -> f64 {
    let overlap = ngram.iter().filter(|t| values.contains(t.as_str())).count();
    overlap as f64 / ngram.len() as f64
}

fn lcs(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        prev = cur;
    }
    prev[b.len()]
}

fn mention(entry: &Entry, sentence: &[String], smoothing: f64) -> f64 {
    let value: Vec<String> = entry.0.iter().chain(&entry.1).cloned().collect();
    (lcs(&value, sentence) as f64 + smoothing) / (value.len() as f64 + smoothing)
}

fn geometric(values: &[f64]) -> Option<f64> {
    if values.iter().any(|&v| v == 0.0) {
        return None;
    }
    let w = 1.0 / values.len() as f64;
    Some(values.iter().map(|v| w * v.ln()).sum::<f64>().exp())
}

/// Scores one prediction against its references and table. An empty
/// prediction scores zero on every component.
pub fn parent_example(
    prediction: &str,
    references: &[impl AsRef<str>],
    table: &KnowledgeGraph,
    config: &ParentConfig,
) -> Result<ParentScore> {
    if references.is_empty() {
        return Err(Error::Metric("PARENT needs at least one reference".into()));
    }
    if table.is_empty() {
        return Err(Error::Metric("PARENT needs a non-empty table".into()));
    }
    let pred = tokenize(prediction);
    if pred.is_empty() {
        return Ok(ParentScore::default());
    }
    let entries = table_entries(table);
    let values: HashSet<&str> = entries
        .iter()
        .flat_map(|(h, t)| h.iter().chain(t))
        .map(String::as_str)
        .collect();
    let table_recall = {
        let r = entries
            .iter()
            .map(|e| mention(e, &pred, config.mention_smoothing))
            .sum::<f64>()
            / entries.len() as f64;
        if r == 0.0 {
            config.smoothing
        } else {
            r
        }
    };

    let mut best: Option<ParentScore> = None;
    for reference in references {
        let reference = tokenize(reference.as_ref());
        let mut prec = Vec::with_capacity(config.max_order);
        let mut rec = Vec::with_capacity(config.max_order);
        for n in 1..=config.max_order {
            let pc = Counts::new(&pred, n);
            let rc = Counts::new(&reference, n);

            let (mut num, mut den) = (0.0, 0.0);
            for &(g, c) in &pc.order {
                den += c;
                let in_ref = (rc.get(g) / c).min(1.0);
                num += c * (in_ref + (1.0 - in_ref) * entailment(g, &values));
            }
            prec.push(if den == 0.0 { 0.0 } else { num / den });

            let (mut num, mut den) = (0.0, 0.0);
            for &(g, c) in &rc.order {
                let in_pred = (pc.get(g) / c).min(1.0);
                let w = entailment(g, &values);
                den += c * w;
                num += c * w * in_pred;
            }
            rec.push(if den == 0.0 { 1.0 } else { num / den });
        }
        // orders above one are smoothed; a zero unigram score stays zero
        for n in 1..config.max_order {
            if prec[n] == 0.0 {
                prec[n] = config.smoothing;
            }
            if rec[n] == 0.0 {
                rec[n] = config.smoothing;
            }
        }
        let precision = geometric(&prec).unwrap_or(0.0);
        let ref_recall = geometric(&rec).unwrap_or(config.smoothing);
        let lw = config.lambda;
        let recall = ((1.0 - lw) * ref_recall.ln() + lw * table_recall.ln()).exp();
        let f1 = 2.0 * precision * recall / (precision + recall + 1e-8);
        if best.map_or(true, |b| f1 > b.f1) {
            best = Some(ParentScore { precision, recall, f1 });
        }
    }
    Ok(best.expect("at least one reference"))
}

/// Per-example scores and their means `(precision, recall, f1)`.
pub fn parent<S: AsRef<str>, R: AsRef<str>>(
    predictions: &[S],
    references: &[Vec<R>],
    tables: &[KnowledgeGraph],
    config: &ParentConfig,
) -> Result<(ParentScore, Vec<ParentScore>)> {
    if predictions.len() != references.len() || predictions.len() != tables.len() {
        return Err(Error::Metric(format!(
            "PARENT inputs differ in length: {} predictions, {} reference sets, {} tables",
            predictions.len(),
            references.len(),
            tables.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Metric("no predictions".into()));
    }
    let per: Vec<ParentScore> = predictions
        .iter()
        .zip(references)
        .zip(tables)
        .map(|((p, r), t)| parent_example(p.as_ref(), r, t, config))
        .collect::<Result<_>>()?;
    let n = per.len() as f64;
    let mean = ParentScore {
        precision: per.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: per.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: per.iter().map(|s| s.f1).sum::<f64>() / n,
    };
    Ok((mean, per))
}

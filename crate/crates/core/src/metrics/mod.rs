//! Corpus BLEU, PARENT, TER and paired significance testing.

pub mod bleu;
pub mod parent;
pub mod significance;
pub mod ter;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Example, KnowledgeGraph};

pub use bleu::{corpus_bleu, corpus_bleu_n};
pub use parent::{parent, parent_example, ParentConfig, ParentScore};
pub use significance::{paired_t_test, sample_subsets, SignificanceResult};
pub use ter::{corpus_ter, ter};

/// Lowercased whitespace tokens, shared by every metric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase().split_whitespace().map(String::from).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Bleu,
    Parent,
    Ter,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bleu" => Ok(Metric::Bleu),
            "parent" => Ok(Metric::Parent),
            "ter" => Ok(Metric::Ter),
            other => Err(Error::Config(format!("unknown metric `{other}` (expected bleu, parent or ter)"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Bleu => "bleu",
            Metric::Parent => "parent",
            Metric::Ter => "ter",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSettings {
    pub metrics: Vec<Metric>,
    pub lowercase: bool,
    pub bleu_max_order: usize,
    pub parent_lambda: f64,
    pub parent_smoothing: f64,
    pub parent_max_order: usize,
    pub parent_mention_smoothing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<ParentScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub settings: MetricSettings,
    pub n_examples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ter: Option<f64>,
    pub per_example: Vec<ExampleRecord>,
}

impl MetricReport {
    pub fn summary(&self) -> String {
        let mut parts = vec![format!("n={}", self.n_examples)];
        if let Some(b) = self.bleu_percent {
            parts.push(format!("BLEU={b:.2}"));
        }
        if let (Some(p), Some(r), Some(f)) = (self.parent_precision, self.parent_recall, self.parent_f1) {
            parts.push(format!("PARENT P={p:.4} R={r:.4} F1={f:.4}"));
        }
        if let Some(t) = self.ter {
            parts.push(format!("TER={t:.4}"));
        }
        parts.join(" ")
    }
}

fn check_lengths(predictions: &[String], gold: &[Example]) -> Result<()> {
    if predictions.len() != gold.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} gold examples",
            predictions.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Metric("no examples to evaluate".into()));
    }
    Ok(())
}

pub fn evaluate(predictions: &[String], gold: &[Example], metrics: &[Metric]) -> Result<MetricReport> {
    check_lengths(predictions, gold)?;
    let pc = ParentConfig::default();
    let refs: Vec<&[String]> = gold.iter().map(|e| e.references.as_slice()).collect();
    let mut report = MetricReport {
        settings: MetricSettings {
            metrics: metrics.to_vec(),
            lowercase: true,
            bleu_max_order: 4,
            parent_lambda: pc.lambda,
            parent_smoothing: pc.smoothing,
            parent_max_order: pc.max_order,
            parent_mention_smoothing: pc.mention_smoothing,
        },
        n_examples: gold.len(),
        bleu_percent: None,
        parent_precision: None,
        parent_recall: None,
        parent_f1: None,
        ter: None,
        per_example: gold
            .iter()
            .map(|e| ExampleRecord {
                id: e.id.clone(),
                parent: None,
                ter: None,
            })
            .collect(),
    };
    if metrics.contains(&Metric::Bleu) {
        let r: Vec<Vec<&String>> = refs.iter().map(|r| r.iter().collect()).collect();
        report.bleu_percent = Some(corpus_bleu(predictions, &r)?);
    }
    if metrics.contains(&Metric::Parent) {
        let per: Vec<ParentScore> = predictions
            .par_iter()
            .zip(gold.par_iter())
            .map(|(p, e)| parent_example(p, &e.references, &e.graph, &pc))
            .collect::<Result<_>>()?;
        let n = per.len() as f64;
        report.parent_precision = Some(per.iter().map(|s| s.precision).sum::<f64>() / n);
        report.parent_recall = Some(per.iter().map(|s| s.recall).sum::<f64>() / n);
        report.parent_f1 = Some(per.iter().map(|s| s.f1).sum::<f64>() / n);
        for (rec, s) in report.per_example.iter_mut().zip(per) {
            rec.parent = Some(s);
        }
    }
    if metrics.contains(&Metric::Ter) {
        let per: Vec<(f64, f64)> = predictions
            .par_iter()
            .zip(gold.par_iter())
            .map(|(p, e)| ter::ter_multi(p, &e.references))
            .collect::<Result<_>>()?;
        let edits: f64 = per.iter().map(|x| x.0).sum();
        let len: f64 = per.iter().map(|x| x.1).sum();
        report.ter = Some(edits / len);
        for (rec, (e, n)) in report.per_example.iter_mut().zip(per) {
            rec.ter = Some(e / n);
        }
    }
    Ok(report)
}

/// Corpus-level score of one metric on a subset of examples. PARENT uses F1.
pub fn subset_score(metric: Metric, predictions: &[String], gold: &[Example], indices: &[usize]) -> Result<f64> {
    let preds: Vec<&String> = indices.iter().map(|&i| &predictions[i]).collect();
    let refs: Vec<&Vec<String>> = indices.iter().map(|&i| &gold[i].references).collect();
    match metric {
        Metric::Bleu => corpus_bleu(&preds, &refs.iter().map(|r| r.to_vec()).collect::<Vec<_>>()),
        Metric::Parent => {
            let tables: Vec<KnowledgeGraph> = indices.iter().map(|&i| gold[i].graph.clone()).collect();
            let refs: Vec<Vec<String>> = refs.into_iter().cloned().collect();
            Ok(parent(&preds, &refs, &tables, &ParentConfig::default())?.0.f1)
        }
        Metric::Ter => {
            let refs: Vec<Vec<String>> = refs.into_iter().cloned().collect();
            Ok(corpus_ter(&preds, &refs)?.0)
        }
    }
}

/// Scores both systems on the same `k` random subsets and runs a paired
/// t-test on the per-subset scores.
pub fn significance(
    predictions_a: &[String],
    predictions_b: &[String],
    gold: &[Example],
    metric: Metric,
    k: usize,
    fraction: f64,
    seed: u64,
) -> Result<SignificanceResult> {
    check_lengths(predictions_a, gold)?;
    check_lengths(predictions_b, gold)?;
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 subsets, got {k}")));
    }
    let subsets = sample_subsets(gold.len(), k, fraction, seed)?;
    let mut a = Vec::with_capacity(k);
    let mut b = Vec::with_capacity(k);
    for s in &subsets {
        a.push(subset_score(metric, predictions_a, gold, s)?);
        b.push(subset_score(metric, predictions_b, gold, s)?);
    }
    paired_t_test(&a, &b)
}

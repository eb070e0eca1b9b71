//! Randomized corpora and fixture cases shared by the metric tests and the
//! acceptance run.

use g2t_core::graph::{KnowledgeGraph, Triple};
use g2t_core::metrics::{parent, ParentConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

const WORDS: [&str; 8] = ["the", "a", "cat", "dog", "sat", "on", "mat", "."];

fn sentence(rng: &mut ChaCha8Rng, max: usize) -> Vec<&'static str> {
    (0..rng.gen_range(1..=max)).map(|_| *WORDS.choose(rng).unwrap()).collect()
}

/// A corpus where predictions are perturbed copies of their first reference.
pub fn random_corpus(seed: u64) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=8);
    let mut preds = Vec::new();
    let mut refs = Vec::new();
    for _ in 0..n {
        let rs: Vec<Vec<&str>> = (0..rng.gen_range(1..=3)).map(|_| sentence(&mut rng, 12)).collect();
        let mut p: Vec<&str> = rs[0].iter().filter(|_| rng.gen_bool(0.85)).copied().collect();
        for _ in 0..rng.gen_range(0..3) {
            let at = rng.gen_range(0..=p.len());
            p.insert(at, WORDS.choose(&mut rng).unwrap());
        }
        preds.push(p.join(" "));
        refs.push(rs.iter().map(|r| r.join(" ")).collect());
    }
    (preds, refs)
}

#[derive(Deserialize)]
struct ParentExample {
    triples: Vec<[String; 3]>,
    references: Vec<String>,
    prediction: String,
}

#[derive(Deserialize)]
struct ParentExpected {
    precision: f64,
    recall: f64,
    f1: f64,
    per_example_f1: Vec<f64>,
}

#[derive(Deserialize)]
struct ParentCase {
    examples: Vec<ParentExample>,
    expected: ParentExpected,
}

pub fn parent_fixture_errors() -> Vec<f64> {
    let cases: Vec<ParentCase> = serde_json::from_str(include_str!("../fixtures/parent_cases.json")).unwrap();
    let mut errors = Vec::new();
    for case in &cases {
        let preds: Vec<&str> = case.examples.iter().map(|e| e.prediction.as_str()).collect();
        let refs: Vec<Vec<String>> = case.examples.iter().map(|e| e.references.clone()).collect();
        let tables: Vec<KnowledgeGraph> = case
            .examples
            .iter()
            .map(|e| e.triples.iter().map(|[s, p, o]| Triple::new(s, p, o)).collect())
            .collect();
        let (mean, per) = parent(&preds, &refs, &tables, &ParentConfig::default()).unwrap();
        let e = &case.expected;
        let mut err = (mean.precision - e.precision)
            .abs()
            .max((mean.recall - e.recall).abs())
            .max((mean.f1 - e.f1).abs());
        for (got, want) in per.iter().zip(&e.per_example_f1) {
            err = err.max((got.f1 - want).abs());
        }
        errors.push(err);
    }
    errors
}

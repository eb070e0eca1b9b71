mod common;

use common::metric_cases::{parent_fixture_errors, random_corpus};
use common::oracles::{brute_bleu, exhaustive_ter_table, t_p_value_quadrature};
use g2t_core::metrics::bleu::corpus_bleu;
use g2t_core::metrics::significance::{paired_t_test, two_sided_p};
use g2t_core::metrics::ter::{corpus_ter, ter_edits_tokens, ter_multi};
use serde::Deserialize;

#[test]
fn bleu_matches_brute_force_counting() {
    let mut nonzero = 0;
    for seed in 0..50 {
        let (p, r) = random_corpus(seed);
        let got = corpus_bleu(&p, &r).unwrap();
        let want = brute_bleu(&p, &r);
        assert!((got - want).abs() < 1e-6, "seed {seed}: {got} vs {want}");
        nonzero += usize::from(want > 0.0);
    }
    assert!(nonzero >= 25, "only {nonzero} corpora with non-zero BLEU");
}

#[test]
fn bleu_single_pair_example() {
    let p = ["a b c d e".to_string()];
    let r = vec![vec!["a b c d f".to_string()]];
    let want = brute_bleu(&p, &r);
    assert!((corpus_bleu(&p, &r).unwrap() - want).abs() < 1e-6);
    // 4/5, 3/4, 2/3, 1/2 with no brevity penalty
    let hand = 100.0 * (0.8f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
    assert!((want - hand).abs() < 1e-9);
}

#[test]
fn parent_matches_reference_fixtures() {
    let errors = parent_fixture_errors();
    assert_eq!(errors.len(), 20);
    for (i, e) in errors.iter().enumerate() {
        assert!(*e < 1e-6, "case {i}: error {e}");
    }
}

#[derive(Deserialize)]
struct TerCase {
    prediction: String,
    references: Vec<String>,
    edits: u64,
    ref_length: f64,
}

#[derive(Deserialize)]
struct TerFixtures {
    cases: Vec<TerCase>,
    corpus_ter: f64,
}

#[test]
fn ter_matches_sacrebleu_fixtures() {
    let f: TerFixtures = serde_json::from_str(include_str!("fixtures/ter_cases.json")).unwrap();
    for c in &f.cases {
        let (edits, len) = ter_multi(&c.prediction, &c.references).unwrap();
        assert_eq!(edits, c.edits as f64, "{:?} vs {:?}", c.prediction, c.references);
        assert!((len - c.ref_length).abs() < 1e-12);
    }
    let preds: Vec<&str> = f.cases.iter().map(|c| c.prediction.as_str()).collect();
    let refs: Vec<Vec<String>> = f.cases.iter().map(|c| c.references.clone()).collect();
    let (rate, _) = corpus_ter(&preds, &refs).unwrap();
    assert!((rate - f.corpus_ter).abs() < 1e-12);
}

#[test]
fn ter_never_beats_exhaustive_search() {
    let (strings, table) = exhaustive_ter_table(&["a", "b", "c"], 4);
    for (i, h) in strings.iter().enumerate() {
        for (j, r) in strings.iter().enumerate().skip(1) {
            let (greedy, _) = ter_edits_tokens(h, r);
            assert!(greedy >= table[i][j] as u64, "{h:?} -> {r:?}");
        }
    }
    let (edits, len) = ter_edits_tokens(&["b", "a"], &["a", "b"]);
    assert_eq!((edits, len), (1, 2));
}

#[test]
fn t_test_p_values_match_quadrature() {
    let b = [1.0; 5];
    let a = [2.0, 3.0, 4.0, 5.0, 6.0];
    let r = paired_t_test(&a, &b).unwrap();
    let sd = (2.5f64).sqrt();
    let t = 3.0 / (sd / 5f64.sqrt());
    assert!((r.t_statistic - t).abs() < 1e-12);
    assert!((r.p_value - t_p_value_quadrature(t, 4)).abs() < 1e-6);
    for (t, df) in [(0.0, 3), (0.5, 1), (1.7, 2), (2.262, 9), (-3.1, 9), (6.0, 4), (1.0, 30)] {
        let q = t_p_value_quadrature(t, df);
        assert!((two_sided_p(t, df) - q).abs() < 1e-6, "t={t} df={df}");
    }
}

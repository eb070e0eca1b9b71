mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use common::graphs::graph_and_permutation;
use g2t_core::data::{
    generate_synthetic, load_jsonl, parse_flat_format, parse_jsonl, save_jsonl, to_jsonl, verify_split_counts,
    SynthConfig,
};
use g2t_core::graph::{Corpus, Example, Triple};
use g2t_core::linearize::linearize;
use g2t_core::Error;
use proptest::prelude::*;

fn mini_sample_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/mini_sample.jsonl")
}

/// Whole-word containment of `phrase` in `text`.
fn mentions(text: &str, phrase: &str) -> bool {
    let t: Vec<&str> = text.split_whitespace().collect();
    let p: Vec<&str> = phrase.split_whitespace().collect();
    t.windows(p.len()).any(|w| w == p.as_slice())
}

fn entities(ex: &Example) -> BTreeSet<&str> {
    ex.graph.iter().flat_map(|t| [t.subject.as_str(), t.object.as_str()]).collect()
}

#[test]
fn mini_sample_loads_and_linearizes() {
    let corpus = load_jsonl(&mini_sample_path()).unwrap();
    assert_eq!(corpus.split_name, "mini_sample");
    assert_eq!(corpus.len(), 5);
    assert_eq!(corpus.examples[0].graph.len(), 5);
    assert_eq!(
        corpus.examples[4].graph.triples,
        vec![Triple::new("Aaron Turner", "genre", "Sludge metal")]
    );
    for ex in &corpus.examples {
        assert!(!linearize(&ex.graph, 8).unwrap().is_empty());
    }
    let counts = verify_split_counts(&corpus, &corpus, &corpus);
    assert_eq!(counts.pairs, (5, 5, 5));
    assert!(!counts.matches_expected);
}

#[test]
fn mini_sample_file_is_canonical() {
    let text = std::fs::read_to_string(mini_sample_path()).unwrap();
    let corpus = parse_jsonl(&text, "mini").unwrap();
    assert_eq!(to_jsonl(&corpus).unwrap(), text);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("copy.jsonl");
    save_jsonl(&corpus, &out).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), text);
}

#[test]
fn appendix_input_lines_parse() {
    let g = parse_flat_format("S| Aaron Turner P| genre O| Sludge metal\nS| Aaron Turner P| origin O| Massachusetts").unwrap();
    assert_eq!(g.triples[0], Triple::new("Aaron Turner", "genre", "Sludge metal"));
    assert_eq!(g.len(), 2);
}

#[test]
fn malformed_lines_name_their_line() {
    let text = "{\"id\":\"a\",\"triples\":[[\"A\",\"r\",\"B\"]],\"references\":[\"x\"]}\n\n{\"id\":\"b\",\"triples\":[[\"A\",\"r\"]],\"references\":[]}\n";
    match parse_jsonl(text, "t") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
    let empty = Corpus::new("e", vec![]);
    assert_eq!(verify_split_counts(&empty, &empty, &empty).pairs, (0, 0, 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jsonl_round_trip_is_byte_canonical(graphs in prop::collection::vec(graph_and_permutation(), 1..6)) {
        let examples = graphs
            .into_iter()
            .enumerate()
            .map(|(i, (g, _))| Example::new(format!("ex-{i}"), g, vec![format!("reference {i}")]))
            .collect();
        let corpus = Corpus::new("p", examples);
        let text = to_jsonl(&corpus).unwrap();
        let back = parse_jsonl(&text, "p").unwrap();
        prop_assert_eq!(&back, &corpus);
        prop_assert_eq!(to_jsonl(&back).unwrap(), text);
    }
}

fn small(seed: u64) -> SynthConfig {
    SynthConfig {
        n_examples: 200,
        n_noisy: 600,
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn clean_descriptions_cover_their_graphs() {
    let (clean, noisy) = generate_synthetic(&small(4)).unwrap();
    assert!(noisy.len() >= 3 * clean.len());
    for ex in &clean.examples {
        let text = &ex.references[0];
        for e in entities(ex) {
            assert!(mentions(text, e), "`{e}` missing from `{text}`");
        }
    }
}

#[test]
fn generator_is_deterministic_by_seed() {
    let a = generate_synthetic(&small(9)).unwrap();
    let b = generate_synthetic(&small(9)).unwrap();
    let c = generate_synthetic(&small(10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn certain_drop_omits_exactly_one_triple() {
    let config = SynthConfig {
        extra_fact_rate: 0.0,
        dropped_fact_rate: 1.0,
        paraphrase_rate: 0.0,
        ..small(2)
    };
    let (_, noisy) = generate_synthetic(&config).unwrap();
    let mut checked = 0;
    for ex in noisy.examples.iter().filter(|e| e.graph.len() >= 2) {
        let text = &ex.references[0];
        let missing = ex.graph.iter().filter(|t| !mentions(text, &t.object)).count();
        assert_eq!(missing, 1, "{text}");
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn certain_extra_fact_adds_one_clause() {
    let config = SynthConfig {
        extra_fact_rate: 1.0,
        dropped_fact_rate: 0.0,
        paraphrase_rate: 0.0,
        ..small(3)
    };
    let (_, noisy) = generate_synthetic(&config).unwrap();
    for ex in &noisy.examples {
        let text = &ex.references[0];
        // the plain template spends one "has" per fact
        let clauses = text.split_whitespace().filter(|w| *w == "has").count();
        assert_eq!(clauses, ex.graph.len() + 1, "{text}");
        for e in entities(ex) {
            assert!(mentions(text, e));
        }
    }
}

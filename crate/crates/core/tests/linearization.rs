mod common;

use common::graphs::{brute_force_levels, check_linearization, dag, graph_and_permutation, levels_match_brute_force};
use g2t_core::graph::{KnowledgeGraph, Triple};
use g2t_core::linearize::{linearize, serialize_linearized};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn structure_count_roles_levels_permutation_round_trip((g, perm) in graph_and_permutation(), max_level in 1usize..=8) {
        prop_assert_eq!(check_linearization(&g, &perm, max_level), Ok(()));
    }

    #[test]
    fn dag_levels_are_shortest_paths_from_roots(g in dag()) {
        prop_assert_eq!(levels_match_brute_force(&g), Ok(()));
    }
}

#[test]
fn three_deep_tree_is_clipped() {
    // root R with children A, B; A has children C, D; C has children E, F, G
    let g: KnowledgeGraph = [
        ("R", "p", "A"),
        ("R", "p", "B"),
        ("A", "p", "C"),
        ("A", "p", "D"),
        ("C", "p", "E"),
        ("C", "p", "F"),
        ("C", "p", "G"),
    ]
    .iter()
    .map(|(s, r, o)| Triple::new(*s, *r, *o))
    .collect();
    let depths = brute_force_levels(&g);
    assert_eq!(depths, vec![0, 0, 1, 1, 2, 2, 2]);
    let clipped = linearize(&g, 1).unwrap();
    let expected: Vec<usize> = depths.iter().flat_map(|&d| [d.min(1); 6]).collect();
    assert_eq!(clipped.levels(), expected);
    let full = linearize(&g, 2).unwrap();
    assert_eq!(*full.levels().last().unwrap(), 2);
}

#[test]
fn appendix_triple() {
    let g = KnowledgeGraph::new(vec![Triple::new("Aaron Turner", "genre", "Sludge metal")]);
    let lin = linearize(&g, 8).unwrap();
    assert_eq!(serialize_linearized(&lin), "|S Aaron Turner |P genre |O Sludge metal");
    assert_eq!(lin.roles(), vec![0, 0, 0, 1, 1, 2, 2, 2]);
    assert_eq!(lin.levels(), vec![0; 8]);
}

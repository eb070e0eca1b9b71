//! Random graph strategies and the linearization property checks shared by
//! the property tests and the acceptance run.

use std::collections::BTreeSet;

use g2t_core::data::parse_flat_format;
use g2t_core::graph::{KnowledgeGraph, Triple};
use g2t_core::linearize::{compute_tree_levels, linearize, serialize_linearized, LinearizedInput, SegmentRole};
use proptest::prelude::*;

const ENTITIES: [&str; 10] = [
    "Alan Bean",
    "Test pilot",
    "Wheeler , Texas",
    "NASA",
    "Apollo 12",
    "United States of America",
    "1932",
    "Sludge metal",
    "Aaron Turner",
    "B",
];

const PREDICATES: [&str; 6] = ["occupation", "birthPlace", "is part of", "genre", "operator", "x"];

/// Index triples `(subject, predicate, object)` over the fixed inventories,
/// duplicates removed, order kept.
fn dedup(raw: Vec<(usize, usize, usize)>) -> Vec<(usize, usize, usize)> {
    let mut seen = BTreeSet::new();
    raw.into_iter().filter(|t| seen.insert(*t)).collect()
}

fn build(idx: &[(usize, usize, usize)]) -> KnowledgeGraph {
    idx.iter()
        .map(|&(s, p, o)| Triple::new(ENTITIES[s], PREDICATES[p], ENTITIES[o]))
        .collect()
}

/// Arbitrary valid graphs of 1..=10 triples, cycles and self-loops included,
/// paired with a permutation of their triples.
pub fn graph_and_permutation() -> impl Strategy<Value = (KnowledgeGraph, Vec<usize>)> {
    prop::collection::vec((0..ENTITIES.len(), 0..PREDICATES.len(), 0..ENTITIES.len()), 1..=10)
        .prop_map(dedup)
        .prop_flat_map(|idx| {
            let n = idx.len();
            (Just(build(&idx)), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
}

/// Acyclic graphs: every edge goes from a lower to a higher entity index.
pub fn dag() -> impl Strategy<Value = KnowledgeGraph> {
    prop::collection::vec((0..ENTITIES.len() - 1, 0..PREDICATES.len(), 1..ENTITIES.len()), 1..=10)
        .prop_map(|raw| {
            let idx: Vec<_> = raw.into_iter().map(|(a, p, b)| (a.min(b - 1), p, b.max(a + 1))).collect();
            build(&dedup(idx))
        })
}

/// Per-triple segments of a linearization, split at subject markers.
fn segments(lin: &LinearizedInput) -> Vec<&[g2t_core::linearize::AnnotatedToken]> {
    let starts: Vec<usize> = lin
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_marker() && t.role == SegmentRole::Subject)
        .map(|(i, _)| i)
        .collect();
    starts
        .iter()
        .enumerate()
        .map(|(k, &s)| &lin.tokens[s..starts.get(k + 1).copied().unwrap_or(lin.len())])
        .collect()
}

fn annotations(lin: &LinearizedInput) -> Vec<(Vec<usize>, Vec<usize>)> {
    segments(lin)
        .iter()
        .map(|seg| (seg.iter().map(|t| t.role.code()).collect(), seg.iter().map(|t| t.level).collect()))
        .collect()
}

/// Every structural property of one linearization, plus its behaviour under
/// the triple permutation `perm`.
pub fn check_linearization(g: &KnowledgeGraph, perm: &[usize], max_level: usize) -> Result<(), String> {
    let lin = linearize(g, max_level).map_err(|e| e.to_string())?;

    let expected: usize = g
        .iter()
        .map(|t| 3 + [&t.subject, &t.predicate, &t.object].iter().map(|p| p.split_whitespace().count()).sum::<usize>())
        .sum();
    if lin.len() != expected {
        return Err(format!("token count {} != {expected}", lin.len()));
    }

    let segs = segments(&lin);
    if segs.len() != g.len() {
        return Err(format!("{} segments for {} triples", segs.len(), g.len()));
    }
    for (seg, t) in segs.iter().zip(g.iter()) {
        let mut want: Vec<(&str, SegmentRole)> = Vec::new();
        for (role, phrase) in SegmentRole::ALL.into_iter().zip([&t.subject, &t.predicate, &t.object]) {
            want.push((role.marker(), role));
            want.extend(phrase.split_whitespace().map(|w| (w, role)));
        }
        let got: Vec<(&str, SegmentRole)> = seg.iter().map(|t| (t.text.as_str(), t.role)).collect();
        if got != want {
            return Err(format!("segment {got:?} != {want:?}"));
        }
        if seg.iter().any(|x| x.level != seg[0].level) {
            return Err("levels differ inside one triple segment".into());
        }
    }

    for (i, t) in lin.tokens.iter().enumerate() {
        if t.position != i {
            return Err(format!("token {i} has position {}", t.position));
        }
        if t.level > max_level {
            return Err(format!("token {i} has level {} > {max_level}", t.level));
        }
    }
    // role codes change only at markers
    for w in lin.tokens.windows(2) {
        if w[0].role != w[1].role && !w[1].is_marker() {
            return Err(format!("role changes at non-marker `{}`", w[1].text));
        }
    }

    let permuted: KnowledgeGraph = perm.iter().map(|&i| g.triples[i].clone()).collect();
    let lin_p = linearize(&permuted, max_level).map_err(|e| e.to_string())?;
    let (a, b) = (annotations(&lin), annotations(&lin_p));
    for (k, &i) in perm.iter().enumerate() {
        if b[k] != a[i] {
            return Err(format!("triple {i} annotated differently after permutation"));
        }
    }

    if linearize(g, max_level).map_err(|e| e.to_string())? != lin {
        return Err("linearization is not deterministic".into());
    }

    let text = serialize_linearized(&lin);
    let back = parse_flat_format(&text).map_err(|e| e.to_string())?;
    if &back != g {
        return Err(format!("round trip changed the graph: `{text}`"));
    }
    Ok(())
}

/// Levels by all-pairs shortest paths (Floyd-Warshall) from the in-degree-0
/// entities; valid for acyclic graphs only.
pub fn brute_force_levels(g: &KnowledgeGraph) -> Vec<usize> {
    let names: Vec<&str> = g
        .iter()
        .flat_map(|t| [t.subject.as_str(), t.object.as_str()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let id = |s: &str| names.iter().position(|&n| n == s).unwrap();
    let n = names.len();
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for t in g.iter() {
        d[id(&t.subject)][id(&t.object)] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let roots: Vec<usize> = (0..n).filter(|&j| (0..n).all(|i| i == j || d[i][j] == INF)).collect();
    g.iter()
        .map(|t| roots.iter().map(|&r| d[r][id(&t.subject)]).min().unwrap())
        .collect()
}

pub fn levels_match_brute_force(g: &KnowledgeGraph) -> Result<(), String> {
    let (fast, slow) = (compute_tree_levels(g), brute_force_levels(g));
    if fast == slow {
        Ok(())
    } else {
        Err(format!("levels {fast:?}, shortest paths {slow:?}"))
    }
}

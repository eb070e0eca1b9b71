//! Graph flattening into `|S s |P r |O o ...` token sequences, with a
//! triple-role and tree-level index attached to every token.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    ensure_valid, KnowledgeGraph, OBJECT_MARKER, PREDICATE_MARKER, SUBJECT_MARKER,
};

pub const DEFAULT_MAX_LEVEL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum SegmentRole {
    Subject = 0,
    Predicate = 1,
    Object = 2,
}

impl SegmentRole {
    pub const COUNT: usize = 3;
    pub const ALL: [SegmentRole; 3] = [SegmentRole::Subject, SegmentRole::Predicate, SegmentRole::Object];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn marker(self) -> &'static str {
        match self {
            SegmentRole::Subject => SUBJECT_MARKER,
            SegmentRole::Predicate => PREDICATE_MARKER,
            SegmentRole::Object => OBJECT_MARKER,
        }
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub text: String,
    pub position: usize,
    pub role: SegmentRole,
    pub level: usize,
}

impl AnnotatedToken {
    pub fn is_marker(&self) -> bool {
        self.text == self.role.marker()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearizedInput {
    pub tokens: Vec<AnnotatedToken>,
    pub source_graph_id: String,
}

impl LinearizedInput {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.source_graph_id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn roles(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.role.code()).collect()
    }

    pub fn levels(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.level).collect()
    }
}

/// Directed subject→object adjacency over entity surface forms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntityGraph {
    pub successors: BTreeMap<String, BTreeSet<String>>,
    pub entities: BTreeSet<String>,
}

impl EntityGraph {
    pub fn out_degree(&self, entity: &str) -> usize {
        self.successors.get(entity).map_or(0, BTreeSet::len)
    }

    pub fn in_degrees(&self) -> BTreeMap<&str, usize> {
        let mut deg: BTreeMap<&str, usize> = self.entities.iter().map(|e| (e.as_str(), 0)).collect();
        for succ in self.successors.values() {
            for o in succ {
                *deg.get_mut(o.as_str()).expect("successor is an entity") += 1;
            }
        }
        deg
    }

    pub fn edge_count(&self) -> usize {
        self.successors.values().map(BTreeSet::len).sum()
    }
}

pub fn build_entity_graph(graph: &KnowledgeGraph) -> EntityGraph {
    let mut eg = EntityGraph::default();
    for t in graph.iter() {
        let s = t.subject.trim().to_string();
        let o = t.object.trim().to_string();
        eg.entities.insert(s.clone());
        eg.entities.insert(o.clone());
        eg.successors.entry(s).or_default().insert(o);
    }
    eg
}

/// Per-triple tree level: BFS depth of the triple's subject from the nearest
/// in-degree-0 entity. Entities not reachable from such a root (cycles) are
/// seeded from the highest out-degree entity, lexicographically smallest on
/// ties, repeating until every entity has a level. Unclipped.
pub fn compute_tree_levels(graph: &KnowledgeGraph) -> Vec<usize> {
    let eg = build_entity_graph(graph);
    let mut level: BTreeMap<&str, usize> = BTreeMap::new();

    let roots: Vec<&str> = eg
        .in_degrees()
        .into_iter()
        .filter(|&(_, d)| d == 0)
        .map(|(e, _)| e)
        .collect();
    bfs_from(&eg, &roots, &mut level);

    loop {
        let next_root = eg
            .entities
            .iter()
            .map(String::as_str)
            .filter(|e| !level.contains_key(e))
            // max out-degree, then smallest surface form
            .min_by(|a, b| eg.out_degree(b).cmp(&eg.out_degree(a)).then(a.cmp(b)));
        match next_root {
            Some(root) => bfs_from(&eg, &[root], &mut level),
            None => break,
        }
    }

    graph
        .iter()
        .map(|t| level[t.subject.trim()])
        .collect()
}

fn bfs_from<'a>(eg: &'a EntityGraph, sources: &[&'a str], level: &mut BTreeMap<&'a str, usize>) {
    let mut queue = VecDeque::new();
    for &s in sources {
        if !level.contains_key(s) {
            level.insert(s, 0);
            queue.push_back(s);
        }
    }
    while let Some(e) = queue.pop_front() {
        let d = level[e];
        if let Some(succ) = eg.successors.get(e) {
            for o in succ {
                if !level.contains_key(o.as_str()) {
                    level.insert(o.as_str(), d + 1);
                    queue.push_back(o.as_str());
                }
            }
        }
    }
}

pub fn linearize(graph: &KnowledgeGraph, max_level: usize) -> Result<LinearizedInput> {
    if max_level < 1 {
        return Err(Error::Config("max_level must be at least 1".into()));
    }
    ensure_valid(graph)?;
    let levels = compute_tree_levels(graph);
    let mut tokens = Vec::new();
    for (triple, level) in graph.iter().zip(levels) {
        let level = level.min(max_level);
        for (role, phrase) in SegmentRole::ALL
            .into_iter()
            .zip([&triple.subject, &triple.predicate, &triple.object])
        {
            for text in std::iter::once(role.marker()).chain(phrase.split_whitespace()) {
                tokens.push(AnnotatedToken {
                    text: text.to_string(),
                    position: tokens.len(),
                    role,
                    level,
                });
            }
        }
    }
    Ok(LinearizedInput {
        tokens,
        source_graph_id: String::new(),
    })
}

/// Single-space join of the token texts.
pub fn serialize_linearized(input: &LinearizedInput) -> String {
    let mut out = String::new();
    for (i, t) in input.tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.text);
    }
    out
}

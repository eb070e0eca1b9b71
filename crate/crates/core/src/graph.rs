//! Knowledge-graph and corpus types shared by every other module.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker tokens that introduce subject, predicate and object segments.
pub const SUBJECT_MARKER: &str = "|S";
pub const PREDICATE_MARKER: &str = "|P";
pub const OBJECT_MARKER: &str = "|O";

/// Alternate marker spelling found in some WebNLG renderings (`S| ...`).
pub(crate) const ALT_MARKERS: [&str; 3] = ["S|", "P|", "O|"];

pub(crate) fn is_marker(word: &str) -> bool {
    matches!(word, SUBJECT_MARKER | PREDICATE_MARKER | OBJECT_MARKER) || ALT_MARKERS.contains(&word)
}

/// One `(subject, predicate, object)` relation, stored in display form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Triple {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn fields(&self) -> [(&'static str, &str); 3] {
        [
            ("subject", &self.subject),
            ("predicate", &self.predicate),
            ("object", &self.object),
        ]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.predicate, self.object)
    }
}

// Serialized as a bare `[s, r, o]` array to match the corpus JSONL layout.
impl Serialize for Triple {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [&self.subject, &self.predicate, &self.object].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Triple {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let parts = Vec::<String>::deserialize(deserializer)?;
        match <[String; 3]>::try_from(parts) {
            Ok([s, r, o]) => Ok(Triple::new(s, r, o)),
            Err(parts) => Err(serde::de::Error::custom(format!(
                "triple must have exactly 3 elements, got {}",
                parts.len()
            ))),
        }
    }
}

/// An ordered set of triples; order is significant for linearization.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KnowledgeGraph {
    pub triples: Vec<Triple>,
}

impl KnowledgeGraph {
    pub fn new(triples: Vec<Triple>) -> Self {
        KnowledgeGraph { triples }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triple> {
        self.triples.iter()
    }
}

impl FromIterator<Triple> for KnowledgeGraph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        KnowledgeGraph::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    EmptyGraph,
    EmptyField(&'static str),
    NewlineInField(&'static str),
    /// A phrase word collides with a segment marker and would corrupt the linearization.
    MarkerInField(&'static str),
    /// Byte-identical repeat of the triple at `first`.
    Duplicate { first: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::EmptyGraph => write!(f, "graph has no triples"),
            ViolationKind::EmptyField(field) => write!(f, "{field} is empty"),
            ViolationKind::NewlineInField(field) => write!(f, "{field} contains a newline"),
            ViolationKind::MarkerInField(field) => {
                write!(f, "{field} contains a reserved segment marker")
            }
            ViolationKind::Duplicate { first } => write!(f, "duplicate of triple {first}"),
        }
    }
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::InvalidGraph {
            index: v.index,
            violation: v.kind.to_string(),
        }
    }
}

/// Checks every triple and graph invariant. Violations are returned as data,
/// in triple order; an empty list means the graph is valid.
pub fn validate_graph(graph: &KnowledgeGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    if graph.is_empty() {
        out.push(Violation {
            index: 0,
            kind: ViolationKind::EmptyGraph,
        });
        return out;
    }
    let mut seen = std::collections::HashMap::new();
    for (index, triple) in graph.iter().enumerate() {
        for (name, value) in triple.fields() {
            if value.trim().is_empty() {
                out.push(Violation {
                    index,
                    kind: ViolationKind::EmptyField(name),
                });
            }
            if value.contains(['\n', '\r']) {
                out.push(Violation {
                    index,
                    kind: ViolationKind::NewlineInField(name),
                });
            }
            if value.split_whitespace().any(is_marker) {
                out.push(Violation {
                    index,
                    kind: ViolationKind::MarkerInField(name),
                });
            }
        }
        if let Some(&first) = seen.get(triple) {
            out.push(Violation {
                index,
                kind: ViolationKind::Duplicate { first },
            });
        } else {
            seen.insert(triple, index);
        }
    }
    out
}

/// Like [`validate_graph`] but turns the first violation into an error.
pub fn ensure_valid(graph: &KnowledgeGraph) -> Result<()> {
    match validate_graph(graph).into_iter().next() {
        None => Ok(()),
        Some(v) => Err(v.into()),
    }
}

/// A graph paired with zero or more reference descriptions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    #[serde(rename = "triples")]
    pub graph: KnowledgeGraph,
    pub references: Vec<String>,
}

impl Example {
    pub fn new(id: impl Into<String>, graph: KnowledgeGraph, references: Vec<String>) -> Self {
        Example {
            id: id.into(),
            graph,
            references,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub split_name: String,
    pub examples: Vec<Example>,
}

impl Corpus {
    pub fn new(split_name: impl Into<String>, examples: Vec<Example>) -> Self {
        Corpus {
            split_name: split_name.into(),
            examples,
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Validates graphs, references and id uniqueness.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for ex in &self.examples {
            if !ids.insert(ex.id.as_str()) {
                return Err(Error::InvalidExample {
                    id: ex.id.clone(),
                    message: "duplicate example id".into(),
                });
            }
            if let Some(v) = validate_graph(&ex.graph).into_iter().next() {
                return Err(Error::InvalidExample {
                    id: ex.id.clone(),
                    message: format!("triple {}: {}", v.index, v.kind),
                });
            }
            if ex.references.iter().any(|r| r.trim().is_empty()) {
                return Err(Error::InvalidExample {
                    id: ex.id.clone(),
                    message: "empty reference".into(),
                });
            }
        }
        Ok(())
    }

    /// One `(graph, reference)` pair per reference, in corpus order.
    pub fn training_pairs(&self) -> Vec<(&Example, &str)> {
        self.examples
            .iter()
            .flat_map(|ex| ex.references.iter().map(move |r| (ex, r.as_str())))
            .collect()
    }
}

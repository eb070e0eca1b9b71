//! Synthetic graph-description corpora with controllable noise.
//!
//! Graphs are random trees over an inventory of pseudo-word entities and
//! relations, stored in shuffled triple order. Descriptions follow the tree:
//! each triple of the root opens a sentence and every child triple attaches
//! as a relative clause right after its parent's object.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Corpus, Example, KnowledgeGraph, Triple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Clean examples.
    pub n_examples: usize,
    /// Noisy examples; at least three times `n_examples`.
    pub n_noisy: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub max_triples: usize,
    pub extra_fact_rate: f64,
    pub dropped_fact_rate: f64,
    pub paraphrase_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_examples: 2200,
            n_noisy: 10000,
            n_entities: 100,
            n_relations: 40,
            max_triples: 7,
            extra_fact_rate: 0.3,
            dropped_fact_rate: 0.3,
            paraphrase_rate: 0.3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("extra_fact_rate", self.extra_fact_rate),
            ("dropped_fact_rate", self.dropped_fact_rate),
            ("paraphrase_rate", self.paraphrase_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("{name} {r} not in [0, 1]")));
            }
        }
        if self.n_examples == 0 {
            return Err(Error::Config("n_examples must be at least 1".into()));
        }
        if self.n_noisy < 3 * self.n_examples {
            return Err(Error::Config(format!(
                "n_noisy {} is below three times n_examples {}",
                self.n_noisy, self.n_examples
            )));
        }
        if self.max_triples == 0 {
            return Err(Error::Config("max_triples must be at least 1".into()));
        }
        if self.n_relations == 0 {
            return Err(Error::Config("n_relations must be at least 1".into()));
        }
        // a tree with k triples has k + 1 entities; extra facts need one more
        if self.n_entities < self.max_triples + 2 {
            return Err(Error::Config(format!(
                "{} entities cannot fill graphs of {} triples plus an unrelated entity",
                self.n_entities, self.max_triples
            )));
        }
        Ok(())
    }
}

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn pseudo_word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables)
        .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
        .collect()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn unique_names(rng: &mut ChaCha8Rng, n: usize, make: impl Fn(&mut ChaCha8Rng) -> String) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = make(rng);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

struct Relation {
    /// Graph-side name, e.g. `homePort`.
    name: String,
    /// Text-side phrase, e.g. `home port`.
    phrase: String,
}

struct Inventory {
    entities: Vec<String>,
    relations: Vec<Relation>,
}

fn inventory(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Inventory {
    let entities = unique_names(rng, config.n_entities, |r| {
        let words = r.gen_range(1..=2);
        let syl = r.gen_range(2..=3);
        (0..words)
            .map(|_| capitalize(&pseudo_word(r, syl)))
            .collect::<Vec<_>>()
            .join(" ")
    });
    let phrases = unique_names(rng, config.n_relations, |r| {
        let words = r.gen_range(1..=2);
        (0..words).map(|_| pseudo_word(r, 2)).collect::<Vec<_>>().join(" ")
    });
    let relations = phrases
        .into_iter()
        .map(|p| {
            let mut parts = p.split(' ');
            let mut name = parts.next().unwrap().to_string();
            for w in parts {
                name.push_str(&capitalize(w));
            }
            Relation { name, phrase: p }
        })
        .collect();
    Inventory { entities, relations }
}

/// A tree: `edges[i] = (parent entity, relation, child entity)` in creation order.
struct Tree {
    entities: Vec<usize>,
    edges: Vec<(usize, usize, usize)>,
}

fn random_tree(config: &SynthConfig, inv: &Inventory, rng: &mut ChaCha8Rng) -> Tree {
    let k = rng.gen_range(1..=config.max_triples);
    let entities: Vec<usize> = rand::seq::index::sample(rng, inv.entities.len(), k + 1).into_vec();
    let edges = (0..k)
        .map(|i| {
            let parent = rng.gen_range(0..=i);
            let rel = rng.gen_range(0..inv.relations.len());
            (parent, rel, i + 1)
        })
        .collect();
    Tree { entities, edges }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variant {
    Plain,
    Paraphrase,
}

fn realize(tree: &Tree, inv: &Inventory, variant: Variant, skip: Option<usize>, extra: Option<(usize, usize, usize)>) -> String {
    let name = |node: usize| inv.entities[tree.entities[node]].as_str();
    let children = |node: usize| {
        tree.edges
            .iter()
            .enumerate()
            .filter(move |(i, e)| e.0 == node && Some(*i) != skip)
            .map(|(i, _)| i)
    };
    fn clauses(
        tree: &Tree,
        inv: &Inventory,
        variant: Variant,
        node: usize,
        out: &mut Vec<String>,
        children: &dyn Fn(usize) -> Vec<usize>,
    ) {
        for e in children(node) {
            let (_, r, o) = tree.edges[e];
            let phrase = &inv.relations[r].phrase;
            let obj = &inv.entities[tree.entities[o]];
            out.push(match variant {
                Variant::Plain => format!(", which has {phrase} {obj}"),
                Variant::Paraphrase => format!(", whose {phrase} is {obj}"),
            });
            clauses(tree, inv, variant, o, out, children);
        }
    }
    let kids = |n: usize| children(n).collect::<Vec<_>>();
    let mut sentences = Vec::new();
    for e in kids(0) {
        let (_, r, o) = tree.edges[e];
        let phrase = &inv.relations[r].phrase;
        let mut parts = vec![match variant {
            Variant::Plain => format!("{} has {phrase} {}", name(0), name(o)),
            Variant::Paraphrase => format!("the {phrase} of {} is {}", name(0), name(o)),
        }];
        clauses(tree, inv, variant, o, &mut parts, &kids);
        let mut s = parts.concat();
        s.push_str(" .");
        sentences.push(s);
    }
    if let Some((subject, r, entity)) = extra {
        let phrase = &inv.relations[r].phrase;
        let (s, o) = (name(subject), inv.entities[entity].as_str());
        sentences.push(match variant {
            Variant::Plain => format!("{s} has {phrase} {o} ."),
            Variant::Paraphrase => format!("the {phrase} of {s} is {o} ."),
        });
    }
    let text = sentences.join(" ");
    let text = text.replace(", ", " , ");
    capitalize(&text)
}

fn graph_of(tree: &Tree, inv: &Inventory, rng: &mut ChaCha8Rng) -> KnowledgeGraph {
    let mut triples: Vec<Triple> = tree
        .edges
        .iter()
        .map(|&(s, r, o)| {
            Triple::new(
                inv.entities[tree.entities[s]].clone(),
                inv.relations[r].name.clone(),
                inv.entities[tree.entities[o]].clone(),
            )
        })
        .collect();
    triples.shuffle(rng);
    KnowledgeGraph::new(triples)
}

/// Leaf edges: those whose child entity has no children.
fn leaf_edges(tree: &Tree) -> Vec<usize> {
    (0..tree.edges.len())
        .filter(|&i| !tree.edges.iter().any(|e| e.0 == tree.edges[i].2))
        .collect()
}

/// Returns `(clean, noisy)` corpora, deterministic in `config.seed`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<(Corpus, Corpus)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let inv = inventory(config, &mut rng);

    let mut clean_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let clean = (0..config.n_examples)
        .map(|i| {
            let tree = random_tree(config, &inv, &mut clean_rng);
            let text = realize(&tree, &inv, Variant::Plain, None, None);
            let graph = graph_of(&tree, &inv, &mut clean_rng);
            Example::new(format!("clean-{:06}", i + 1), graph, vec![text])
        })
        .collect();

    let mut noisy_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let noisy = (0..config.n_noisy)
        .map(|i| {
            let r = &mut noisy_rng;
            let tree = random_tree(config, &inv, r);
            let variant = if r.gen_bool(config.paraphrase_rate) {
                Variant::Paraphrase
            } else {
                Variant::Plain
            };
            let skip = if tree.edges.len() >= 2 && r.gen_bool(config.dropped_fact_rate) {
                leaf_edges(&tree).choose(r).copied()
            } else {
                None
            };
            let extra = if r.gen_bool(config.extra_fact_rate) {
                let absent: Vec<usize> = (0..inv.entities.len()).filter(|e| !tree.entities.contains(e)).collect();
                let entity = *absent.choose(r).expect("inventory larger than any graph");
                let subject = r.gen_range(0..tree.entities.len());
                Some((subject, r.gen_range(0..inv.relations.len()), entity))
            } else {
                None
            };
            let text = realize(&tree, &inv, variant, skip, extra);
            let graph = graph_of(&tree, &inv, r);
            Example::new(format!("noisy-{:06}", i + 1), graph, vec![text])
        })
        .collect();

    Ok((Corpus::new("synthetic-clean", clean), Corpus::new("synthetic-noisy", noisy)))
}

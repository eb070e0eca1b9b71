//! Word-level vocabulary and the encoders that carry role/level indices
//! through to model inputs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Corpus, OBJECT_MARKER, PREDICATE_MARKER, SUBJECT_MARKER};
use crate::linearize::{LinearizedInput, SegmentRole};

pub const PAD_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const UNK_ID: u32 = 3;
pub const SUBJECT_ID: u32 = 4;
pub const PREDICATE_ID: u32 = 5;
pub const OBJECT_ID: u32 = 6;

pub const RESERVED: [&str; 7] = [
    "<pad>",
    "<s>",
    "</s>",
    "<unk>",
    SUBJECT_MARKER,
    PREDICATE_MARKER,
    OBJECT_MARKER,
];

pub const DEFAULT_MAX_SOURCE_LENGTH: usize = 100;
pub const DEFAULT_MAX_TARGET_LENGTH: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_entries(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (id, (tok, _)) in entries.iter().enumerate() {
            if index.insert(tok.clone(), id as u32).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary token `{tok}`")));
            }
        }
        for (id, r) in RESERVED.iter().enumerate() {
            if index.get(*r) != Some(&(id as u32)) {
                return Err(Error::Config(format!("reserved token `{r}` must have id {id}")));
            }
        }
        let (tokens, freqs) = entries.into_iter().unzip();
        Ok(Vocabulary { tokens, freqs, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn frequency(&self, id: u32) -> Option<u64> {
        self.freqs.get(id as usize).copied()
    }

    /// `<id>\t<token>\t<frequency>` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, (tok, f)) in self.tokens.iter().zip(&self.freqs).enumerate() {
            let _ = writeln!(out, "{id}\t{tok}\t{f}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let bad = |m: &str| Error::Parse {
                line: line_no,
                message: m.to_string(),
            };
            let mut parts = line.split('\t');
            let (Some(id), Some(tok), Some(freq), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad("expected `<id>\\t<token>\\t<frequency>`"));
            };
            let id: usize = id.parse().map_err(|_| bad("bad id"))?;
            if id != entries.len() {
                return Err(bad("ids must be consecutive from 0"));
            }
            let freq: u64 = freq.parse().map_err(|_| bad("bad frequency"))?;
            entries.push((tok.to_string(), freq));
        }
        Self::from_entries(entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Builds the vocabulary from source phrases and reference words of every
/// corpus. Words seen fewer than `min_freq` times are left out and encode as
/// UNK. Order: reserved tokens, then frequency descending, then lexicographic.
pub fn build_vocab(corpora: &[&Corpus], min_freq: u64) -> Result<Vocabulary> {
    build_vocab_with_prefix(corpora, min_freq, &[])
}

/// As [`build_vocab`], also counting an optional task prefix once per example.
pub fn build_vocab_with_prefix(
    corpora: &[&Corpus],
    min_freq: u64,
    prefix: &[String],
) -> Result<Vocabulary> {
    if corpora.is_empty() {
        return Err(Error::Config("build_vocab needs at least one corpus".into()));
    }
    if min_freq == 0 {
        return Err(Error::Config("min_freq must be positive".into()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for corpus in corpora {
        for ex in &corpus.examples {
            for w in prefix {
                *counts.entry(w.as_str()).or_default() += 1;
            }
            for t in ex.graph.iter() {
                *counts.entry(SUBJECT_MARKER).or_default() += 1;
                *counts.entry(PREDICATE_MARKER).or_default() += 1;
                *counts.entry(OBJECT_MARKER).or_default() += 1;
                for phrase in [&t.subject, &t.predicate, &t.object] {
                    for w in phrase.split_whitespace() {
                        *counts.entry(w).or_default() += 1;
                    }
                }
            }
            for r in &ex.references {
                for w in r.split_whitespace() {
                    *counts.entry(w).or_default() += 1;
                }
            }
        }
    }
    let mut entries: Vec<(String, u64)> = RESERVED
        .iter()
        .map(|r| (r.to_string(), counts.get(r).copied().unwrap_or(0)))
        .collect();
    let mut words: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|(w, c)| *c >= min_freq && !RESERVED.contains(w))
        .collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    entries.extend(words.into_iter().map(|(w, c)| (w.to_string(), c)));
    Vocabulary::from_entries(entries)
}

/// Model-ready source: three index streams of equal length.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EncodedInput {
    pub token_ids: Vec<u32>,
    pub role_ids: Vec<u32>,
    pub level_ids: Vec<u32>,
}

impl EncodedInput {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

pub fn encode_source(input: &LinearizedInput, vocab: &Vocabulary, max_source_length: usize) -> EncodedInput {
    encode_source_with_prefix(input, vocab, max_source_length, &[])
}

/// Prefix words are tagged `Subject` at level 0. Sequences longer than the
/// cap are cut at the last segment start that fits, so a marker is never
/// separated from the words it introduces.
pub fn encode_source_with_prefix(
    input: &LinearizedInput,
    vocab: &Vocabulary,
    max_source_length: usize,
    prefix: &[String],
) -> EncodedInput {
    let mut enc = EncodedInput::default();
    // (id, role, level, starts_segment)
    let mut items: Vec<(u32, u32, u32, bool)> = Vec::with_capacity(prefix.len() + input.len());
    for (i, w) in prefix.iter().enumerate() {
        items.push((vocab.id(w), SegmentRole::Subject.code() as u32, 0, i == 0));
    }
    for t in &input.tokens {
        items.push((vocab.id(&t.text), t.role.code() as u32, t.level as u32, t.is_marker()));
    }

    let keep = if items.len() <= max_source_length {
        items.len()
    } else {
        let boundary = (1..=max_source_length)
            .rev()
            .find(|&b| items[b].3)
            .unwrap_or(0);
        if boundary == 0 {
            max_source_length
        } else {
            boundary
        }
    };
    for &(id, role, level, _) in &items[..keep] {
        enc.token_ids.push(id);
        enc.role_ids.push(role);
        enc.level_ids.push(level);
    }
    enc
}

/// `[BOS, w_1 .. w_k, EOS]` with `k <= max_target_length`.
pub fn encode_target(text: &str, vocab: &Vocabulary, max_target_length: usize) -> Result<Vec<u32>> {
    if text.trim().is_empty() {
        return Err(Error::Config("cannot encode an empty target".into()));
    }
    let mut ids = vec![BOS_ID];
    ids.extend(text.split_whitespace().take(max_target_length).map(|w| vocab.id(w)));
    ids.push(EOS_ID);
    Ok(ids)
}

pub fn decode(ids: &[u32], vocab: &Vocabulary) -> Result<String> {
    let mut words = Vec::with_capacity(ids.len());
    for &id in ids {
        let tok = vocab.token(id).ok_or(Error::OutOfRange {
            what: "vocabulary",
            index: id as usize,
            size: vocab.len(),
        })?;
        if !matches!(id, PAD_ID | BOS_ID | EOS_ID) {
            words.push(tok);
        }
    }
    Ok(words.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Example, KnowledgeGraph, Triple};
    use crate::linearize::linearize;

    fn corpus(refs: &[&str]) -> Corpus {
        let ex = refs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Example::new(
                    format!("e{i}"),
                    KnowledgeGraph::new(vec![Triple::new("x", "y", "z")]),
                    vec![r.to_string()],
                )
            })
            .collect();
        Corpus::new("train", ex)
    }

    #[test]
    fn min_freq_threshold() {
        let c = corpus(&["a a a a a b"]);
        let v = build_vocab(&[&c], 2).unwrap();
        assert!(v.contains("a"));
        assert!(!v.contains("b"));
        assert_eq!(v.id("b"), UNK_ID);
        let v1 = build_vocab(&[&c], 1).unwrap();
        assert!(v1.contains("b"));
        assert_eq!(v1.len(), 7 + 5); // a b x y z
    }

    #[test]
    fn ordering_is_frequency_then_lexicographic() {
        let c = corpus(&["b b c a a"]);
        let v = build_vocab(&[&c], 1).unwrap();
        let words: Vec<&str> = (7..v.len() as u32).map(|i| v.token(i).unwrap()).collect();
        assert_eq!(words, vec!["a", "b", "c", "x", "y", "z"]);
        assert_eq!(build_vocab(&[&c], 1).unwrap(), v);
    }

    #[test]
    fn reserved_ids_are_fixed() {
        let v = build_vocab(&[&corpus(&["q"])], 1).unwrap();
        for (i, r) in RESERVED.iter().enumerate() {
            assert_eq!(v.id(r), i as u32);
        }
        assert!(build_vocab(&[], 1).is_err());
    }

    #[test]
    fn target_encoding() {
        let v = build_vocab(&[&corpus(&["a b"])], 1).unwrap();
        let ids = encode_target("a b", &v, 100).unwrap();
        assert_eq!(ids, vec![BOS_ID, v.id("a"), v.id("b"), EOS_ID]);
        assert!(encode_target("  ", &v, 100).is_err());
        let long = vec!["a"; 200].join(" ");
        assert_eq!(encode_target(&long, &v, 100).unwrap().len(), 102);
        assert_eq!(decode(&[BOS_ID, v.id("a"), EOS_ID], &v).unwrap(), "a");
        assert_eq!(decode(&[BOS_ID, EOS_ID], &v).unwrap(), "");
        assert!(decode(&[999], &v).is_err());
    }

    #[test]
    fn source_encoding_keeps_annotations_and_maps_unknowns() {
        let v = build_vocab(&[&corpus(&["a"])], 1).unwrap();
        let g = KnowledgeGraph::new(vec![Triple::new("x q", "y", "z")]);
        let lin = linearize(&g, 8).unwrap();
        let enc = encode_source(&lin, &v, 100);
        assert_eq!(enc.len(), 7);
        assert_eq!(enc.token_ids[2], UNK_ID);
        assert_eq!(enc.role_ids, vec![0, 0, 0, 1, 1, 2, 2]);
        assert_eq!(enc.level_ids, vec![0; 7]);
    }

    #[test]
    fn truncation_respects_segment_boundaries() {
        // 24 triples of 4 tokens each + long tail: build a graph whose token
        // 99 (index 98) is `|P` and whose P segment crosses the cap.
        let mut triples: Vec<Triple> = (0..8)
            .map(|i| Triple::new(format!("s{i}"), "p", format!("o{i} a b c d e f")))
            .collect(); // 12 tokens each -> 96 tokens
        triples.push(Triple::new("s8", "p1 p2 p3 p4", "o")); // |S at 96, s8 at 97, |P at 98
        let g = KnowledgeGraph::new(triples);
        let lin = linearize(&g, 8).unwrap();
        assert_eq!(lin.tokens[98].text, "|P");
        let v = build_vocab(&[&corpus(&["a"])], 1).unwrap();
        let enc = encode_source(&lin, &v, 100);
        assert_eq!(enc.len(), 98);
        // an oversize first segment falls back to a hard cut
        let huge = KnowledgeGraph::new(vec![Triple::new(vec!["w"; 150].join(" "), "p", "o")]);
        let enc = encode_source(&linearize(&huge, 8).unwrap(), &v, 100);
        assert_eq!(enc.len(), 100);
    }

    #[test]
    fn prefix_is_subject_level_zero() {
        let prefix: Vec<String> = "translate RDF to English:".split(' ').map(String::from).collect();
        let c = corpus(&["a"]);
        let v = build_vocab_with_prefix(&[&c], 1, &prefix).unwrap();
        let lin = linearize(&c.examples[0].graph, 8).unwrap();
        let enc = encode_source_with_prefix(&lin, &v, 100, &prefix);
        assert_eq!(enc.len(), 4 + 6);
        assert_eq!(enc.token_ids[0], v.id("translate"));
        assert!(enc.role_ids[..4].iter().all(|&r| r == 0));
        assert!(enc.level_ids[..4].iter().all(|&l| l == 0));
    }

    #[test]
    fn text_roundtrip_and_rejects_bad_files() {
        let v = build_vocab(&[&corpus(&["a b b"])], 1).unwrap();
        assert_eq!(Vocabulary::from_text(&v.to_text()).unwrap(), v);
        assert!(Vocabulary::from_text("0\t<pad>\t0\n2\t<s>\t0\n").is_err());
        assert!(Vocabulary::from_text("0\tfoo\t0\n").is_err());
    }
}

//! Corpus files: canonical JSON lines, the flat marker format, split
//! statistics and the synthetic corpus generator.

pub mod synth;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Corpus, Example, KnowledgeGraph, Triple};

pub use synth::{generate_synthetic, SynthConfig};

fn split_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Display form of a raw WebNLG-style phrase: underscores become spaces,
/// one pair of enclosing double quotes is dropped, whitespace is collapsed.
pub fn normalize_phrase(raw: &str) -> String {
    let spaced = raw.replace('_', " ");
    let t = spaced.trim();
    let t = match t.strip_prefix('"').and_then(|x| x.strip_suffix('"')) {
        Some(inner) => inner,
        None => t,
    };
    t.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses JSON-lines text. Blank lines are skipped; errors carry 1-based
/// line numbers.
pub fn parse_jsonl(text: &str, split_name: &str) -> Result<Corpus> {
    let mut examples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut ex: Example = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        for t in &mut ex.graph.triples {
            for field in [&mut t.subject, &mut t.predicate, &mut t.object] {
                *field = normalize_phrase(field);
            }
        }
        examples.push(ex);
    }
    let corpus = Corpus::new(split_name, examples);
    corpus.validate()?;
    Ok(corpus)
}

pub fn load_jsonl(path: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, &split_name(path))
}

/// One compact JSON object per example, LF-terminated.
pub fn to_jsonl(corpus: &Corpus) -> Result<String> {
    let mut out = String::new();
    for ex in &corpus.examples {
        out.push_str(&serde_json::to_string(ex)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    std::fs::write(path, to_jsonl(corpus)?).map_err(|e| Error::io(path, e))
}

const MARKER_STYLES: [[&str; 3]; 2] = [["|S", "|P", "|O"], ["S|", "P|", "O|"]];

/// Parses one line holding one or more `S| s P| r O| o` (or `|S s |P r |O o`)
/// groups. Markers must be whitespace-separated.
pub fn parse_flat_line(line: &str) -> std::result::Result<Vec<Triple>, String> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let style = MARKER_STYLES
        .iter()
        .find(|m| words.first() == Some(&m[0]))
        .ok_or_else(|| format!("missing subject marker in `{line}`"))?;
    let other = MARKER_STYLES.iter().find(|m| *m != style).expect("two styles");
    if words.iter().any(|w| other.contains(w)) {
        return Err(format!("mixed marker styles in `{line}`"));
    }
    let mut triples = Vec::new();
    let mut fields: [Vec<&str>; 3] = Default::default();
    let mut slot: usize = 0;
    for (i, &w) in words.iter().enumerate() {
        if let Some(m) = style.iter().position(|&s| s == w) {
            let expected = if i == 0 { 0 } else { (slot + 1) % 3 };
            if m != expected {
                return Err(format!("unexpected marker `{w}` in `{line}`"));
            }
            if m == 0 && i > 0 {
                triples.push(take_triple(&mut fields, line)?);
            }
            slot = m;
        } else {
            fields[slot].push(w);
        }
    }
    if slot != 2 {
        return Err(format!("missing {} marker in `{line}`", style[slot + 1]));
    }
    triples.push(take_triple(&mut fields, line)?);
    Ok(triples)
}

fn take_triple(fields: &mut [Vec<&str>; 3], line: &str) -> std::result::Result<Triple, String> {
    let [s, r, o] = std::mem::take(fields).map(|f| normalize_phrase(&f.join(" ")));
    if s.is_empty() || r.is_empty() || o.is_empty() {
        return Err(format!("empty field in `{line}`"));
    }
    Ok(Triple::new(s, r, o))
}

/// Parses a block with one triple group per non-blank line.
pub fn parse_flat_format(block: &str) -> Result<KnowledgeGraph> {
    let mut triples = Vec::new();
    for (i, line) in block.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        triples.extend(parse_flat_line(line).map_err(|message| Error::Parse { line: i + 1, message })?);
    }
    Ok(KnowledgeGraph::new(triples))
}

/// Blank-line separated blocks of triple lines followed by `target: <text>`
/// lines. Example ids are `<split_name>-<block number>`.
pub fn parse_flat_corpus(text: &str, split_name: &str) -> Result<Corpus> {
    let mut examples = Vec::new();
    let mut triples = Vec::new();
    let mut refs = Vec::new();
    let mut flush = |triples: &mut Vec<Triple>, refs: &mut Vec<String>, line: usize| -> Result<()> {
        if triples.is_empty() && refs.is_empty() {
            return Ok(());
        }
        if triples.is_empty() {
            return Err(Error::Parse {
                line,
                message: "block has targets but no triples".into(),
            });
        }
        let id = format!("{split_name}-{}", examples.len() + 1);
        examples.push(Example::new(id, KnowledgeGraph::new(std::mem::take(triples)), std::mem::take(refs)));
        Ok(())
    };
    let mut last = 0;
    for (i, line) in text.lines().enumerate() {
        last = i + 1;
        let t = line.trim();
        if t.is_empty() {
            flush(&mut triples, &mut refs, i + 1)?;
        } else if let Some(target) = t.strip_prefix("target:") {
            refs.push(target.trim().to_string());
        } else {
            if !refs.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "triple line after target lines; separate blocks with a blank line".into(),
                });
            }
            triples.extend(parse_flat_line(t).map_err(|message| Error::Parse { line: i + 1, message })?);
        }
    }
    flush(&mut triples, &mut refs, last)?;
    let corpus = Corpus::new(split_name, examples);
    corpus.validate()?;
    Ok(corpus)
}

pub const WEBNLG_2017_PAIRS: (usize, usize, usize) = (18102, 2268, 4928);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    /// Graph-description pairs per split.
    pub pairs: (usize, usize, usize),
    pub graphs: (usize, usize, usize),
    pub expected_pairs: (usize, usize, usize),
    pub matches_expected: bool,
}

impl fmt::Display for SplitCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b, c) = self.pairs;
        let (x, y, z) = self.expected_pairs;
        write!(f, "pairs train/dev/test = {a}/{b}/{c} (expected {x}/{y}/{z}): ")?;
        f.write_str(if self.matches_expected { "match" } else { "mismatch" })
    }
}

/// Informational comparison against the WebNLG 2017 split sizes.
pub fn verify_split_counts(train: &Corpus, dev: &Corpus, test: &Corpus) -> SplitCounts {
    let pairs = |c: &Corpus| c.examples.iter().map(|e| e.references.len()).sum::<usize>();
    let p = (pairs(train), pairs(dev), pairs(test));
    SplitCounts {
        pairs: p,
        graphs: (train.len(), dev.len(), test.len()),
        expected_pairs: WEBNLG_2017_PAIRS,
        matches_expected: p == WEBNLG_2017_PAIRS,
    }
}

/// Splits off the first `n` examples.
pub fn split_at(corpus: &Corpus, n: usize, first_name: &str, second_name: &str) -> (Corpus, Corpus) {
    let n = n.min(corpus.len());
    (
        Corpus::new(first_name, corpus.examples[..n].to_vec()),
        Corpus::new(second_name, corpus.examples[n..].to_vec()),
    )
}

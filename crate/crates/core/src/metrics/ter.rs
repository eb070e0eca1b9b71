//! Translation edit rate with greedy block shifts, following tercom's
//! candidate filtering and ranking.

use std::collections::HashMap;

use super::tokenize;
use crate::error::{Error, Result};

const MAX_SHIFT_SIZE: usize = 10;
const MAX_SHIFT_DIST: usize = 50;
const BEAM_WIDTH: usize = 25;
const MAX_SHIFT_CANDIDATES: usize = 1000;
const INF: u64 = 1 << 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Nop,
    Sub,
    Ins,
    Del,
    Undef,
}

/// Edit distance turning `hyp` into `reference` and the operation trace,
/// computed on a band around the length-scaled diagonal.
fn edit_distance(hyp: &[&str], reference: &[&str]) -> (u64, Vec<Op>) {
    let (nh, nr) = (hyp.len(), reference.len());
    let mut dist = vec![vec![(INF, Op::Undef); nr + 1]; nh + 1];
    for (j, cell) in dist[0].iter_mut().enumerate() {
        *cell = (j as u64, Op::Ins);
    }
    let ratio = if nh > 0 { nr as f64 / nh as f64 } else { 1.0 };
    let beam = if (BEAM_WIDTH as f64) < ratio / 2.0 {
        (ratio / 2.0 + BEAM_WIDTH as f64).ceil() as usize
    } else {
        BEAM_WIDTH
    };
    for i in 1..=nh {
        let diag = (i as f64 * ratio).floor() as usize;
        let min_j = diag.saturating_sub(beam);
        let max_j = if i == nh { nr + 1 } else { (nr + 1).min(diag + beam) };
        for j in min_j..max_j {
            if j == 0 {
                dist[i][0] = (dist[i - 1][0].0 + 1, Op::Del);
                continue;
            }
            let (cost, op) = if hyp[i - 1] == reference[j - 1] {
                (0, Op::Nop)
            } else {
                (1, Op::Sub)
            };
            // preference order: match or substitution, deletion, insertion
            let options = [
                (dist[i - 1][j - 1].0 + cost, op),
                (dist[i - 1][j].0 + 1, Op::Del),
                (dist[i][j - 1].0 + 1, Op::Ins),
            ];
            for (c, o) in options {
                if dist[i][j].0 > c {
                    dist[i][j] = (c, o);
                }
            }
        }
    }
    let mut trace = Vec::new();
    let (mut i, mut j) = (nh, nr);
    while i > 0 || j > 0 {
        let op = dist[i][j].1;
        trace.push(op);
        match op {
            Op::Nop | Op::Sub => {
                i -= 1;
                j -= 1;
            }
            Op::Ins => j -= 1,
            Op::Del => i -= 1,
            Op::Undef => unreachable!("trace through an unfilled cell"),
        }
    }
    trace.reverse();
    (dist[nh][nr].0, trace)
}

/// Alignment from reference positions to hypothesis positions, and error
/// flags on each side, read from the flipped trace.
fn alignment(trace: &[Op]) -> (HashMap<usize, isize>, Vec<u8>, Vec<u8>) {
    let (mut ph, mut pr) = (-1isize, -1isize);
    let mut align = HashMap::new();
    let (mut ref_err, mut hyp_err) = (Vec::new(), Vec::new());
    for &op in trace {
        // flipped: insertions become deletions and vice versa
        match op {
            Op::Nop | Op::Sub => {
                ph += 1;
                pr += 1;
                align.insert(pr as usize, ph);
                let e = u8::from(op == Op::Sub);
                hyp_err.push(e);
                ref_err.push(e);
            }
            Op::Del => {
                ph += 1;
                hyp_err.push(1);
            }
            Op::Ins => {
                pr += 1;
                align.insert(pr as usize, ph);
                ref_err.push(1);
            }
            Op::Undef => unreachable!(),
        }
    }
    (align, ref_err, hyp_err)
}

/// Slice with Python semantics: bounds clamp, and an inverted range is empty.
fn clamped<'b, 'a>(words: &'b [&'a str], lo: usize, hi: usize) -> &'b [&'a str] {
    let hi = hi.min(words.len());
    &words[lo.min(hi)..hi]
}

fn perform_shift<'a>(words: &[&'a str], start: usize, len: usize, target: usize) -> Vec<&'a str> {
    let n = words.len();
    let parts = if target < start {
        [(0, target), (start, start + len), (target, start), (start + len, n)]
    } else if target > start + len {
        [(0, start), (start + len, target), (start, start + len), (target, n)]
    } else {
        [(0, start), (start + len, len + target), (start, start + len), (len + target, n)]
    };
    let mut out = Vec::with_capacity(n);
    for (lo, hi) in parts {
        out.extend_from_slice(clamped(words, lo, hi));
    }
    out
}

/// `(h_start, r_start, len)` for every common run, shortest first per start pair.
fn shifted_pairs(h: &[&str], r: &[&str]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for sh in 0..h.len() {
        for sr in 0..r.len() {
            if sr.abs_diff(sh) > MAX_SHIFT_DIST {
                continue;
            }
            let mut len = 0;
            while h[sh + len] == r[sr + len] && len < MAX_SHIFT_SIZE {
                len += 1;
                out.push((sh, sr, len));
                if h.len() == sh + len || r.len() == sr + len {
                    break;
                }
            }
        }
    }
    out
}

/// Best single shift: `(gain, shifted words, candidates checked so far)`.
fn best_shift<'a>(h: &[&'a str], r: &[&str], mut checked: usize) -> (i64, Vec<&'a str>, usize) {
    let (pre, trace) = edit_distance(h, r);
    let (align, ref_err, hyp_err) = alignment(&trace);
    // (gain, len, -start_h, -target, words)
    let mut best: Option<(i64, usize, isize, isize, Vec<&str>)> = None;
    for (sh, sr, len) in shifted_pairs(h, r) {
        if hyp_err[sh..sh + len].iter().all(|&e| e == 0) {
            continue;
        }
        if ref_err[sr..sr + len].iter().all(|&e| e == 0) {
            continue;
        }
        let a = align[&sr];
        if sh as isize <= a && a < (sh + len) as isize {
            continue;
        }
        let mut prev: isize = -1;
        for offset in -1..len as isize {
            let pos = sr as isize + offset;
            let idx = if pos == -1 {
                0
            } else if let Some(&a) = align.get(&(pos as usize)) {
                a + 1
            } else {
                break;
            };
            if idx == prev {
                continue;
            }
            prev = idx;
            let shifted = perform_shift(h, sh, len, idx as usize);
            let gain = pre as i64 - edit_distance(&shifted, r).0 as i64;
            let cand = (gain, len, -(sh as isize), -idx, shifted);
            checked += 1;
            let better = match &best {
                None => true,
                Some(b) => (cand.0, cand.1, cand.2, cand.3, &cand.4) > (b.0, b.1, b.2, b.3, &b.4),
            };
            if better {
                best = Some(cand);
            }
        }
        if checked >= MAX_SHIFT_CANDIDATES {
            break;
        }
    }
    match best {
        None => (0, h.to_vec(), checked),
        Some((gain, _, _, _, words)) => (gain, words, checked),
    }
}

/// `(edits, reference length)` for pre-tokenized input.
pub fn ter_edits_tokens(hyp: &[&str], reference: &[&str]) -> (u64, usize) {
    if reference.is_empty() {
        return (hyp.len() as u64, 0);
    }
    let mut words = hyp.to_vec();
    let mut shifts = 0;
    let mut checked = 0;
    loop {
        let (gain, shifted, c) = best_shift(&words, reference, checked);
        checked = c;
        if checked >= MAX_SHIFT_CANDIDATES || gain <= 0 {
            break;
        }
        shifts += 1;
        words = shifted;
    }
    (shifts + edit_distance(&words, reference).0, reference.len())
}

/// `(edits, reference length)` after lowercasing and whitespace splitting.
pub fn ter_edits(prediction: &str, reference: &str) -> Result<(u64, usize)> {
    let (h, r) = (tokenize(prediction), tokenize(reference));
    if r.is_empty() {
        return Err(Error::Metric("TER reference is empty".into()));
    }
    let h: Vec<&str> = h.iter().map(String::as_str).collect();
    let r: Vec<&str> = r.iter().map(String::as_str).collect();
    Ok(ter_edits_tokens(&h, &r))
}

pub fn ter(prediction: &str, reference: &str) -> Result<f64> {
    let (e, n) = ter_edits(prediction, reference)?;
    Ok(e as f64 / n as f64)
}

/// Per-example `(edits, reference length)` against several references: the
/// fewest edits, over the mean reference length.
pub fn ter_multi(prediction: &str, references: &[impl AsRef<str>]) -> Result<(f64, f64)> {
    if references.is_empty() {
        return Err(Error::Metric("TER needs at least one reference".into()));
    }
    let mut best = u64::MAX;
    let mut total_len = 0usize;
    for r in references {
        let (e, n) = ter_edits(prediction, r.as_ref())?;
        best = best.min(e);
        total_len += n;
    }
    Ok((best as f64, total_len as f64 / references.len() as f64))
}

/// Total edits over total reference length.
pub fn corpus_ter<S: AsRef<str>, R: AsRef<str>>(predictions: &[S], references: &[Vec<R>]) -> Result<(f64, Vec<f64>)> {
    if predictions.len() != references.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} reference sets",
            predictions.len(),
            references.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Metric("no predictions".into()));
    }
    let (mut edits, mut len) = (0.0, 0.0);
    let mut per = Vec::with_capacity(predictions.len());
    for (p, r) in predictions.iter().zip(references) {
        let (e, n) = ter_multi(p.as_ref(), r)?;
        edits += e;
        len += n;
        per.push(e / n);
    }
    Ok((edits / len, per))
}

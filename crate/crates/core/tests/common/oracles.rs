//! Independent reference computations used as test oracles.

use std::collections::HashMap;

fn words(s: &str) -> Vec<String> {
    s.to_lowercase().split_whitespace().map(String::from).collect()
}

fn count(seq: &[String], gram: &[String]) -> usize {
    if seq.len() < gram.len() {
        return 0;
    }
    (0..=seq.len() - gram.len()).filter(|&i| &seq[i..i + gram.len()] == gram).count()
}

/// Corpus BLEU (percent) by direct n-gram counting with linear scans.
pub fn brute_bleu(preds: &[String], refs: &[Vec<String>]) -> f64 {
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (p, rs) in preds.iter().zip(refs) {
        let h = words(p);
        let rs: Vec<Vec<String>> = rs.iter().map(|x| words(x)).collect();
        c += h.len();
        // closest reference length, shorter on ties
        let mut best = rs[0].len();
        for x in &rs {
            let (d, bd) = ((x.len() as i64 - h.len() as i64).abs(), (best as i64 - h.len() as i64).abs());
            if d < bd || (d == bd && x.len() < best) {
                best = x.len();
            }
        }
        r += best;
        for n in 1..=4 {
            if h.len() < n {
                continue;
            }
            totals[n - 1] += h.len() - n + 1;
            let mut seen: Vec<&[String]> = Vec::new();
            for i in 0..=h.len() - n {
                let g = &h[i..i + n];
                if seen.contains(&g) {
                    continue;
                }
                seen.push(g);
                let max_ref = rs.iter().map(|x| count(x, g)).max().unwrap_or(0);
                matches[n - 1] += count(&h, g).min(max_ref);
            }
        }
    }
    if c == 0 || matches.iter().any(|&m| m == 0) {
        return 0.0;
    }
    let log_p: f64 = (0..4).map(|i| (matches[i] as f64 / totals[i] as f64).ln()).sum::<f64>() / 4.0;
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * log_p.exp()
}

/// Every string over `alphabet` with length `0..=max_len`, shortest first.
pub fn all_strings(alphabet: &[&'static str], max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![vec![]];
    let mut layer: Vec<Vec<&'static str>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for &a in alphabet {
                let mut t = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

pub fn levenshtein(a: &[&str], b: &[&str]) -> usize {
    let mut d: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut prev = d[0];
        d[0] = i;
        for j in 1..=b.len() {
            let cur = d[j];
            d[j] = (d[j] + 1).min(d[j - 1] + 1).min(prev + usize::from(a[i - 1] != b[j - 1]));
            prev = cur;
        }
    }
    d[b.len()]
}

/// Minimum number of block moves turning `h` into each reachable string.
pub fn shift_closure(h: &[&'static str]) -> HashMap<Vec<&'static str>, usize> {
    let mut dist = HashMap::new();
    dist.insert(h.to_vec(), 0);
    let mut front = vec![h.to_vec()];
    let mut depth = 0;
    while !front.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for s in &front {
            let n = s.len();
            for i in 0..n {
                for j in i + 1..=n {
                    let block = &s[i..j];
                    let rest: Vec<&str> = s[..i].iter().chain(&s[j..]).copied().collect();
                    for k in 0..=rest.len() {
                        let mut t = rest[..k].to_vec();
                        t.extend_from_slice(block);
                        t.extend_from_slice(&rest[k..]);
                        if !dist.contains_key(&t) {
                            dist.insert(t.clone(), depth);
                            next.push(t);
                        }
                    }
                }
            }
        }
        front = next;
    }
    dist
}

/// Exhaustive minimum TER edits between every pair of strings over
/// `alphabet` up to `max_len` (non-empty references): for each hypothesis,
/// the cheapest shift sequence followed by insertions, deletions and
/// substitutions. Returns `(strings, edits[h][r])`.
pub fn exhaustive_ter_table(alphabet: &[&'static str], max_len: usize) -> (Vec<Vec<&'static str>>, Vec<Vec<u8>>) {
    let strings = all_strings(alphabet, max_len);
    let index: HashMap<&[&str], usize> = strings.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let lev: Vec<Vec<u8>> = strings
        .iter()
        .map(|a| strings.iter().map(|b| levenshtein(a, b) as u8).collect())
        .collect();
    let table = strings
        .iter()
        .map(|h| {
            let closure: Vec<(usize, usize)> = shift_closure(h).into_iter().map(|(t, d)| (index[t.as_slice()], d)).collect();
            (0..strings.len())
                .map(|r| closure.iter().map(|&(t, d)| d + lev[t][r] as usize).min().unwrap() as u8)
                .collect()
        })
        .collect();
    (strings, table)
}

/// Two-sided p-value of Student's t by Simpson integration of the density
/// after the substitution x = sqrt(df) tan(theta).
pub fn t_p_value_quadrature(t: f64, df: usize) -> f64 {
    let f = |theta: f64| theta.cos().powi(df as i32 - 1);
    let simpson = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half = std::f64::consts::FRAC_PI_2;
    let theta = (t.abs() / (df as f64).sqrt()).atan();
    let n = 200_000;
    simpson(theta, half, n) / simpson(0.0, half, n)
}

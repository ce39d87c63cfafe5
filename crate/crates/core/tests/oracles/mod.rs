//! Brute-force reference implementations used to check the library.
//! Nothing here calls the code paths it checks.
#![allow(dead_code)]

use std::collections::BTreeSet;

/// A loop as (member names starting at the smallest, per-link signs).
pub type CanonicalLoop = (Vec<String>, Vec<i8>);

/// All simple cycles by exhaustive DFS over vertex-distinct paths from every
/// start vertex, deduplicated after rotating each to its smallest member.
pub fn all_cycles(names: &[String], edges: &[(usize, usize, i8)]) -> BTreeSet<CanonicalLoop> {
    let n = names.len();
    let mut found = BTreeSet::new();
    for start in 0..n {
        let mut path = vec![start];
        let mut signs = Vec::new();
        dfs(start, names, edges, &mut path, &mut signs, &mut found);
    }
    found
}

fn dfs(
    start: usize,
    names: &[String],
    edges: &[(usize, usize, i8)],
    path: &mut Vec<usize>,
    signs: &mut Vec<i8>,
    found: &mut BTreeSet<CanonicalLoop>,
) {
    let last = *path.last().unwrap();
    for &(s, t, sign) in edges {
        if s != last {
            continue;
        }
        if t == start {
            signs.push(sign);
            found.insert(canonical(names, path, signs));
            signs.pop();
        } else if !path.contains(&t) {
            path.push(t);
            signs.push(sign);
            dfs(start, names, edges, path, signs, found);
            signs.pop();
            path.pop();
        }
    }
}

fn canonical(names: &[String], path: &[usize], signs: &[i8]) -> CanonicalLoop {
    let member: Vec<String> = path.iter().map(|&v| names[v].clone()).collect();
    let k = (0..member.len()).min_by(|&a, &b| member[a].cmp(&member[b])).unwrap();
    let mut m = member.clone();
    let mut s = signs.to_vec();
    m.rotate_left(k);
    s.rotate_left(k);
    (m, s)
}

/// Best total similarity over every partial one-to-one assignment.
pub fn best_assignment(weights: &[Vec<f64>], threshold: f64) -> f64 {
    fn go(i: usize, weights: &[Vec<f64>], threshold: f64, used: &mut Vec<bool>) -> f64 {
        if i == weights.len() {
            return 0.0;
        }
        let mut best = go(i + 1, weights, threshold, used);
        for j in 0..used.len() {
            if !used[j] && weights[i][j] >= threshold {
                used[j] = true;
                best = best.max(weights[i][j] + go(i + 1, weights, threshold, used));
                used[j] = false;
            }
        }
        best
    }
    let cols = weights.first().map_or(0, |r| r.len());
    go(0, weights, threshold, &mut vec![false; cols])
}

/// Plain dynamic-programming Levenshtein distance over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = table[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            table[i][j] = sub.min(table[i - 1][j] + 1).min(table[i][j - 1] + 1);
        }
    }
    table[a.len()][b.len()]
}

/// Link-level comparison by checking every generated link against every
/// truth link, given a name mapping generated -> truth.
/// Returns (lenient, strict) match counts.
pub fn pairwise_link_matches(
    generated: &[(String, String, i8)],
    truth: &[(String, String, i8)],
    mapping: &dyn Fn(&str) -> Option<String>,
) -> (usize, usize) {
    let mut lenient = 0;
    let mut strict = 0;
    for (gs, gt, gsign) in generated {
        for (ts, tt, tsign) in truth {
            if mapping(gs).as_deref() == Some(ts.as_str()) && mapping(gt).as_deref() == Some(tt.as_str()) {
                lenient += 1;
                if gsign == tsign {
                    strict += 1;
                }
            }
        }
    }
    (lenient, strict)
}

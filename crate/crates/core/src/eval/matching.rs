//! Optimal one-to-one alignment of generated and ground-truth variables.

use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use super::similarity::name_similarity;
use crate::diagram::CausalLoopDiagram;
use crate::name::VariableName;

const EPS: f64 = 1e-9;

/// Minimum similarity for two names to be paired, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Threshold(f64);

impl Threshold {
    pub const DEFAULT: Threshold = Threshold(0.8);

    pub fn new(value: f64) -> Option<Self> {
        (value > 0.0 && value <= 1.0).then_some(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedPair {
    pub generated: VariableName,
    pub truth: VariableName,
    pub similarity: f64,
}

/// Pairs are ordered by generated name; unmatched lists by name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeMatching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_generated: Vec<VariableName>,
    pub unmatched_truth: Vec<VariableName>,
}

impl NodeMatching {
    pub fn total_similarity(&self) -> f64 {
        self.pairs.iter().map(|p| p.similarity).sum()
    }

    /// Ground-truth partner of a generated variable, by normalized name.
    pub fn truth_for(&self, generated: &str) -> Option<&VariableName> {
        self.pairs
            .iter()
            .find(|p| p.generated.normalized() == generated)
            .map(|p| &p.truth)
    }
}

fn sorted_names(d: &CausalLoopDiagram) -> Vec<&VariableName> {
    let mut names: Vec<&VariableName> = d.variables().iter().collect();
    names.sort_by(|a, b| a.normalized().cmp(b.normalized()));
    names
}

/// Maximum-total-similarity matching over pairs at or above `threshold`.
///
/// Among optimal matchings, the one chosen is found by walking candidate
/// pairs in `(generated, truth)` normalized-name order and keeping each pair
/// that can still be completed to an optimum.
pub fn match_nodes(
    generated: &CausalLoopDiagram,
    truth: &CausalLoopDiagram,
    threshold: Threshold,
) -> NodeMatching {
    let gen = sorted_names(generated);
    let tru = sorted_names(truth);
    let weights: Vec<Vec<Option<f64>>> = gen
        .iter()
        .map(|g| {
            tru.iter()
                .map(|t| {
                    let s = name_similarity(g.normalized(), t.normalized());
                    (s >= threshold.value()).then_some(s)
                })
                .collect()
        })
        .collect();

    let all_rows: Vec<usize> = (0..gen.len()).collect();
    let all_cols: Vec<usize> = (0..tru.len()).collect();
    let optimum = max_weight(&weights, &all_rows, &all_cols);

    let mut row_free = vec![true; gen.len()];
    let mut col_free = vec![true; tru.len()];
    let mut fixed_weight = 0.0;
    let mut chosen = Vec::new();
    for i in 0..gen.len() {
        for j in 0..tru.len() {
            let Some(w) = weights[i][j] else { continue };
            if !row_free[i] || !col_free[j] {
                continue;
            }
            let rows: Vec<usize> = all_rows.iter().copied().filter(|&r| row_free[r] && r != i).collect();
            let cols: Vec<usize> = all_cols.iter().copied().filter(|&c| col_free[c] && c != j).collect();
            if fixed_weight + w + max_weight(&weights, &rows, &cols) >= optimum - EPS {
                row_free[i] = false;
                col_free[j] = false;
                fixed_weight += w;
                chosen.push((i, j, w));
            }
        }
    }

    NodeMatching {
        pairs: chosen
            .into_iter()
            .map(|(i, j, w)| MatchedPair {
                generated: gen[i].clone(),
                truth: tru[j].clone(),
                similarity: w,
            })
            .collect(),
        unmatched_generated: (0..gen.len())
            .filter(|&i| row_free[i])
            .map(|i| gen[i].clone())
            .collect(),
        unmatched_truth: (0..tru.len())
            .filter(|&j| col_free[j])
            .map(|j| tru[j].clone())
            .collect(),
    }
}

/// Value of a maximum-weight matching restricted to `rows` x `cols`, where
/// `None` entries are non-edges. Hungarian algorithm on the square padding
/// with unmatched cells worth zero.
fn max_weight(weights: &[Vec<Option<f64>>], rows: &[usize], cols: &[usize]) -> f64 {
    let n = rows.len().max(cols.len());
    if n == 0 {
        return 0.0;
    }
    let cost = |r: usize, c: usize| -> f64 {
        match (rows.get(r), cols.get(c)) {
            (Some(&i), Some(&j)) => -weights[i][j].unwrap_or(0.0),
            _ => 0.0,
        }
    };
    // 1-based potentials formulation; p[col] is the row assigned to col.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        p[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| -cost(p[j] - 1, j - 1)).sum()
}

//! Scoring a generated diagram against ground truth.
//!
//! Variables are aligned by [`match_nodes`]. A generated link counts as a
//! lenient match when both endpoints are aligned and the ground truth has a
//! link between the partners in the same direction; a strict match also
//! needs the same polarity. Loops are compared as `(length, kind)` multisets.
//!
//! Empty sides follow one convention throughout: precision over zero
//! generated items is 1.0, recall over zero truth items is 1.0, and F1 is 0
//! whenever precision + recall is 0.

mod aggregate;
mod matching;
mod similarity;

pub use aggregate::{batch_report, AggregateMetrics, AggregateReport, AlignmentError, ItemOutcome, ItemReport};
pub use matching::{match_nodes, MatchedPair, NodeMatching, Threshold};
pub use similarity::{edit_distance, name_similarity};

use alloc::vec::Vec;

use serde::Serialize;

use crate::diagram::CausalLoopDiagram;
use crate::loops::{enumerate_loops, LoopKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// From `matched` hits out of `predicted` generated and `actual` truth items.
    pub fn from_counts(matched: usize, predicted: usize, actual: usize) -> Self {
        let precision = ratio(matched, predicted);
        let recall = ratio(matched, actual);
        Self::from_pr(precision, recall)
    }

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

fn ratio(hits: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        hits as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LinkCounts {
    pub generated: usize,
    pub truth: usize,
    pub lenient_matches: usize,
    pub strict_matches: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoopComparison {
    /// Sorted `(length, kind)` pairs.
    pub generated: Vec<(usize, LoopKind)>,
    pub truth: Vec<(usize, LoopKind)>,
    pub loop_count_match: bool,
    pub loop_kind_multiset_match: bool,
    /// Set when either diagram exceeded the loop enumeration cap; the lists
    /// are then empty and both flags false.
    pub overflow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub node: Prf,
    pub link_strict: Prf,
    pub link_lenient: Prf,
    /// Strict over lenient link matches; `None` without lenient matches.
    pub polarity_accuracy: Option<f64>,
    pub link_counts: LinkCounts,
    pub loops: LoopComparison,
    pub matching: NodeMatching,
}

fn loop_signature(d: &CausalLoopDiagram) -> Option<Vec<(usize, LoopKind)>> {
    let mut sig: Vec<(usize, LoopKind)> = enumerate_loops(d)
        .ok()?
        .iter()
        .map(|l| (l.len(), l.kind()))
        .collect();
    sig.sort_unstable();
    Some(sig)
}

fn compare_loops(generated: &CausalLoopDiagram, truth: &CausalLoopDiagram) -> LoopComparison {
    match (loop_signature(generated), loop_signature(truth)) {
        (Some(generated), Some(truth)) => LoopComparison {
            loop_count_match: generated.len() == truth.len(),
            loop_kind_multiset_match: generated == truth,
            generated,
            truth,
            overflow: false,
        },
        _ => LoopComparison {
            generated: Vec::new(),
            truth: Vec::new(),
            loop_count_match: false,
            loop_kind_multiset_match: false,
            overflow: true,
        },
    }
}

pub fn evaluate(
    generated: &CausalLoopDiagram,
    truth: &CausalLoopDiagram,
    threshold: Threshold,
) -> EvalReport {
    let matching = match_nodes(generated, truth, threshold);
    let node = Prf::from_counts(
        matching.pairs.len(),
        generated.variables().len(),
        truth.variables().len(),
    );

    let mut lenient = 0;
    let mut strict = 0;
    for link in generated.links() {
        let (s, t) = link.key();
        let (Some(ms), Some(mt)) = (matching.truth_for(s), matching.truth_for(t)) else {
            continue;
        };
        if let Some(polarity) = truth.link_polarity(ms.normalized(), mt.normalized()) {
            lenient += 1;
            if polarity == link.polarity {
                strict += 1;
            }
        }
    }
    let link_counts = LinkCounts {
        generated: generated.links().len(),
        truth: truth.links().len(),
        lenient_matches: lenient,
        strict_matches: strict,
    };

    EvalReport {
        node,
        link_strict: Prf::from_counts(strict, link_counts.generated, link_counts.truth),
        link_lenient: Prf::from_counts(lenient, link_counts.generated, link_counts.truth),
        polarity_accuracy: (lenient > 0).then(|| strict as f64 / lenient as f64),
        link_counts,
        loops: compare_loops(generated, truth),
        matching,
    }
}

//! Corpus-level scoring of a batch of generations.

use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;
use thiserror::Error;

use super::{evaluate, EvalReport, Prf, Threshold};
use crate::corpus::Corpus;
use crate::diagram::CausalLoopDiagram;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("{records} records for {items} corpus items")]
    Length { records: usize, items: usize },
    #[error("record {index} is for {found:?} but corpus item {index} is {expected:?}")]
    Id {
        index: usize,
        expected: String,
        found: String,
    },
}

/// What generation produced for one corpus item.
#[derive(Debug, Clone, Copy)]
pub struct ItemOutcome<'a> {
    pub id: &'a str,
    /// `None` when no digraph came back.
    pub diagram: Option<&'a CausalLoopDiagram>,
    /// Transport or pipeline failure, if any.
    pub error: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemReport {
    pub id: String,
    pub metrics: EvalReport,
    pub no_digraph: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Unweighted means over items. `polarity_accuracy` averages only the items
/// where it is defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateMetrics {
    pub node: Prf,
    pub link_strict: Prf,
    pub link_lenient: Prf,
    pub polarity_accuracy: Option<f64>,
    pub loop_count_match_rate: f64,
    pub loop_kind_match_rate: f64,
    pub items: usize,
    pub no_digraph_count: usize,
    pub error_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub items: Vec<ItemReport>,
    pub aggregate: AggregateMetrics,
    pub threshold: Threshold,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn mean_prf<'a>(reports: &[&'a EvalReport], pick: impl Fn(&'a EvalReport) -> Prf) -> Prf {
    let prfs: Vec<Prf> = reports.iter().map(|r| pick(r)).collect();
    Prf {
        precision: mean(prfs.iter().map(|p| p.precision)).unwrap_or(0.0),
        recall: mean(prfs.iter().map(|p| p.recall)).unwrap_or(0.0),
        f1: mean(prfs.iter().map(|p| p.f1)).unwrap_or(0.0),
    }
}

/// Scores each outcome against its corpus item. Outcomes must follow corpus
/// order one-to-one; a missing diagram is scored as an empty one.
pub fn batch_report(
    outcomes: &[ItemOutcome<'_>],
    corpus: &Corpus,
    threshold: Threshold,
) -> Result<AggregateReport, AlignmentError> {
    if outcomes.len() != corpus.len() {
        return Err(AlignmentError::Length {
            records: outcomes.len(),
            items: corpus.len(),
        });
    }
    let empty = CausalLoopDiagram::empty();
    let mut items = Vec::with_capacity(outcomes.len());
    for (index, (outcome, item)) in outcomes.iter().zip(corpus.items()).enumerate() {
        if outcome.id != item.id {
            return Err(AlignmentError::Id {
                index,
                expected: item.id.clone(),
                found: String::from(outcome.id),
            });
        }
        let generated = outcome.diagram.unwrap_or(&empty);
        items.push(ItemReport {
            id: item.id.clone(),
            metrics: evaluate(generated, &item.ground_truth, threshold),
            no_digraph: outcome.diagram.is_none(),
            error: outcome.error.map(String::from),
        });
    }

    let reports: Vec<&EvalReport> = items.iter().map(|i| &i.metrics).collect();
    let rate = |flag: fn(&EvalReport) -> bool| {
        mean(reports.iter().map(|r| if flag(r) { 1.0 } else { 0.0 })).unwrap_or(0.0)
    };
    let aggregate = AggregateMetrics {
        node: mean_prf(&reports, |r| r.node),
        link_strict: mean_prf(&reports, |r| r.link_strict),
        link_lenient: mean_prf(&reports, |r| r.link_lenient),
        polarity_accuracy: mean(reports.iter().filter_map(|r| r.polarity_accuracy)),
        loop_count_match_rate: rate(|r| r.loops.loop_count_match),
        loop_kind_match_rate: rate(|r| r.loops.loop_kind_multiset_match),
        items: items.len(),
        no_digraph_count: items.iter().filter(|i| i.no_digraph).count(),
        error_count: items.iter().filter(|i| i.error.is_some()).count(),
    };
    Ok(AggregateReport {
        items,
        aggregate,
        threshold,
    })
}

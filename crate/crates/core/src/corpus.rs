//! Dynamic hypothesis / ground-truth diagram pairs.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use thiserror::Error;

use crate::diagram::CausalLoopDiagram;
use crate::dot::{parse_digraph, ParseMode};
use crate::loops::{enumerate_loops, LoopKind};
use crate::name::normalize_name;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("invalid item id {id:?}: ids are non-empty lowercase slugs")]
    InvalidId { id: String },
    #[error("duplicate item id {id:?}")]
    DuplicateId { id: String },
    #[error("item {id:?}: {message}")]
    Invalid { id: String, message: String },
}

impl CorpusError {
    fn invalid(id: &str, message: impl Into<String>) -> Self {
        CorpusError::Invalid {
            id: id.to_string(),
            message: message.into(),
        }
    }
}

/// One dynamic hypothesis with its expert diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusItem {
    pub id: String,
    pub dh: String,
    pub ground_truth: CausalLoopDiagram,
    pub source: String,
    /// `(length, kind)` of every loop in the ground truth, when recorded.
    pub expected_loops: Option<Vec<(usize, LoopKind)>>,
    /// Normalized `(source, target)` pairs whose polarity is uncertain.
    pub low_confidence_links: Vec<(String, String)>,
}

impl CorpusItem {
    /// Checks the item's own invariants.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let slug = !self.id.is_empty()
            && self
                .id
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_');
        if !slug {
            return Err(CorpusError::InvalidId {
                id: self.id.clone(),
            });
        }
        if self.dh.trim().is_empty() {
            return Err(CorpusError::invalid(&self.id, "dynamic hypothesis is empty"));
        }
        if let Some(expected) = &self.expected_loops {
            let mut actual = self
                .loop_signature()
                .map_err(|e| CorpusError::invalid(&self.id, e.to_string()))?;
            let mut expected = expected.clone();
            actual.sort_unstable();
            expected.sort_unstable();
            if actual != expected {
                return Err(CorpusError::invalid(
                    &self.id,
                    format!(
                        "expected_loops {} does not match ground truth loops {}",
                        describe_loops(&expected),
                        describe_loops(&actual)
                    ),
                ));
            }
        }
        for (s, t) in &self.low_confidence_links {
            if self.ground_truth.link_polarity(s, t).is_none() {
                return Err(CorpusError::invalid(
                    &self.id,
                    format!("low-confidence link \"{s}\" -> \"{t}\" is not in the ground truth"),
                ));
            }
        }
        Ok(())
    }

    /// `(length, kind)` for each ground-truth loop, in enumeration order.
    pub fn loop_signature(&self) -> Result<Vec<(usize, LoopKind)>, crate::loops::LoopError> {
        Ok(enumerate_loops(&self.ground_truth)?
            .iter()
            .map(|l| (l.len(), l.kind()))
            .collect())
    }
}

fn describe_loops(loops: &[(usize, LoopKind)]) -> String {
    let parts: Vec<String> = loops
        .iter()
        .map(|(len, kind)| format!("({len}, {kind})"))
        .collect();
    format!("[{}]", parts.join(", "))
}

/// A validated set of items with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    items: Vec<CorpusItem>,
}

impl Corpus {
    pub fn new(items: Vec<CorpusItem>) -> Result<Self, CorpusError> {
        let mut ids = alloc::collections::BTreeSet::new();
        for item in &items {
            item.validate()?;
            if !ids.insert(item.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    id: item.id.clone(),
                });
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[CorpusItem] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&CorpusItem> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

pub const RABBIT_DH: &str = "The larger the population, the greater the number of births. increases, the faster the population increases. The more the birth rate increases, the faster the population increases.";

pub const RABBIT_DIGRAPH: &str = r#"digraph { "births" -> "rabbit population" [arrowhead = vee] "rabbit population" -> "births"[arrowhead = vee] "birth fraction" -> "births"[arrowhead = vee] }"#;

pub const CIGARETTE_DH: &str = "The more my uncle smokes, the more addicted he becomes to the nicotine in his cigarettes. After smoking a few cigarettes a long time ago, my uncle began to develop a need for cigarettes. The need caused him to smoke even more, which produced an even stronger need to smoke. The reinforcing behavior in the addiction process is characteristic of positive feedback.";

const CIGARETTE_DIGRAPH: &str = r#"digraph {
"smoking" -> "need for cigarettes" [arrowhead = vee]
"need for cigarettes" -> "smoking" [arrowhead = vee]
"addiction time" -> "need for cigarettes" [arrowhead = vee]
}"#;

pub const CAR_INVENTORY_DH: &str = "Car production builds the inventory of cars at the dealer. A higher inventory leads to a lower market price, and lower market prices cause less car production in the future. If the price were to increase, the retail sale of cars would tend to fall. Retail sales drain the inventory of cars held in stock at the dealership. And a decline in the inventory will cause the dealers to raise their prices in the future.";

const CAR_INVENTORY_DIGRAPH: &str = r#"digraph {
"car production" -> "inventory" [arrowhead = vee]
"inventory" -> "market price" [arrowhead = tee]
"market price" -> "car production" [arrowhead = vee]
"market price" -> "retail sales" [arrowhead = tee]
"retail sales" -> "inventory" [arrowhead = tee]
}"#;

pub const ASSIGNMENT_BACKLOG_DH: &str = "The Assignment Backlog is increased by the Assignment Rate and decreased by the Completion Rate. Completion Rate is Workweek (hours per week) times Productivity (tasks completed per hour of effort) times the Effort Devoted to Assignments. Effort Devoted to Assignments is the effort put in by the student compared to the effort required to complete the assignment with high quality. If work pressure is high, the student may choose to cut corners, skim some reading, skip classes, or give less complete answers to the questions in assignments. For example, if a student works 50 hours per week and can do one task per hour with high quality but only does half the work each assignment requires for a good job, then the completion rate would be (50)(1)(.5) = 25 task equivalents per week. Work Pressure determines the workweek and effort devoted to assignments. Work pressure depends on the assignment backlog and the Time Remaining to complete the work: The bigger the backlog or the less time remaining, the higher the workweek needs to be to complete the work on time. Time remaining is of course simply the difference between the Due Date and the current Calendar Time. The two most basic options available to a student faced with high work pressure are to first, work longer hours, thus increasing the completion rate and reducing the backlog, or second, work faster by spending less time on each task, speeding the completion rate and reducing the backlog. Both are negative feedbacks whose goal is to reduce work pressure to a tolerable level.";

const ASSIGNMENT_BACKLOG_DIGRAPH: &str = r#"digraph {
"assignment rate" -> "assignment backlog" [arrowhead = vee]
"completion rate" -> "assignment backlog" [arrowhead = tee]
"workweek" -> "completion rate" [arrowhead = vee]
"productivity" -> "completion rate" [arrowhead = vee]
"effort devoted to assignments" -> "completion rate" [arrowhead = vee]
"work pressure" -> "workweek" [arrowhead = vee]
"work pressure" -> "effort devoted to assignments" [arrowhead = vee]
"assignment backlog" -> "work pressure" [arrowhead = vee]
"time remaining" -> "work pressure" [arrowhead = tee]
"due date" -> "time remaining" [arrowhead = vee]
"calendar time" -> "time remaining" [arrowhead = tee]
}"#;

fn golden(
    id: &str,
    dh: &str,
    digraph: &str,
    source: &str,
    expected_loops: Vec<(usize, LoopKind)>,
    low_confidence: &[(&str, &str)],
) -> CorpusItem {
    let ground_truth = parse_digraph(digraph, ParseMode::Strict)
        .expect("golden digraphs are well formed")
        .diagram;
    CorpusItem {
        id: id.to_string(),
        dh: dh.to_string(),
        ground_truth,
        source: source.to_string(),
        expected_loops: Some(expected_loops),
        low_confidence_links: low_confidence
            .iter()
            .map(|(s, t)| (normalize_name(s), normalize_name(t)))
            .collect(),
    }
}

/// The four fully printed hypothesis/diagram pairs.
///
/// `rabbit-population` is transcribed as printed. The other three ground
/// truths are derived one link per causal sentence of the hypothesis; the
/// `addiction time -> need for cigarettes` polarity is not stated in the
/// source and is marked low-confidence.
pub fn bundled_goldens() -> Corpus {
    use LoopKind::{Balancing, Reinforcing};
    let items = vec![
        golden(
            "rabbit-population",
            RABBIT_DH,
            RABBIT_DIGRAPH,
            "Meadows, D. H. (2009). Thinking in Systems: A Primer.",
            vec![(2, Reinforcing)],
            &[],
        ),
        golden(
            "cigarette-addiction",
            CIGARETTE_DH,
            CIGARETTE_DIGRAPH,
            "Meadows, D. H. (2009). Thinking in Systems: A Primer.",
            vec![(2, Reinforcing)],
            &[("addiction time", "need for cigarettes")],
        ),
        golden(
            "new-car-inventory",
            CAR_INVENTORY_DH,
            CAR_INVENTORY_DIGRAPH,
            "Ford, A. (1999). Modeling the Environment.",
            vec![(3, Balancing), (3, Balancing)],
            &[],
        ),
        golden(
            "assignment-backlog",
            ASSIGNMENT_BACKLOG_DH,
            ASSIGNMENT_BACKLOG_DIGRAPH,
            "Sterman, J. D. (2000). Business Dynamics, p. 164.",
            vec![(4, Balancing), (4, Balancing)],
            &[],
        ),
    ];
    Corpus::new(items).expect("bundled goldens are valid")
}

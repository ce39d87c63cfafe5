//! Causal loop diagrams: signed links between named variables.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::name::VariableName;

/// Sign of a causal link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    /// Variables move together; drawn with a `vee` arrowhead.
    Positive,
    /// Variables move in opposite directions; drawn with a `tee` arrowhead.
    Negative,
}

impl Polarity {
    /// DOT arrowhead keyword.
    pub fn arrowhead(self) -> &'static str {
        match self {
            Polarity::Positive => "vee",
            Polarity::Negative => "tee",
        }
    }

    pub fn from_arrowhead(value: &str) -> Option<Self> {
        match value {
            "vee" => Some(Polarity::Positive),
            "tee" => Some(Polarity::Negative),
            _ => None,
        }
    }

    /// +1 for positive links, -1 for negative ones.
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("duplicate link \"{source_name}\" -> \"{target_name}\"")]
    DuplicateLink {
        source_name: String,
        target_name: String,
    },
    #[error("link endpoint name is empty")]
    EmptyName,
}

/// A directed causal link. Self-loops are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Link {
    pub source: VariableName,
    pub target: VariableName,
    pub polarity: Polarity,
}

impl Link {
    pub fn new(source: &str, target: &str, polarity: Polarity) -> Result<Self, DiagramError> {
        Ok(Self {
            source: VariableName::new(source).ok_or(DiagramError::EmptyName)?,
            target: VariableName::new(target).ok_or(DiagramError::EmptyName)?,
            polarity,
        })
    }

    /// `(normalized source, normalized target)`
    pub fn key(&self) -> (&str, &str) {
        (self.source.normalized(), self.target.normalized())
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.polarity {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        };
        write!(f, "{} -({sign})-> {}", self.source, self.target)
    }
}

/// Variables plus at most one signed link per ordered variable pair.
///
/// Variables are the link endpoints in first-appearance order. Values are
/// immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CausalLoopDiagram {
    variables: Vec<VariableName>,
    links: Vec<Link>,
}

/// Builds a diagram, rejecting a second link for an already-linked ordered pair.
pub fn build_diagram(links: Vec<Link>) -> Result<CausalLoopDiagram, DiagramError> {
    let mut seen = BTreeSet::new();
    for link in &links {
        let (s, t) = link.key();
        if !seen.insert((String::from(s), String::from(t))) {
            return Err(DiagramError::DuplicateLink {
                source_name: String::from(link.source.raw()),
                target_name: String::from(link.target.raw()),
            });
        }
    }
    Ok(CausalLoopDiagram::from_unique_links(links))
}

impl CausalLoopDiagram {
    pub fn new(links: Vec<Link>) -> Result<Self, DiagramError> {
        build_diagram(links)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Keeps the first link for every ordered pair and returns the dropped ones.
    pub fn first_wins(links: Vec<Link>) -> (Self, Vec<Link>) {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::with_capacity(links.len());
        let mut dropped = Vec::new();
        for link in links {
            let (s, t) = link.key();
            if seen.insert((String::from(s), String::from(t))) {
                kept.push(link);
            } else {
                dropped.push(link);
            }
        }
        (Self::from_unique_links(kept), dropped)
    }

    fn from_unique_links(links: Vec<Link>) -> Self {
        let mut variables: Vec<VariableName> = Vec::new();
        let mut names = BTreeSet::new();
        for link in &links {
            for end in [&link.source, &link.target] {
                if names.insert(String::from(end.normalized())) {
                    variables.push(end.clone());
                }
            }
        }
        Self { variables, links }
    }

    pub fn variables(&self) -> &[VariableName] {
        &self.variables
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Position of a variable by normalized name.
    pub fn index_of(&self, normalized: &str) -> Option<usize> {
        self.variables
            .iter()
            .position(|v| v.normalized() == normalized)
    }

    /// Polarity of the link between two normalized names, if any.
    pub fn link_polarity(&self, source: &str, target: &str) -> Option<Polarity> {
        self.links
            .iter()
            .find(|l| l.key() == (source, target))
            .map(|l| l.polarity)
    }

    /// Variables with no incoming link, in diagram order.
    pub fn exogenous_variables(&self) -> Vec<&VariableName> {
        exogenous_variables(self)
    }
}

/// Variables with zero in-degree, in diagram variable order.
pub fn exogenous_variables(diagram: &CausalLoopDiagram) -> Vec<&VariableName> {
    let targets: BTreeSet<&str> = diagram
        .links
        .iter()
        .map(|l| l.target.normalized())
        .collect();
    diagram
        .variables
        .iter()
        .filter(|v| !targets.contains(v.normalized()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn link(s: &str, t: &str, p: Polarity) -> Link {
        Link::new(s, t, p).unwrap()
    }

    fn rabbit() -> CausalLoopDiagram {
        build_diagram(vec![
            link("births", "rabbit population", Polarity::Positive),
            link("rabbit population", "births", Polarity::Positive),
            link("birth fraction", "births", Polarity::Positive),
        ])
        .unwrap()
    }

    #[test]
    fn variables_follow_first_appearance() {
        let d = rabbit();
        let names: Vec<&str> = d.variables().iter().map(|v| v.normalized()).collect();
        assert_eq!(names, ["births", "rabbit population", "birth fraction"]);
        assert_eq!(d.links().len(), 3);
    }

    #[test]
    fn empty_link_list_builds_empty_diagram() {
        let d = build_diagram(Vec::new()).unwrap();
        assert!(d.variables().is_empty());
        assert!(d.links().is_empty());
    }

    #[test]
    fn duplicate_pair_is_rejected_regardless_of_polarity() {
        let err = build_diagram(vec![
            link("a", "b", Polarity::Positive),
            link("A ", "b", Polarity::Negative),
        ])
        .unwrap_err();
        assert!(matches!(err, DiagramError::DuplicateLink { .. }));
    }

    #[test]
    fn opposite_directions_are_distinct_pairs() {
        let d = build_diagram(vec![
            link("a", "b", Polarity::Positive),
            link("b", "a", Polarity::Negative),
        ])
        .unwrap();
        assert_eq!(d.links().len(), 2);
        assert!(d.exogenous_variables().is_empty());
    }

    #[test]
    fn empty_endpoint_is_an_error() {
        assert_eq!(
            Link::new(" ", "b", Polarity::Positive).unwrap_err(),
            DiagramError::EmptyName
        );
    }

    #[test]
    fn exogenous_is_zero_in_degree() {
        let d = rabbit();
        let exo: Vec<&str> = d.exogenous_variables().iter().map(|v| v.raw()).collect();
        assert_eq!(exo, ["birth fraction"]);
        assert!(CausalLoopDiagram::empty().exogenous_variables().is_empty());
    }

    #[test]
    fn self_loop_counts_as_incoming() {
        let d = build_diagram(vec![link("a", "a", Polarity::Negative)]).unwrap();
        assert_eq!(d.variables().len(), 1);
        assert!(d.exogenous_variables().is_empty());
    }

    #[test]
    fn first_wins_keeps_earliest_link() {
        let (d, dropped) = CausalLoopDiagram::first_wins(vec![
            link("a", "b", Polarity::Positive),
            link("a", "b", Polarity::Negative),
        ]);
        assert_eq!(d.links().len(), 1);
        assert_eq!(d.links()[0].polarity, Polarity::Positive);
        assert_eq!(dropped.len(), 1);
    }
}

//! Feedback loop enumeration and polarity classification.
//!
//! Loops are the elementary circuits of the diagram, found with Johnson's
//! algorithm. Vertices are numbered in lexicographic order of their
//! normalized names, so every circuit is discovered starting from its
//! smallest member and comes out already in canonical rotation.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{CausalLoopDiagram, Link, Polarity};
use crate::name::VariableName;

/// Default cap on the number of loops `enumerate_loops` will return.
pub const DEFAULT_MAX_LOOPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LoopKind {
    /// Even number of negative links.
    Reinforcing,
    /// Odd number of negative links.
    Balancing,
}

impl LoopKind {
    /// Single-letter loop label prefix, `R` or `B`.
    pub fn letter(self) -> char {
        match self {
            LoopKind::Reinforcing => 'R',
            LoopKind::Balancing => 'B',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LoopKind::Reinforcing => "Reinforcing",
            LoopKind::Balancing => "Balancing",
        }
    }

    pub fn from_negative_count(negatives: usize) -> Self {
        if negatives.is_multiple_of(2) {
            LoopKind::Reinforcing
        } else {
            LoopKind::Balancing
        }
    }
}

impl fmt::Display for LoopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoopError {
    #[error("links do not form a simple cycle")]
    NotACycle,
    #[error("diagram has more than {limit} feedback loops")]
    TooManyLoops { limit: usize },
}

/// A simple cycle of links, rotated to start at its lexicographically
/// smallest variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackLoop {
    links: Vec<Link>,
    kind: LoopKind,
}

impl FeedbackLoop {
    /// Validates and canonicalizes an arbitrary rotation of a cycle.
    pub fn from_links(mut links: Vec<Link>) -> Result<Self, LoopError> {
        let kind = classify_loop(&links)?;
        let start = links
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.source.normalized().cmp(b.1.source.normalized()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        links.rotate_left(start);
        Ok(Self { links, kind })
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn kind(&self) -> LoopKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Member variables in loop order, starting at the canonical first member.
    pub fn members(&self) -> impl Iterator<Item = &VariableName> {
        self.links.iter().map(|l| &l.source)
    }

    pub fn negative_links(&self) -> usize {
        self.links
            .iter()
            .filter(|l| l.polarity == Polarity::Negative)
            .count()
    }

    fn first_member(&self) -> &str {
        self.links[0].source.normalized()
    }
}

impl fmt::Display for FeedbackLoop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (", self.kind)?;
        for (i, member) in self.members().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{member}")?;
        }
        write!(f, " -> {})", self.links[0].source)
    }
}

/// Reinforcing iff the loop has an even number of negative links.
pub fn classify_loop(links: &[Link]) -> Result<LoopKind, LoopError> {
    if links.is_empty() {
        return Err(LoopError::NotACycle);
    }
    let mut sources = BTreeSet::new();
    for (i, link) in links.iter().enumerate() {
        let next = &links[(i + 1) % links.len()];
        if !link.target.same_as(&next.source) || !sources.insert(link.source.normalized()) {
            return Err(LoopError::NotACycle);
        }
    }
    let negatives = links
        .iter()
        .filter(|l| l.polarity == Polarity::Negative)
        .count();
    Ok(LoopKind::from_negative_count(negatives))
}

/// Every simple cycle of the diagram, capped at [`DEFAULT_MAX_LOOPS`].
pub fn enumerate_loops(diagram: &CausalLoopDiagram) -> Result<Vec<FeedbackLoop>, LoopError> {
    enumerate_loops_bounded(diagram, DEFAULT_MAX_LOOPS)
}

/// Every simple cycle of the diagram, sorted by length then by canonical
/// member sequence. Fails once more than `max_loops` cycles have been found.
pub fn enumerate_loops_bounded(
    diagram: &CausalLoopDiagram,
    max_loops: usize,
) -> Result<Vec<FeedbackLoop>, LoopError> {
    let graph = IndexedGraph::new(diagram);
    let mut circuits: Vec<Vec<usize>> = Vec::new();
    let mut search = Johnson::new(&graph, max_loops);
    for start in 0..graph.len() {
        let component = graph.component_of(start);
        if component.is_empty() {
            continue;
        }
        search.run(start, &component, &mut circuits)?;
    }

    let mut loops: Vec<FeedbackLoop> = circuits
        .into_iter()
        .map(|cycle| {
            let links: Vec<Link> = (0..cycle.len())
                .map(|i| graph.link(cycle[i], cycle[(i + 1) % cycle.len()]).clone())
                .collect();
            let negatives = links
                .iter()
                .filter(|l| l.polarity == Polarity::Negative)
                .count();
            FeedbackLoop {
                links,
                kind: LoopKind::from_negative_count(negatives),
            }
        })
        .collect();
    loops.sort_by(|a, b| {
        a.len()
            .cmp(&b.len())
            .then_with(|| a.first_member().cmp(b.first_member()))
            .then_with(|| {
                a.members()
                    .map(VariableName::normalized)
                    .cmp(b.members().map(VariableName::normalized))
            })
    });
    Ok(loops)
}

/// Diagram re-indexed so vertex order equals normalized-name order.
struct IndexedGraph<'a> {
    adjacency: Vec<Vec<usize>>,
    link_at: Vec<Vec<Option<&'a Link>>>,
}

impl<'a> IndexedGraph<'a> {
    fn new(diagram: &'a CausalLoopDiagram) -> Self {
        let mut names: Vec<&str> = diagram
            .variables()
            .iter()
            .map(VariableName::normalized)
            .collect();
        names.sort_unstable();
        let n = names.len();
        let index = |name: &str| names.binary_search(&name).expect("endpoint is a variable");
        let mut adjacency = vec![Vec::new(); n];
        let mut link_at = vec![vec![None; n]; n];
        for link in diagram.links() {
            let (s, t) = link.key();
            let (s, t) = (index(s), index(t));
            adjacency[s].push(t);
            link_at[s][t] = Some(link);
        }
        for targets in &mut adjacency {
            targets.sort_unstable();
        }
        Self { adjacency, link_at }
    }

    fn len(&self) -> usize {
        self.adjacency.len()
    }

    fn link(&self, from: usize, to: usize) -> &'a Link {
        self.link_at[from][to].expect("cycle follows existing links")
    }

    /// Membership mask of the strongly connected component containing
    /// `start` in the subgraph induced by vertices `>= start`. Empty when
    /// that component cannot contain a cycle.
    fn component_of(&self, start: usize) -> Vec<bool> {
        let n = self.len();
        let forward = self.reach(start, |v| self.adjacency[v].clone());
        let backward = self.reach(start, |v| {
            (start..n).filter(|&u| self.link_at[u][v].is_some()).collect()
        });
        let mut member = vec![false; n];
        let mut size = 0;
        for v in start..n {
            if forward[v] && backward[v] {
                member[v] = true;
                size += 1;
            }
        }
        let has_cycle = size > 1 || self.link_at[start][start].is_some();
        if has_cycle {
            member
        } else {
            Vec::new()
        }
    }

    fn reach(&self, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for w in next(v) {
                if w >= start && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

struct Johnson<'g, 'a> {
    graph: &'g IndexedGraph<'a>,
    blocked: Vec<bool>,
    blocked_by: Vec<BTreeSet<usize>>,
    path: Vec<usize>,
    max_loops: usize,
}

impl<'g, 'a> Johnson<'g, 'a> {
    fn new(graph: &'g IndexedGraph<'a>, max_loops: usize) -> Self {
        let n = graph.len();
        Self {
            graph,
            blocked: vec![false; n],
            blocked_by: vec![BTreeSet::new(); n],
            path: Vec::new(),
            max_loops,
        }
    }

    fn run(
        &mut self,
        start: usize,
        component: &[bool],
        out: &mut Vec<Vec<usize>>,
    ) -> Result<(), LoopError> {
        for v in 0..self.graph.len() {
            self.blocked[v] = false;
            self.blocked_by[v].clear();
        }
        self.path.clear();
        self.circuit(start, start, component, out).map(|_| ())
    }

    fn circuit(
        &mut self,
        v: usize,
        start: usize,
        component: &[bool],
        out: &mut Vec<Vec<usize>>,
    ) -> Result<bool, LoopError> {
        let graph = self.graph;
        let mut found = false;
        self.path.push(v);
        self.blocked[v] = true;
        for &w in &graph.adjacency[v] {
            if !component[w] {
                continue;
            }
            if w == start {
                if out.len() == self.max_loops {
                    return Err(LoopError::TooManyLoops {
                        limit: self.max_loops,
                    });
                }
                out.push(self.path.clone());
                found = true;
            } else if !self.blocked[w] && self.circuit(w, start, component, out)? {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for &w in &graph.adjacency[v] {
                if component[w] {
                    self.blocked_by[w].insert(v);
                }
            }
        }
        self.path.pop();
        Ok(found)
    }

    fn unblock(&mut self, v: usize) {
        let mut pending = vec![v];
        while let Some(u) = pending.pop() {
            if !self.blocked[u] {
                continue;
            }
            self.blocked[u] = false;
            let waiting = core::mem::take(&mut self.blocked_by[u]);
            pending.extend(waiting);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::build_diagram;
    use alloc::string::String;

    fn link(s: &str, t: &str, p: Polarity) -> Link {
        Link::new(s, t, p).unwrap()
    }

    fn signs(pols: &[Polarity]) -> Vec<Link> {
        let names = ["a", "b", "c", "d", "e"];
        let n = pols.len();
        pols.iter()
            .enumerate()
            .map(|(i, &p)| link(names[i], names[(i + 1) % n], p))
            .collect()
    }

    use Polarity::{Negative as N, Positive as P};

    #[test]
    fn classify_by_negative_parity() {
        assert_eq!(classify_loop(&signs(&[P, P])), Ok(LoopKind::Reinforcing));
        assert_eq!(classify_loop(&signs(&[P, N, P])), Ok(LoopKind::Balancing));
        assert_eq!(classify_loop(&signs(&[N, N, N])), Ok(LoopKind::Balancing));
        assert_eq!(classify_loop(&signs(&[N, N])), Ok(LoopKind::Reinforcing));
    }

    #[test]
    fn classify_rejects_broken_chains() {
        assert_eq!(classify_loop(&[]), Err(LoopError::NotACycle));
        let open = [link("a", "b", P), link("b", "c", P)];
        assert_eq!(classify_loop(&open), Err(LoopError::NotACycle));
        // figure eight through "a" visits it twice
        let eight = [
            link("a", "b", P),
            link("b", "a", P),
            link("a", "c", P),
            link("c", "a", P),
        ];
        assert_eq!(classify_loop(&eight), Err(LoopError::NotACycle));
    }

    #[test]
    fn self_loop_is_a_length_one_loop() {
        let d = build_diagram(vec![link("a", "a", N)]).unwrap();
        let loops = enumerate_loops(&d).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 1);
        assert_eq!(loops[0].kind(), LoopKind::Balancing);
    }

    #[test]
    fn rabbit_has_one_reinforcing_loop() {
        let d = build_diagram(vec![
            link("births", "rabbit population", P),
            link("rabbit population", "births", P),
            link("birth fraction", "births", P),
        ])
        .unwrap();
        let loops = enumerate_loops(&d).unwrap();
        assert_eq!(loops.len(), 1);
        let members: Vec<&str> = loops[0].members().map(|m| m.raw()).collect();
        assert_eq!(members, ["births", "rabbit population"]);
        assert_eq!(loops[0].kind(), LoopKind::Reinforcing);
        assert_eq!(loops[0].negative_links(), 0);
    }

    #[test]
    fn acyclic_diagram_has_no_loops() {
        let d = build_diagram(vec![link("a", "b", P), link("b", "c", N)]).unwrap();
        assert!(enumerate_loops(&d).unwrap().is_empty());
    }

    #[test]
    fn loops_sorted_by_length_then_first_member() {
        let d = build_diagram(vec![
            link("z", "y", P),
            link("y", "z", P),
            link("c", "b", P),
            link("b", "a", P),
            link("a", "c", N),
            link("q", "q", P),
        ])
        .unwrap();
        let loops = enumerate_loops(&d).unwrap();
        let firsts: Vec<(usize, String)> = loops
            .iter()
            .map(|l| (l.len(), String::from(l.members().next().unwrap().raw())))
            .collect();
        assert_eq!(
            firsts,
            [
                (1, String::from("q")),
                (2, String::from("y")),
                (3, String::from("a"))
            ]
        );
        // rotation starts at "a", which links to "c"
        let members: Vec<&str> = loops[2].members().map(|m| m.raw()).collect();
        assert_eq!(members, ["a", "c", "b"]);
    }

    #[test]
    fn complete_graph_loop_count() {
        // K4 with both directions has 6 two-cycles, 8 three-cycles, 6 four-cycles
        let names = ["a", "b", "c", "d"];
        let mut links = Vec::new();
        for s in names {
            for t in names {
                if s != t {
                    links.push(link(s, t, P));
                }
            }
        }
        let d = build_diagram(links).unwrap();
        let loops = enumerate_loops(&d).unwrap();
        assert_eq!(loops.len(), 20);
        assert_eq!(
            enumerate_loops_bounded(&d, 19),
            Err(LoopError::TooManyLoops { limit: 19 })
        );
        assert_eq!(enumerate_loops_bounded(&d, 20).unwrap().len(), 20);
    }

    #[test]
    fn from_links_canonicalizes_rotation() {
        let l = FeedbackLoop::from_links(vec![
            link("price", "production", P),
            link("production", "inventory", P),
            link("inventory", "price", N),
        ])
        .unwrap();
        assert_eq!(l.members().next().unwrap().raw(), "inventory");
        assert_eq!(l.kind(), LoopKind::Balancing);
    }
}

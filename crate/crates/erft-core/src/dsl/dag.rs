//! Causal structure of a circuit.
//!
//! Nodes are circuit elements, except that the terminal detect statement is
//! exploded into one detector node per listed mode: detection of mode `a`
//! and detection of mode `b` are causally independent observations even
//! though the grammar writes them in one statement. Edges connect elements
//! that are adjacent on some mode's timeline, so reachability is exactly
//! "influence can propagate along modes".

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::ast::{Circuit, Element};
use crate::ontology::ModeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DagNode {
    /// A non-detect element, by element index.
    Element { index: usize },
    /// Detection of one mode within the terminal detect.
    Detector { mode: ModeId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalDag {
    pub nodes: Vec<DagNode>,
    /// Directed edges as index pairs into `nodes`, always forward in time.
    pub edges: Vec<(usize, usize)>,
    successors: Vec<Vec<usize>>,
}

impl CausalDag {
    pub fn node_index(&self, node: DagNode) -> Option<usize> {
        self.nodes.iter().position(|n| *n == node)
    }

    /// All nodes strictly reachable from `start` along directed edges.
    pub fn descendants(&self, start: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = self.successors[start].iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            if seen.insert(n) {
                queue.extend(self.successors[n].iter().copied());
            }
        }
        seen
    }

    /// Edges always point from earlier nodes to later ones, so cycles are
    /// impossible; this verifies that construction property.
    pub fn is_acyclic(&self) -> bool {
        self.edges.iter().all(|(from, to)| from < to)
    }
}

/// Builds the causal DAG of a circuit from each element's declared modes.
pub fn causal_dag(c: &Circuit) -> CausalDag {
    let mut nodes = Vec::new();
    let mut touches: Vec<Vec<ModeId>> = Vec::new();
    for (idx, element) in c.elements.iter().enumerate() {
        match element {
            Element::Detect { modes } => {
                for m in modes {
                    nodes.push(DagNode::Detector { mode: *m });
                    touches.push(vec![*m]);
                }
            }
            _ => {
                nodes.push(DagNode::Element { index: idx });
                touches.push(element.declared_modes());
            }
        }
    }

    let mut edges = Vec::new();
    let mut last_on_mode: BTreeMap<usize, usize> = BTreeMap::new();
    for (node_idx, modes) in touches.iter().enumerate() {
        for mode in modes {
            if let Some(&prev) = last_on_mode.get(&mode.0) {
                if prev != node_idx && !edges.contains(&(prev, node_idx)) {
                    edges.push((prev, node_idx));
                }
            }
            last_on_mode.insert(mode.0, node_idx);
        }
    }

    let mut successors = vec![Vec::new(); nodes.len()];
    for &(from, to) in &edges {
        successors[from].push(to);
    }

    CausalDag {
        nodes,
        edges,
        successors,
    }
}

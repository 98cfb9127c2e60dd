//! Breadth-first construction of explicit state graphs.
//!
//! The LTS, the Petri marking graph and both DA³ global graphs are built with
//! [`explore`], so they share numbering rules: node 0 is the initial state,
//! nodes are numbered in discovery order, and the successors of a node are
//! expanded in the order the successor function yields them.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_nodes: usize,
    pub max_edges: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_nodes: 1_000_000,
            max_edges: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("state space exceeds limits: {nodes} nodes / {edges} edges explored")]
pub struct LimitExceeded {
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    /// Action id, transition index, ... depending on the graph.
    pub label: usize,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph<S> {
    pub nodes: Vec<S>,
    /// Grouped by source, in node order.
    pub edges: Vec<Edge>,
    offsets: Vec<usize>,
    /// Edge through which each node was first discovered (BFS tree).
    parent: Vec<Option<usize>>,
}

impl<S> StateGraph<S> {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, node: usize) -> &[Edge] {
        &self.edges[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Edge labels along the BFS-tree path from node 0 to `node`.
    pub fn path_to(&self, node: usize) -> Vec<usize> {
        self.path_edges(node).into_iter().map(|e| e.label).collect()
    }

    pub fn path_edges(&self, mut node: usize) -> Vec<Edge> {
        let mut out = Vec::new();
        while let Some(e) = self.parent[node] {
            let edge = self.edges[e];
            out.push(edge);
            node = edge.source;
        }
        out.reverse();
        out
    }

    /// BFS depth of every node.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        // parents always precede children in numbering
        for node in 1..self.nodes.len() {
            if let Some(e) = self.parent[node] {
                depth[node] = depth[self.edges[e].source] + 1;
            }
        }
        depth
    }

    pub fn reverse_adjacency(&self) -> Vec<Vec<usize>> {
        let mut rev = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            rev[e.target].push(e.source);
        }
        rev
    }

    /// Nodes from which some node in `targets` is reachable (including the targets).
    pub fn can_reach(&self, targets: &[bool]) -> Vec<bool> {
        let rev = self.reverse_adjacency();
        let mut seen = targets.to_vec();
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&n| targets[n]).collect();
        while let Some(n) = queue.pop_front() {
            for &p in &rev[n] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }
}

/// Explores the state space reachable from `initial`.
///
/// `successors` pushes `(label, state)` pairs for every outgoing transition.
pub fn explore<S, F>(initial: S, limits: Limits, mut successors: F) -> Result<StateGraph<S>, LimitExceeded>
where
    S: Clone + Eq + Hash,
    F: FnMut(&S, &mut Vec<(usize, S)>),
{
    let mut index: HashMap<S, usize> = HashMap::new();
    let mut nodes = vec![initial.clone()];
    let mut parent = vec![None];
    index.insert(initial, 0);
    let mut edges = Vec::new();
    let mut offsets = vec![0];
    let mut buf = Vec::new();
    let mut current = 0;
    while current < nodes.len() {
        buf.clear();
        successors(&nodes[current], &mut buf);
        for (label, state) in buf.drain(..) {
            let target = match index.entry(state) {
                Entry::Occupied(e) => *e.get(),
                Entry::Vacant(e) => {
                    let id = nodes.len();
                    if id >= limits.max_nodes {
                        return Err(LimitExceeded {
                            nodes: id + 1,
                            edges: edges.len(),
                        });
                    }
                    nodes.push(e.key().clone());
                    parent.push(Some(edges.len()));
                    e.insert(id);
                    id
                }
            };
            if edges.len() >= limits.max_edges {
                return Err(LimitExceeded {
                    nodes: nodes.len(),
                    edges: edges.len() + 1,
                });
            }
            edges.push(Edge {
                source: current,
                label,
                target,
            });
        }
        offsets.push(edges.len());
        current += 1;
    }
    Ok(StateGraph {
        nodes,
        edges,
        offsets,
        parent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counter(limit: u32) -> StateGraph<u32> {
        explore(0u32, Limits::default(), |&n, out| {
            out.push((0, (n + 1) % limit));
            out.push((1, (n + 2) % limit));
        })
        .unwrap()
    }

    #[test]
    fn numbering_is_bfs_order() {
        let g = counter(5);
        assert_eq!(g.nodes, vec![0, 1, 2, 3, 4]);
        assert_eq!(g.edge_count(), 10);
        assert_eq!(g.out_degree(0), 2);
        assert_eq!(g.path_to(3), vec![0, 1]);
        assert_eq!(g.depths(), vec![0, 1, 1, 2, 2]);
    }

    #[test]
    fn limits_fail_loudly() {
        let err = explore(0u32, Limits { max_nodes: 3, max_edges: 100 }, |&n, out| {
            out.push((0, n + 1))
        })
        .unwrap_err();
        assert_eq!(err.nodes, 4);
        let err = explore(0u32, Limits { max_nodes: 100, max_edges: 2 }, |&n, out| {
            out.push((0, (n + 1) % 3))
        })
        .unwrap_err();
        assert_eq!(err.edges, 3);
    }

    #[test]
    fn reverse_reachability() {
        let g = explore(0u32, Limits::default(), |&n, out| {
            if n < 3 {
                out.push((0, n + 1));
            }
        })
        .unwrap();
        let mut target = vec![false; 4];
        target[2] = true;
        assert_eq!(g.can_reach(&target), vec![true, true, true, false]);
    }
}

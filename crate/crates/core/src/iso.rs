//! Structural isomorphism between the LTS and another state graph.
//!
//! The mapping is not searched for: every formalism here has a fixed
//! correspondence to configurations (state places ↔ server states, message
//! places ↔ messages, automaton positions ↔ configurations, transitions ↔
//! actions). The check verifies that this correspondence is a bijection on
//! nodes that preserves the initial node and maps edges onto edges with equal
//! action labels.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::graph::{Edge, StateGraph};
use crate::lts::Lts;
use crate::model::{ActionId, Configuration};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsoReport {
    pub isomorphic: bool,
    /// `mapping[i]` = LTS node of node `i` of the other graph (valid when isomorphic).
    pub mapping: Vec<usize>,
    /// First mismatch found, if any.
    pub mismatch: Option<String>,
}

impl IsoReport {
    fn fail(mapping: Vec<usize>, message: String) -> Self {
        IsoReport {
            isomorphic: false,
            mapping,
            mismatch: Some(message),
        }
    }
}

/// Checks `other` against `lts` under `node_map` (other node → configuration)
/// and `label_map` (other edge label → action id).
pub fn check_structural<S>(
    other: &StateGraph<S>,
    lts: &Lts,
    node_map: impl Fn(&S) -> Result<Configuration, String>,
    label_map: impl Fn(usize) -> Option<ActionId>,
) -> IsoReport {
    let index = lts.index();
    let mut mapping = Vec::with_capacity(other.node_count());
    let mut used = vec![false; lts.node_count()];
    for (i, node) in other.nodes.iter().enumerate() {
        let config = match node_map(node) {
            Ok(c) => c,
            Err(e) => return IsoReport::fail(mapping, format!("node {i}: {e}")),
        };
        let Some(&target) = index.get(&config) else {
            return IsoReport::fail(mapping, format!("node {i} maps to a configuration absent from the LTS"));
        };
        if used[target] {
            return IsoReport::fail(mapping, format!("node {i} maps to LTS node {target}, which is already taken"));
        }
        used[target] = true;
        mapping.push(target);
    }
    if let Some(missing) = used.iter().position(|u| !u) {
        return IsoReport::fail(mapping, format!("LTS node {missing} has no counterpart"));
    }
    if mapping.first() != Some(&0) {
        return IsoReport::fail(mapping, "initial nodes do not correspond".into());
    }

    let lts_edges: HashSet<Edge> = lts.edges.iter().copied().collect();
    let mut seen = HashSet::new();
    for e in &other.edges {
        let Some(action) = label_map(e.label) else {
            return IsoReport::fail(mapping, format!("edge {} -> {}: label {} has no action", e.source, e.target, e.label));
        };
        let image = Edge {
            source: mapping[e.source],
            label: action,
            target: mapping[e.target],
        };
        if !lts_edges.contains(&image) {
            return IsoReport::fail(
                mapping,
                format!(
                    "edge {} -> {} (action {action}) has no LTS counterpart {} -> {}",
                    e.source, e.target, image.source, image.target
                ),
            );
        }
        if !seen.insert(image) {
            return IsoReport::fail(mapping, format!("edge {} -> {} is duplicated", e.source, e.target));
        }
    }
    if seen.len() != lts_edges.len() {
        let missing = lts.edges.iter().find(|e| !seen.contains(e)).expect("counts differ");
        let inverse: HashMap<usize, usize> = mapping.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        return IsoReport::fail(
            mapping.clone(),
            format!(
                "LTS edge {} -> {} (action {}) is missing between nodes {} -> {}",
                missing.source, missing.target, missing.label, inverse[&missing.source], inverse[&missing.target]
            ),
        );
    }
    IsoReport {
        isomorphic: true,
        mapping,
        mismatch: None,
    }
}

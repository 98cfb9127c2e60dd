use serde::Serialize;

use super::{Marking, PetriNet};
use crate::graph::StateGraph;

/// Weakly connected part of the place/transition graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub places: Vec<usize>,
    pub transitions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructuralReport {
    pub components: Vec<Component>,
    /// Transitions that label no edge of the marking graph.
    pub dead_transitions: Vec<usize>,
    /// Largest token count seen per place over all reachable markings.
    pub max_tokens: Vec<u32>,
    pub safe: bool,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn structural_report(net: &PetriNet, graph: &StateGraph<Marking>) -> StructuralReport {
    let places = net.places.len();
    // nodes 0..places are places, the rest transitions
    let mut parent: Vec<usize> = (0..places + net.transitions.len()).collect();
    for (t, tr) in net.transitions.iter().enumerate() {
        for &p in tr.inputs.iter().chain(&tr.outputs) {
            let (a, b) = (find(&mut parent, p), find(&mut parent, places + t));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut components: Vec<Component> = Vec::new();
    let mut slot = vec![usize::MAX; parent.len()];
    for node in 0..parent.len() {
        let root = find(&mut parent, node);
        if slot[root] == usize::MAX {
            slot[root] = components.len();
            components.push(Component {
                places: vec![],
                transitions: vec![],
            });
        }
        let c = &mut components[slot[root]];
        if node < places {
            c.places.push(node);
        } else {
            c.transitions.push(node - places);
        }
    }

    let mut fired = vec![false; net.transitions.len()];
    for e in &graph.edges {
        fired[e.label] = true;
    }
    let mut max_tokens = vec![0; places];
    for m in &graph.nodes {
        for (p, &k) in m.iter().enumerate() {
            max_tokens[p] = max_tokens[p].max(k);
        }
    }
    StructuralReport {
        components,
        dead_transitions: (0..fired.len()).filter(|&t| !fired[t]).collect(),
        safe: max_tokens.iter().all(|&k| k <= 1),
        max_tokens,
    }
}

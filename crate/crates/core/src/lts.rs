//! The labeled transition system: configurations reachable under interleaving.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Deref;

use crate::graph::{explore, LimitExceeded, Limits, StateGraph};
use crate::model::{Configuration, SystemModel};
use crate::trace::Trace;

/// Reachable configurations; node 0 is the initial configuration and edge
/// labels are action ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    graph: StateGraph<Configuration>,
}

impl Deref for Lts {
    type Target = StateGraph<Configuration>;
    fn deref(&self) -> &Self::Target {
        &self.graph
    }
}

impl Lts {
    pub fn graph(&self) -> &StateGraph<Configuration> {
        &self.graph
    }

    pub fn configuration(&self, node: usize) -> &Configuration {
        &self.graph.nodes[node]
    }

    /// Number of actions enabled at `node` (every enabled action yields an edge).
    pub fn enabled_count(&self, node: usize) -> usize {
        self.graph.out_degree(node)
    }

    pub fn index(&self) -> HashMap<&Configuration, usize> {
        self.graph.nodes.iter().enumerate().map(|(i, c)| (c, i)).collect()
    }
}

/// Breadth-first exploration from the initial configuration, expanding
/// enabled actions in action order.
pub fn build_lts(model: &SystemModel, limits: Limits) -> Result<Lts, LimitExceeded> {
    let mut enabled = Vec::new();
    let graph = explore(model.initial_configuration(), limits, |config, out| {
        model.enabled_into(config, &mut enabled);
        for &id in &enabled {
            out.push((id, model.fire(config, id)));
        }
    })?;
    Ok(Lts { graph })
}

/// Shortest action sequence from the initial node to the lowest-numbered
/// node satisfying `predicate`.
pub fn shortest_path(lts: &Lts, predicate: impl Fn(&Configuration) -> bool) -> Option<Trace> {
    // BFS numbering is non-decreasing in depth, so the first hit is the nearest
    let node = lts.nodes.iter().position(predicate)?;
    Some(Trace::new(lts.path_to(node)))
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT rendering: nodes labeled with configuration text, edges with action labels.
pub fn to_dot(model: &SystemModel, lts: &Lts) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(model.name().as_str())).unwrap();
    writeln!(out, "  node [shape=box, fontsize=10];").unwrap();
    for (i, config) in lts.nodes.iter().enumerate() {
        let style = if i == 0 { ", penwidth=2" } else { "" };
        let dead = if lts.enabled_count(i) == 0 { ", color=red" } else { "" };
        writeln!(
            out,
            "  n{i} [label=\"{}\"{style}{dead}];",
            escape(&model.configuration_text(config).replace("; ", "\\n"))
        )
        .unwrap();
    }
    for e in &lts.edges {
        writeln!(
            out,
            "  n{} -> n{} [label=\"{}\"];",
            e.source,
            e.target,
            escape(model.action_label(e.label))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// Line-oriented dump for diffing: `node <i> <configuration>` then `edge <s> <t> <label>`.
pub fn to_text(model: &SystemModel, lts: &Lts) -> String {
    let mut out = String::new();
    for (i, config) in lts.nodes.iter().enumerate() {
        writeln!(out, "node {i} {}", model.configuration_text(config)).unwrap();
    }
    for e in &lts.edges {
        writeln!(out, "edge {} {} {}", e.source, e.target, model.action_label(e.label)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;
    use crate::parser::parse;

    fn corpus(name: &str) -> SystemModel {
        let text = match name {
            "buffer" => include_str!("../../../corpus/buffer.imds"),
            "crossed" => include_str!("../../../corpus/crossed.imds"),
            _ => unreachable!(),
        };
        parse(text).unwrap().0
    }

    fn deadlocked(lts: &Lts) -> impl Fn(&Configuration) -> bool + '_ {
        let index = lts.index();
        move |c| c.pending_count() > 0 && lts.enabled_count(index[c]) == 0
    }

    #[test]
    fn buffer_counts() {
        let m = corpus("buffer");
        let lts = build_lts(&m, Limits::default()).unwrap();
        assert_eq!((lts.node_count(), lts.edge_count()), (18, 30));
        assert!(shortest_path(&lts, deadlocked(&lts)).is_none());
    }

    #[test]
    fn crossed_counts_and_numbering() {
        let m = corpus("crossed");
        let lts = build_lts(&m, Limits::default()).unwrap();
        assert_eq!((lts.node_count(), lts.edge_count()), (6, 6));
        let texts: Vec<String> = lts.nodes.iter().map(|c| m.configuration_text(c)).collect();
        assert_eq!(texts[0], "agents: a1:sem1.p, a2:sem2.p; servers: sem1.up, sem2.up");
        assert_eq!(texts[3], "agents: a1:-, a2:sem2.p; servers: sem1.down, sem2.down");
        assert_eq!(texts[4], "agents: a1:sem2.p, a2:sem1.p; servers: sem1.down, sem2.down");
        assert_eq!(texts[5], "agents: a1:sem1.p, a2:-; servers: sem1.down, sem2.down");
        let trace = shortest_path(&lts, deadlocked(&lts)).unwrap();
        assert_eq!(trace.len(), 2);
    }

    #[test]
    fn predicate_at_initial_gives_empty_trace() {
        let m = corpus("crossed");
        let lts = build_lts(&m, Limits::default()).unwrap();
        assert_eq!(shortest_path(&lts, |_| true), Some(Trace::default()));
    }

    #[test]
    fn never_enabled_initial_message() {
        let mut b = ModelBuilder::new("stuck").unwrap();
        b.server("s", &["v", "w"], &["r"]).unwrap();
        b.agent("a").unwrap();
        b.action(None, "a.s.r", "s.w", None, "s.v").unwrap();
        b.init_state(b.state("s", "v").unwrap());
        b.init_message(b.message("a", "s", "r").unwrap());
        let lts = build_lts(&b.build(), Limits::default()).unwrap();
        assert_eq!((lts.node_count(), lts.edge_count()), (1, 0));
    }

    #[test]
    fn rebuild_is_identical_and_exports_are_stable() {
        let m = corpus("buffer");
        let a = build_lts(&m, Limits::default()).unwrap();
        let b = build_lts(&m, Limits::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(to_dot(&m, &a), to_dot(&m, &b));
        let text = to_text(&m, &a);
        assert_eq!(text.lines().filter(|l| l.starts_with("node ")).count(), 18);
        assert_eq!(text.lines().filter(|l| l.starts_with("edge ")).count(), 30);
    }

    #[test]
    fn limit_exceeded() {
        let m = corpus("buffer");
        let err = build_lts(&m, Limits { max_nodes: 10, max_edges: 100 }).unwrap_err();
        assert!(err.nodes > 10);
    }

    #[test]
    fn degree_sum_and_in_degree() {
        let m = corpus("buffer");
        let lts = build_lts(&m, Limits::default()).unwrap();
        let total: usize = (0..lts.node_count()).map(|n| lts.out_degree(n)).sum();
        assert_eq!(total, lts.edge_count());
        let rev = lts.reverse_adjacency();
        assert!(rev.iter().skip(1).all(|preds| !preds.is_empty()));
    }
}

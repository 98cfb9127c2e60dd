use std::fmt::Write as _;

use super::{PetriNet, PlaceKind};

/// Graphviz rendering in the usual red-state / green-message colors. Places
/// are circles labeled with name and token count; initially marked places
/// are drawn bold.
pub fn to_dot(net: &PetriNet) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", net.name).unwrap();
    out.push_str("  rankdir=LR;\n  node [fontsize=10];\n");
    for (p, place) in net.places.iter().enumerate() {
        let color = match place.kind {
            PlaceKind::State => "red",
            PlaceKind::Message => "darkgreen",
        };
        let tokens = net.initial_marking[p];
        let bold = if tokens > 0 { ", penwidth=2" } else { "" };
        writeln!(
            out,
            "  p{p} [shape=circle, color={color}, label=\"{}\\n{tokens}\"{bold}];",
            place.name
        )
        .unwrap();
    }
    for (t, tr) in net.transitions.iter().enumerate() {
        writeln!(out, "  t{t} [shape=box, label=\"{}\"];", tr.name).unwrap();
    }
    for (t, tr) in net.transitions.iter().enumerate() {
        for p in &tr.inputs {
            writeln!(out, "  p{p} -> t{t};").unwrap();
        }
        for p in &tr.outputs {
            writeln!(out, "  t{t} -> p{p};").unwrap();
        }
    }
    out.push_str("}\n");
    out
}

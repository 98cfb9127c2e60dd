//! Diagram and JSON exports of the automata.
//!
//! Node labels omit the owner's name, as in the usual drawings: SDA³ nodes
//! show only the value, ADA³ nodes show `server.service` or `t`.

use std::fmt::Write as _;

use serde::Serialize;

use super::{Ada3, AdaNode, AutomataKind, Sda3};
use crate::model::{Message, ServerState, SystemModel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DotOptions {
    /// Also draw the terminal node of agents that can never terminate.
    pub show_unreachable_terminal: bool,
}

fn short_message(model: &SystemModel, m: Message) -> String {
    format!("{}.{}", model.server_name(m.server), model.service_name(m))
}

fn state(model: &SystemModel, p: ServerState) -> String {
    model.state_text(p)
}

fn sda_edge_label(model: &SystemModel, input: Message, output: Option<Message>) -> String {
    match output {
        Some(out) => format!("{}/{}", model.message_text(input), model.message_text(out)),
        None => format!("{}/—", model.message_text(input)),
    }
}

/// One digraph per server automaton, as `(automaton name, dot text)`.
pub fn sda3_dot(model: &SystemModel, sda: &Sda3) -> Vec<(String, String)> {
    sda.automata
        .iter()
        .map(|a| {
            let mut out = String::new();
            writeln!(out, "digraph \"{}\" {{", a.name).unwrap();
            out.push_str("  node [shape=ellipse, color=red, fontsize=10];\n");
            for (i, node) in a.nodes.iter().enumerate() {
                let bold = if i == a.initial { ", penwidth=2" } else { "" };
                writeln!(out, "  n{i} [label=\"{node}\"{bold}];").unwrap();
            }
            for t in &a.transitions {
                writeln!(
                    out,
                    "  n{} -> n{} [label=\"{}\"];",
                    t.from,
                    t.to,
                    sda_edge_label(model, t.input, t.output)
                )
                .unwrap();
            }
            out.push_str("}\n");
            (a.name.clone(), out)
        })
        .collect()
}

/// One digraph per agent automaton, as `(automaton name, dot text)`.
pub fn ada3_dot(model: &SystemModel, ada: &Ada3, options: DotOptions) -> Vec<(String, String)> {
    ada.automata
        .iter()
        .map(|a| {
            let show_t = options.show_unreachable_terminal || a.can_terminate();
            let mut out = String::new();
            writeln!(out, "digraph \"{}\" {{", a.name).unwrap();
            out.push_str("  node [shape=ellipse, color=darkgreen, fontsize=10];\n");
            for (i, node) in a.nodes.iter().enumerate() {
                let bold = if i == a.initial { ", penwidth=2" } else { "" };
                match node {
                    AdaNode::Message(m) => {
                        writeln!(out, "  n{i} [label=\"{}\"{bold}];", short_message(model, *m)).unwrap()
                    }
                    AdaNode::Terminal if show_t => {
                        writeln!(out, "  n{i} [label=\"t\", shape=doublecircle{bold}];").unwrap()
                    }
                    AdaNode::Terminal => {}
                }
            }
            for t in &a.transitions {
                writeln!(
                    out,
                    "  n{} -> n{} [label=\"{}/{}\"];",
                    t.from,
                    t.to,
                    state(model, t.input),
                    state(model, t.output)
                )
                .unwrap();
            }
            out.push_str("}\n");
            (a.name.clone(), out)
        })
        .collect()
}

/// Index of exported files: one `<automaton> <file>` line per digraph.
pub fn dot_index(model: &SystemModel, kind: AutomataKind, files: &[(String, String)]) -> String {
    let mut out = format!("# {} automata of {}\n", kind.as_str(), model.name());
    for (name, file) in files {
        writeln!(out, "{name} {file}").unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionJson {
    pub index: usize,
    pub action: usize,
    pub action_label: String,
    pub label: String,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AutomatonJson {
    pub name: String,
    pub nodes: Vec<String>,
    pub initial: usize,
    /// Index of `t` (ADA³ only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal: Option<usize>,
    /// Messages this server can receive (SDA³ only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_inputs: Option<Vec<String>>,
    pub transitions: Vec<TransitionJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AutomataJson {
    pub schema_version: u32,
    pub kind: AutomataKind,
    pub automata: Vec<AutomatonJson>,
}

pub fn automata_json(model: &SystemModel, kind: AutomataKind) -> AutomataJson {
    let automata = match kind {
        AutomataKind::Sda3 => super::to_sda3(model)
            .automata
            .iter()
            .map(|a| AutomatonJson {
                name: a.name.clone(),
                nodes: a.nodes.clone(),
                initial: a.initial,
                terminal: None,
                alphabet: Some(a.alphabet.iter().map(|&m| model.message_text(m)).collect()),
                initial_inputs: Some(a.initial_inputs.iter().map(|&m| model.message_text(m)).collect()),
                transitions: a
                    .transitions
                    .iter()
                    .enumerate()
                    .map(|(k, t)| TransitionJson {
                        index: k,
                        action: t.action,
                        action_label: model.action_label(t.action).to_string(),
                        label: sda_edge_label(model, t.input, t.output),
                        from: t.from,
                        to: t.to,
                    })
                    .collect(),
            })
            .collect(),
        AutomataKind::Ada3 => super::to_ada3(model)
            .automata
            .iter()
            .map(|a| AutomatonJson {
                name: a.name.clone(),
                nodes: a
                    .nodes
                    .iter()
                    .map(|n| match n {
                        AdaNode::Message(m) => short_message(model, *m),
                        AdaNode::Terminal => "t".to_string(),
                    })
                    .collect(),
                initial: a.initial,
                terminal: Some(a.terminal()),
                alphabet: None,
                initial_inputs: None,
                transitions: a
                    .transitions
                    .iter()
                    .enumerate()
                    .map(|(k, t)| TransitionJson {
                        index: k,
                        action: t.action,
                        action_label: model.action_label(t.action).to_string(),
                        label: format!("{}/{}", state(model, t.input), state(model, t.output)),
                        from: t.from,
                        to: t.to,
                    })
                    .collect(),
            })
            .collect(),
    };
    AutomataJson {
        schema_version: 1,
        kind,
        automata,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{to_ada3, to_sda3};
    use crate::model::{tests::crossed, ModelBuilder};
    use crate::parser::parse;

    #[test]
    fn buffer_sda3_dot() {
        let m = parse(include_str!("../../../../corpus/buffer.imds")).unwrap().0;
        let dots = sda3_dot(&m, &to_sda3(&m));
        assert_eq!(dots.len(), 3);
        let (name, buf) = &dots[0];
        assert_eq!(name, "buf");
        assert!(buf.contains("n0 [label=\"no_elem\", penwidth=2];"));
        assert!(buf.contains("n1 [label=\"elem\"];"));
        assert!(buf.contains("[label=\"Aprod.buf.put/Aprod.Sprod.ok_put\"]"));
        let ada = ada3_dot(&m, &to_ada3(&m), DotOptions::default());
        assert!(!ada[0].1.contains("label=\"t\""));
        let shown = ada3_dot(
            &m,
            &to_ada3(&m),
            DotOptions {
                show_unreachable_terminal: true,
            },
        );
        assert!(shown[0].1.contains("label=\"t\""));
    }

    #[test]
    fn crossed_ada3_dot_has_t() {
        let m = crossed();
        let dots = ada3_dot(&m, &to_ada3(&m), DotOptions::default());
        assert!(dots[0].1.contains("n2 [label=\"t\", shape=doublecircle];"));
        assert!(dots[0].1.contains("n1 -> n2 [label=\"sem2.up/sem2.down\"];"));
        let sda = sda3_dot(&m, &to_sda3(&m));
        assert!(sda[0].1.contains("a2.sem1.p/—"));
    }

    #[test]
    fn empty_model() {
        let m = ModelBuilder::new("empty").unwrap().build();
        assert!(sda3_dot(&m, &to_sda3(&m)).is_empty());
        assert!(ada3_dot(&m, &to_ada3(&m), DotOptions::default()).is_empty());
    }

    #[test]
    fn json_dump() {
        let m = crossed();
        let json = serde_json::to_value(automata_json(&m, AutomataKind::Ada3)).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["kind"], "ada3");
        assert_eq!(json["automata"][0]["nodes"], serde_json::json!(["sem1.p", "sem2.p", "t"]));
        let json = serde_json::to_value(automata_json(&m, AutomataKind::Sda3)).unwrap();
        assert_eq!(json["automata"][0]["transitions"][0]["action_label"], "A");
    }
}

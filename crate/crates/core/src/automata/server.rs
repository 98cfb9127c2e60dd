use std::collections::BTreeSet;

use serde::Serialize;

use crate::graph::{explore, LimitExceeded, Limits, StateGraph};
use crate::model::{ActionId, Configuration, Message, SystemModel};

/// `(p, m/m', p')` in the automaton of the server owning `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SdaTransition {
    pub action: ActionId,
    pub from: usize,
    pub input: Message,
    pub output: Option<Message>,
    pub to: usize,
}

/// Server automaton: nodes are the server's values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ServerAutomaton {
    pub server: usize,
    pub name: String,
    pub nodes: Vec<String>,
    pub initial: usize,
    pub transitions: Vec<SdaTransition>,
    /// Messages addressed to this server.
    pub alphabet: Vec<Message>,
    pub initial_inputs: BTreeSet<Message>,
}

impl ServerAutomaton {
    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = (usize, &SdaTransition)> {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.from == node)
    }
}

/// Global position: current node of each server automaton and its input set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SdaPosition {
    pub nodes: Vec<usize>,
    pub inputs: Vec<BTreeSet<Message>>,
}

impl SdaPosition {
    pub fn to_configuration(&self, agents: usize) -> Result<Configuration, String> {
        let mut messages = vec![None; agents];
        for set in &self.inputs {
            for &m in set {
                let slot = messages
                    .get_mut(m.agent)
                    .ok_or_else(|| format!("message of unknown agent {}", m.agent))?;
                if slot.replace(m).is_some() {
                    return Err(format!("agent {} has two pending messages", m.agent));
                }
            }
        }
        Ok(Configuration {
            states: self.nodes.clone(),
            messages,
        })
    }
}

/// The SDA³ system: one automaton per server, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sda3 {
    pub automata: Vec<ServerAutomaton>,
}

pub fn to_sda3(model: &SystemModel) -> Sda3 {
    let messages = model.all_messages();
    let automata = model
        .servers()
        .iter()
        .enumerate()
        .map(|(s, decl)| ServerAutomaton {
            server: s,
            name: decl.name.to_string(),
            nodes: decl.values.iter().map(|v| v.to_string()).collect(),
            initial: model.initial_states()[s].unwrap_or(0),
            transitions: model
                .server_actions(s)
                .map(|id| {
                    let a = model.action(id);
                    SdaTransition {
                        action: id,
                        from: a.state.value,
                        input: a.input,
                        output: a.output,
                        to: a.next.value,
                    }
                })
                .collect(),
            alphabet: messages.iter().copied().filter(|m| m.server == s).collect(),
            initial_inputs: model
                .initial_messages()
                .iter()
                .flatten()
                .copied()
                .filter(|m| m.server == s)
                .collect(),
        })
        .collect();
    Sda3 { automata }
}

impl Sda3 {
    pub fn initial_position(&self) -> SdaPosition {
        SdaPosition {
            nodes: self.automata.iter().map(|a| a.initial).collect(),
            inputs: self.automata.iter().map(|a| a.initial_inputs.clone()).collect(),
        }
    }

    pub fn is_enabled(&self, position: &SdaPosition, automaton: usize, transition: usize) -> bool {
        let t = &self.automata[automaton].transitions[transition];
        position.nodes[automaton] == t.from && position.inputs[automaton].contains(&t.input)
    }

    /// Enabled `(automaton, transition)` pairs, automata in order.
    pub fn enabled(&self, position: &SdaPosition) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (s, a) in self.automata.iter().enumerate() {
            for (k, t) in a.outgoing(position.nodes[s]) {
                if position.inputs[s].contains(&t.input) {
                    out.push((s, k));
                }
            }
        }
        out
    }

    /// Takes `m` from the own input set and puts `m'` into the input set of
    /// the server it addresses.
    pub fn fire(&self, position: &SdaPosition, automaton: usize, transition: usize) -> SdaPosition {
        let t = &self.automata[automaton].transitions[transition];
        let mut next = position.clone();
        next.inputs[automaton].remove(&t.input);
        if let Some(out) = t.output {
            next.inputs[out.server].insert(out);
        }
        next.nodes[automaton] = t.to;
        next
    }

    pub fn locate(&self, action: ActionId) -> Option<(usize, usize)> {
        self.automata.iter().enumerate().find_map(|(s, a)| {
            a.transitions.iter().position(|t| t.action == action).map(|k| (s, k))
        })
    }

    pub fn position_of(&self, config: &Configuration) -> SdaPosition {
        let mut inputs = vec![BTreeSet::new(); self.automata.len()];
        for m in config.messages.iter().flatten() {
            inputs[m.server].insert(*m);
        }
        SdaPosition {
            nodes: config.states.clone(),
            inputs,
        }
    }

    /// Global graph; edge labels are action ids.
    pub fn global_graph(&self, limits: Limits) -> Result<StateGraph<SdaPosition>, LimitExceeded> {
        explore(self.initial_position(), limits, |pos, out| {
            for (s, k) in self.enabled(pos) {
                out.push((self.automata[s].transitions[k].action, self.fire(pos, s, k)));
            }
        })
    }
}

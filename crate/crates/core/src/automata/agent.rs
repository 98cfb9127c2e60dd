use serde::Serialize;

use crate::graph::{explore, LimitExceeded, Limits, StateGraph};
use crate::model::{ActionId, Configuration, Message, ServerState, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdaNode {
    Message(Message),
    /// The agent has terminated.
    Terminal,
}

/// `(m, p/p', m')` in the automaton of the agent of `m`; `to` may be the
/// terminal node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdaTransition {
    pub action: ActionId,
    pub from: usize,
    pub input: ServerState,
    pub output: ServerState,
    pub to: usize,
}

/// Agent automaton: nodes are the agent's messages followed by the terminal
/// node, which is always last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentAutomaton {
    pub agent: usize,
    pub name: String,
    pub nodes: Vec<AdaNode>,
    pub initial: usize,
    pub transitions: Vec<AdaTransition>,
}

impl AgentAutomaton {
    pub fn terminal(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node_of(&self, message: Option<Message>) -> Option<usize> {
        let target = message.map_or(AdaNode::Terminal, AdaNode::Message);
        self.nodes.iter().position(|n| *n == target)
    }

    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = (usize, &AdaTransition)> {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.from == node)
    }

    /// Whether some transition leads to `t`.
    pub fn can_terminate(&self) -> bool {
        self.transitions.iter().any(|t| t.to == self.terminal())
    }
}

/// Global position: node of each agent automaton plus the global input
/// vector (one value per server).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AdaPosition {
    pub nodes: Vec<AdaNode>,
    pub vector: Vec<usize>,
}

impl AdaPosition {
    pub fn to_configuration(&self) -> Configuration {
        Configuration {
            states: self.vector.clone(),
            messages: self
                .nodes
                .iter()
                .map(|n| match n {
                    AdaNode::Message(m) => Some(*m),
                    AdaNode::Terminal => None,
                })
                .collect(),
        }
    }

    pub fn terminated(&self, agent: usize) -> bool {
        self.nodes[agent] == AdaNode::Terminal
    }
}

/// The ADA³ system: one automaton per agent, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ada3 {
    pub automata: Vec<AgentAutomaton>,
}

pub fn to_ada3(model: &SystemModel) -> Ada3 {
    let automata = model
        .agents()
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let mut nodes: Vec<AdaNode> = model.agent_messages(a).into_iter().map(AdaNode::Message).collect();
            nodes.push(AdaNode::Terminal);
            let index = |target: AdaNode| nodes.iter().position(|n| *n == target).expect("message of this agent");
            let transitions = model
                .agent_actions(a)
                .map(|id| {
                    let act = model.action(id);
                    AdaTransition {
                        action: id,
                        from: index(AdaNode::Message(act.input)),
                        input: act.state,
                        output: act.next,
                        to: index(act.output.map_or(AdaNode::Terminal, AdaNode::Message)),
                    }
                })
                .collect();
            let initial = match model.initial_messages()[a] {
                Some(m) => index(AdaNode::Message(m)),
                None => nodes.len() - 1,
            };
            AgentAutomaton {
                agent: a,
                name: name.to_string(),
                nodes,
                initial,
                transitions,
            }
        })
        .collect();
    Ada3 { automata }
}

impl Ada3 {
    pub fn initial_position(&self, model: &SystemModel) -> AdaPosition {
        AdaPosition {
            nodes: self.automata.iter().map(|a| a.nodes[a.initial]).collect(),
            vector: model.initial_states().iter().map(|v| v.unwrap_or(0)).collect(),
        }
    }

    fn node_index(&self, position: &AdaPosition, agent: usize) -> usize {
        let a = &self.automata[agent];
        a.nodes.iter().position(|n| *n == position.nodes[agent]).unwrap_or(a.terminal())
    }

    pub fn is_enabled(&self, position: &AdaPosition, automaton: usize, transition: usize) -> bool {
        let t = &self.automata[automaton].transitions[transition];
        self.node_index(position, automaton) == t.from && position.vector[t.input.server] == t.input.value
    }

    /// Enabled `(automaton, transition)` pairs, automata in order.
    pub fn enabled(&self, position: &AdaPosition) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, automaton) in self.automata.iter().enumerate() {
            for (k, t) in automaton.outgoing(self.node_index(position, a)) {
                if position.vector[t.input.server] == t.input.value {
                    out.push((a, k));
                }
            }
        }
        out
    }

    /// Exchanges `p` for `p'` in the global input vector and moves the agent
    /// to `m'` (or `t`).
    pub fn fire(&self, position: &AdaPosition, automaton: usize, transition: usize) -> AdaPosition {
        let a = &self.automata[automaton];
        let t = &a.transitions[transition];
        let mut next = position.clone();
        next.vector[t.output.server] = t.output.value;
        next.nodes[automaton] = a.nodes[t.to];
        next
    }

    pub fn locate(&self, action: ActionId) -> Option<(usize, usize)> {
        self.automata.iter().enumerate().find_map(|(a, aut)| {
            aut.transitions.iter().position(|t| t.action == action).map(|k| (a, k))
        })
    }

    pub fn position_of(&self, config: &Configuration) -> AdaPosition {
        AdaPosition {
            nodes: config
                .messages
                .iter()
                .map(|m| m.map_or(AdaNode::Terminal, AdaNode::Message))
                .collect(),
            vector: config.states.clone(),
        }
    }

    /// Global graph; edge labels are action ids.
    pub fn global_graph(&self, model: &SystemModel, limits: Limits) -> Result<StateGraph<AdaPosition>, LimitExceeded> {
        explore(self.initial_position(model), limits, |pos, out| {
            for (a, k) in self.enabled(pos) {
                out.push((self.automata[a].transitions[k].action, self.fire(pos, a, k)));
            }
        })
    }
}

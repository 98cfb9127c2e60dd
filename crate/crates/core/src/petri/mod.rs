//! Place/transition net equivalent of an IMDS model.
//!
//! Every server state becomes a place (drawn red), every message that can
//! occur becomes a place (drawn green), and every action becomes a transition
//! consuming its input message and state and producing its output message (if
//! any) and next state. Reachable markings are then exactly configurations.

mod andl;
mod dot;
mod invariant;
mod report;
mod siphon;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use andl::{read_andl, to_andl, AndlError};
pub use dot::to_dot;
pub use invariant::p_invariants;
pub use report::{structural_report, Component, StructuralReport};
pub use siphon::{is_siphon, is_trap, minimal_siphons, minimal_traps, siphon_emptiable, SearchLimitExceeded, SiphonSearch};

use crate::graph::{explore, LimitExceeded, Limits, StateGraph};
use crate::iso::{check_structural, IsoReport};
use crate::lts::Lts;
use crate::model::{ActionId, Configuration, Message, ServerState, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceKind {
    State,
    Message,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceOrigin {
    State(ServerState),
    Message(Message),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Place {
    pub name: String,
    pub kind: PlaceKind,
    /// `None` for nets read back from ANDL.
    pub origin: Option<PlaceOrigin>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub name: String,
    pub action: Option<ActionId>,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

/// Token count per place.
pub type Marking = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PetriNet {
    pub name: String,
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub initial_marking: Marking,
}

impl PetriNet {
    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p.name == name)
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    pub fn is_enabled(&self, marking: &[u32], transition: usize) -> bool {
        let t = &self.transitions[transition];
        // weights are multiplicities of repeated entries
        t.inputs
            .iter()
            .all(|&p| marking[p] as usize >= t.inputs.iter().filter(|&&q| q == p).count())
    }

    pub fn fire(&self, marking: &[u32], transition: usize) -> Marking {
        let t = &self.transitions[transition];
        let mut next = marking.to_vec();
        for &p in &t.inputs {
            next[p] -= 1;
        }
        for &p in &t.outputs {
            next[p] += 1;
        }
        next
    }

    /// Transitions with an output arc into `place`.
    pub fn pre_set(&self, place: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.transitions.len()).filter(move |&t| self.transitions[t].outputs.contains(&place))
    }

    /// Transitions with an input arc from `place`.
    pub fn post_set(&self, place: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.transitions.len()).filter(move |&t| self.transitions[t].inputs.contains(&place))
    }

    /// Incidence matrix, `[place][transition]` = produced - consumed.
    pub fn incidence(&self) -> Vec<Vec<i64>> {
        let mut c = vec![vec![0i64; self.transitions.len()]; self.places.len()];
        for (j, t) in self.transitions.iter().enumerate() {
            for &p in &t.inputs {
                c[p][j] -= 1;
            }
            for &p in &t.outputs {
                c[p][j] += 1;
            }
        }
        c
    }

    /// Net with every arc reversed.
    pub fn dual(&self) -> PetriNet {
        let mut net = self.clone();
        for t in &mut net.transitions {
            std::mem::swap(&mut t.inputs, &mut t.outputs);
        }
        net
    }

    pub fn marking_text(&self, marking: &[u32]) -> String {
        let parts: Vec<String> = marking
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(p, &k)| {
                if k == 1 {
                    self.places[p].name.clone()
                } else {
                    format!("{}*{k}", self.places[p].name)
                }
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

fn unique(name: String, used: &mut HashSet<String>) -> String {
    if used.insert(name.clone()) {
        return name;
    }
    let mut k = 2;
    loop {
        let candidate = format!("{name}__{k}");
        if used.insert(candidate.clone()) {
            return candidate;
        }
        k += 1;
    }
}

/// Builds the net. Places: state places in server declaration order, then
/// message places per agent (initial message first, then order of first
/// appearance). Transition `k` corresponds to action `k`.
pub fn to_petri(model: &SystemModel) -> PetriNet {
    let mut used = HashSet::new();
    let mut places = Vec::new();
    let mut state_place = HashMap::new();
    for (s, decl) in model.servers().iter().enumerate() {
        for v in 0..decl.values.len() {
            let state = ServerState { server: s, value: v };
            let name = unique(format!("S_{}_{}", decl.name, decl.values[v]), &mut used);
            state_place.insert(state, places.len());
            places.push(Place {
                name,
                kind: PlaceKind::State,
                origin: Some(PlaceOrigin::State(state)),
            });
        }
    }
    let mut message_place = HashMap::new();
    for m in model.all_messages() {
        let name = unique(
            format!("M_{}_{}_{}", model.agent_name(m.agent), model.server_name(m.server), model.service_name(m)),
            &mut used,
        );
        message_place.insert(m, places.len());
        places.push(Place {
            name,
            kind: PlaceKind::Message,
            origin: Some(PlaceOrigin::Message(m)),
        });
    }

    let transitions = model
        .actions()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let mut outputs = Vec::with_capacity(2);
            if let Some(out) = a.output {
                outputs.push(message_place[&out]);
            }
            outputs.push(state_place[&a.next]);
            Transition {
                name: unique(
                    format!("T{k}_{}_{}", model.server_name(a.state.server), model.service_name(a.input)),
                    &mut used,
                ),
                action: Some(k),
                inputs: vec![message_place[&a.input], state_place[&a.state]],
                outputs,
            }
        })
        .collect();

    let mut initial_marking = vec![0; places.len()];
    for (s, v) in model.initial_states().iter().enumerate() {
        if let Some(v) = v {
            initial_marking[state_place[&ServerState { server: s, value: *v }]] = 1;
        }
    }
    for m in model.initial_messages().iter().flatten() {
        initial_marking[message_place[m]] = 1;
    }

    PetriNet {
        name: model.name().to_string(),
        places,
        transitions,
        initial_marking,
    }
}

/// Reachable markings; node 0 is the initial marking and edge labels are
/// transition indices.
pub fn marking_graph(net: &PetriNet, limits: Limits) -> Result<StateGraph<Marking>, LimitExceeded> {
    explore(net.initial_marking.clone(), limits, |marking, out| {
        for t in 0..net.transitions.len() {
            if net.is_enabled(marking, t) {
                out.push((t, net.fire(marking, t)));
            }
        }
    })
}

/// The configuration a marking stands for, given the shape of configurations
/// (`servers`, `agents`).
pub fn marking_to_configuration(
    net: &PetriNet,
    marking: &[u32],
    servers: usize,
    agents: usize,
) -> Result<Configuration, String> {
    let mut states: Vec<Option<usize>> = vec![None; servers];
    let mut messages: Vec<Option<Message>> = vec![None; agents];
    for (p, &k) in marking.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let place = &net.places[p];
        if k > 1 {
            return Err(format!("place {} holds {k} tokens", place.name));
        }
        match place.origin {
            Some(PlaceOrigin::State(st)) => {
                let slot = states.get_mut(st.server).ok_or("state place of an unknown server")?;
                if slot.replace(st.value).is_some() {
                    return Err(format!("server {} is marked twice", st.server));
                }
            }
            Some(PlaceOrigin::Message(m)) => {
                let slot = messages.get_mut(m.agent).ok_or("message place of an unknown agent")?;
                if slot.replace(m).is_some() {
                    return Err(format!("agent {} carries two messages", m.agent));
                }
            }
            None => return Err(format!("place {} has no origin", place.name)),
        }
    }
    let states = states
        .into_iter()
        .enumerate()
        .map(|(s, v)| v.ok_or_else(|| format!("server {s} has no marked state place")))
        .collect::<Result<_, _>>()?;
    Ok(Configuration { states, messages })
}

/// Verifies marking graph ≅ LTS under marking ↔ configuration and
/// transition ↔ action.
pub fn check_iso_with_lts(net: &PetriNet, graph: &StateGraph<Marking>, lts: &Lts) -> IsoReport {
    let shape = lts.configuration(0);
    let (servers, agents) = (shape.states.len(), shape.messages.len());
    check_structural(
        graph,
        lts,
        |m| marking_to_configuration(net, m, servers, agents),
        |t| net.transitions.get(t).and_then(|t| t.action),
    )
}

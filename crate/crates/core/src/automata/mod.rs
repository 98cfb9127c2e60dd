//! DA³ automata: the server-side (SDA³) and agent-side (ADA³) readings of a model.
//!
//! In SDA³ each server is a Mealy-style automaton over its values. A transition
//! `(p, m/m', p')` consumes `m` from the server's unordered input set and sends
//! `m'` to the input set of the server it names. In ADA³ each agent is an
//! automaton over its messages plus a terminal node `t`. A transition
//! `(m, p/p', m')` reads `p` from the global input vector (one current value per
//! server) and writes `p'` back.
//!
//! Input sets are subsets of the server's message alphabet (the powerset of
//! the alphabet is the space of possible input sets). Both global graphs are
//! isomorphic to the LTS.

mod agent;
mod export;
mod server;

pub use agent::{to_ada3, Ada3, AdaNode, AdaPosition, AdaTransition, AgentAutomaton};
pub use export::{ada3_dot, automata_json, dot_index, sda3_dot, AutomataJson, AutomatonJson, DotOptions};
pub use server::{to_sda3, SdaPosition, SdaTransition, Sda3, ServerAutomaton};

use serde::{Deserialize, Serialize};

use crate::graph::StateGraph;
use crate::iso::{check_structural, IsoReport};
use crate::lts::Lts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutomataKind {
    Sda3,
    Ada3,
}

impl AutomataKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AutomataKind::Sda3 => "sda3",
            AutomataKind::Ada3 => "ada3",
        }
    }
}

impl std::str::FromStr for AutomataKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sda3" | "sda" | "server" => Ok(AutomataKind::Sda3),
            "ada3" | "ada" | "agent" => Ok(AutomataKind::Ada3),
            _ => Err(format!("unknown automata kind `{s}` (expected sda3 or ada3)")),
        }
    }
}

pub fn check_sda3_iso(graph: &StateGraph<SdaPosition>, lts: &Lts) -> IsoReport {
    let agents = lts.configuration(0).messages.len();
    check_structural(graph, lts, |p| p.to_configuration(agents), Some)
}

pub fn check_ada3_iso(graph: &StateGraph<AdaPosition>, lts: &Lts) -> IsoReport {
    check_structural(graph, lts, |p| Ok(p.to_configuration()), Some)
}

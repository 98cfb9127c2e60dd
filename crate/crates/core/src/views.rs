//! Server and agent process decomposition of the action set.

use serde::Serialize;

use crate::model::{ActionId, Message, ServerState, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Server,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Carriers {
    States(Vec<ServerState>),
    Messages(Vec<Message>),
}

/// Actions owned by one server or agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessBlock {
    pub owner: usize,
    pub name: String,
    pub actions: Vec<ActionId>,
    pub carriers: Carriers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessPartition {
    pub kind: ProcessKind,
    pub blocks: Vec<ProcessBlock>,
}

impl ProcessPartition {
    pub fn block(&self, name: &str) -> Option<&ProcessBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

/// Groups actions by the server of their input state.
pub fn server_processes(model: &SystemModel) -> ProcessPartition {
    let blocks = model
        .servers()
        .iter()
        .enumerate()
        .map(|(s, decl)| ProcessBlock {
            owner: s,
            name: decl.name.to_string(),
            actions: model.server_actions(s).collect(),
            carriers: Carriers::States(
                (0..decl.values.len())
                    .map(|value| ServerState { server: s, value })
                    .collect(),
            ),
        })
        .collect();
    ProcessPartition {
        kind: ProcessKind::Server,
        blocks,
    }
}

/// Groups actions by the agent of their input message.
pub fn agent_processes(model: &SystemModel) -> ProcessPartition {
    let blocks = model
        .agents()
        .iter()
        .enumerate()
        .map(|(a, name)| ProcessBlock {
            owner: a,
            name: name.to_string(),
            actions: model.agent_actions(a).collect(),
            carriers: Carriers::Messages(model.agent_messages(a)),
        })
        .collect();
    ProcessPartition {
        kind: ProcessKind::Agent,
        blocks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;
    use crate::parser::parse;

    fn labels(model: &SystemModel, p: &ProcessPartition, name: &str) -> Vec<String> {
        let mut v: Vec<String> = p
            .block(name)
            .unwrap()
            .actions
            .iter()
            .map(|&id| model.action_label(id).to_string())
            .collect();
        v.sort();
        v
    }

    #[test]
    fn buffer_partitions() {
        let (m, _) = parse(include_str!("../../../corpus/buffer.imds")).unwrap();
        let sp = server_processes(&m);
        for s in ["buf", "Sprod", "Scons"] {
            assert_eq!(sp.block(s).unwrap().actions.len(), 2);
        }
        let ap = agent_processes(&m);
        assert_eq!(ap.block("Aprod").unwrap().actions.len(), 3);
        assert_eq!(ap.block("Acons").unwrap().actions.len(), 3);
    }

    #[test]
    fn crossed_partitions() {
        let (m, _) = parse(include_str!("../../../corpus/crossed.imds")).unwrap();
        let sp = server_processes(&m);
        assert_eq!(labels(&m, &sp, "sem1"), ["A", "D"]);
        assert_eq!(labels(&m, &sp, "sem2"), ["B", "C"]);
        let ap = agent_processes(&m);
        assert_eq!(labels(&m, &ap, "a1"), ["A", "B"]);
        assert_eq!(labels(&m, &ap, "a2"), ["C", "D"]);
    }

    #[test]
    fn partitions_cover_actions_exactly_once() {
        let (m, _) = parse(include_str!("../../../corpus/buffer.imds")).unwrap();
        for p in [server_processes(&m), agent_processes(&m)] {
            let mut all: Vec<ActionId> = p.blocks.iter().flat_map(|b| b.actions.clone()).collect();
            all.sort();
            assert_eq!(all, (0..m.actions().len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn inert_server_and_empty_action_set() {
        let mut b = ModelBuilder::new("m").unwrap();
        b.server("idle", &["v"], &["r"]).unwrap();
        b.agent("a").unwrap();
        b.init_state(b.state("idle", "v").unwrap());
        b.init_message(b.message("a", "idle", "r").unwrap());
        let m = b.build();
        assert!(server_processes(&m).blocks[0].actions.is_empty());
        assert!(agent_processes(&m).blocks.iter().all(|b| b.actions.is_empty()));
    }
}

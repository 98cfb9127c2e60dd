//! Deadlock, termination and dead-action verdicts over a complete LTS.
//!
//! Definitions used throughout:
//!
//! * total deadlock: a reachable configuration with at least one pending
//!   message and no enabled action (zero pending messages is termination);
//! * partial deadlock of agent `a`: a reachable configuration where `a` has a
//!   pending message and no configuration reachable from it (itself included)
//!   enables an action of `a`;
//! * partial deadlock of server `s`: a reachable configuration with a message
//!   pending at `s` from which no action owned by `s` is ever enabled again.

use std::fmt::Write as _;

use serde::Serialize;

use crate::lts::Lts;
use crate::model::{ActionId, SystemModel};
use crate::trace::{Trace, TraceStep};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    TotalDeadlock,
    PartialDeadlockAgent,
    PartialDeadlockServer,
    TotalTermination,
    AgentTermination,
    DeadAction,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictKind::TotalDeadlock => "total-deadlock",
            VerdictKind::PartialDeadlockAgent => "partial-deadlock-agent",
            VerdictKind::PartialDeadlockServer => "partial-deadlock-server",
            VerdictKind::TotalTermination => "total-termination",
            VerdictKind::AgentTermination => "agent-termination",
            VerdictKind::DeadAction => "dead-action",
        }
    }

    pub fn is_deadlock(&self) -> bool {
        matches!(
            self,
            VerdictKind::TotalDeadlock | VerdictKind::PartialDeadlockAgent | VerdictKind::PartialDeadlockServer
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Agent, server or action label the verdict is about.
    pub subject: Option<String>,
    pub holds: bool,
    pub witness: Option<Trace>,
    /// LTS node the witness ends in.
    pub node: Option<usize>,
}

impl Verdict {
    fn negative(kind: VerdictKind, subject: Option<String>) -> Self {
        Verdict {
            kind,
            subject,
            holds: false,
            witness: None,
            node: None,
        }
    }

    fn witnessed(kind: VerdictKind, subject: Option<String>, lts: &Lts, node: usize) -> Self {
        Verdict {
            kind,
            subject,
            holds: true,
            witness: Some(Trace::new(lts.path_to(node))),
            node: Some(node),
        }
    }

    /// `kind` or `kind:subject`.
    pub fn id(&self) -> String {
        match &self.subject {
            Some(s) => format!("{}:{s}", self.kind.as_str()),
            None => self.kind.as_str().to_string(),
        }
    }
}

/// Holds iff some reachable node has a pending message and nothing enabled.
///
/// Among the nearest such nodes the one with the most pending messages is
/// reported, so the witness shows the largest set of stuck agents.
pub fn detect_total_deadlock(_model: &SystemModel, lts: &Lts) -> Verdict {
    let depths = lts.depths();
    let best = (0..lts.node_count())
        .filter(|&n| lts.enabled_count(n) == 0 && lts.configuration(n).pending_count() > 0)
        .min_by_key(|&n| (depths[n], std::cmp::Reverse(lts.configuration(n).pending_count()), n));
    match best {
        Some(node) => Verdict::witnessed(VerdictKind::TotalDeadlock, None, lts, node),
        None => Verdict::negative(VerdictKind::TotalDeadlock, None),
    }
}

fn enabling_nodes(lts: &Lts, owns: impl Fn(ActionId) -> bool) -> Vec<bool> {
    (0..lts.node_count())
        .map(|n| lts.out_edges(n).iter().any(|e| owns(e.label)))
        .collect()
}

/// One verdict per agent.
pub fn detect_partial_deadlock_agents(model: &SystemModel, lts: &Lts) -> Vec<Verdict> {
    (0..model.agents().len())
        .map(|agent| {
            let helped = lts.can_reach(&enabling_nodes(lts, |id| model.action(id).input.agent == agent));
            let subject = Some(model.agent_name(agent).to_string());
            let stuck = (0..lts.node_count())
                .find(|&n| lts.configuration(n).messages[agent].is_some() && !helped[n]);
            match stuck {
                Some(node) => Verdict::witnessed(VerdictKind::PartialDeadlockAgent, subject, lts, node),
                None => Verdict::negative(VerdictKind::PartialDeadlockAgent, subject),
            }
        })
        .collect()
}

/// One verdict per server.
pub fn detect_partial_deadlock_servers(model: &SystemModel, lts: &Lts) -> Vec<Verdict> {
    (0..model.servers().len())
        .map(|server| {
            let helped = lts.can_reach(&enabling_nodes(lts, |id| model.action(id).state.server == server));
            let subject = Some(model.server_name(server).to_string());
            let stuck = (0..lts.node_count()).find(|&n| {
                !helped[n]
                    && lts
                        .configuration(n)
                        .messages
                        .iter()
                        .flatten()
                        .any(|m| m.server == server)
            });
            match stuck {
                Some(node) => Verdict::witnessed(VerdictKind::PartialDeadlockServer, subject, lts, node),
                None => Verdict::negative(VerdictKind::PartialDeadlockServer, subject),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentTermination {
    pub agent: String,
    pub can_terminate: bool,
    pub must_terminate: bool,
    pub witness: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminationReport {
    pub agents: Vec<AgentTermination>,
    pub total_can: bool,
    pub total_must: bool,
    pub total_witness: Option<Trace>,
}

/// True iff the subgraph induced by `alive` has no sink and no cycle, i.e.
/// every maximal path eventually leaves it.
fn always_leaves(lts: &Lts, alive: &[bool]) -> bool {
    let n = lts.node_count();
    if (0..n).any(|v| alive[v] && lts.out_degree(v) == 0) {
        return false;
    }
    // Kahn's algorithm restricted to alive nodes
    let mut indegree = vec![0usize; n];
    for e in &lts.edges {
        if alive[e.source] && alive[e.target] {
            indegree[e.target] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| alive[v] && indegree[v] == 0).collect();
    let mut removed = 0;
    while let Some(v) = stack.pop() {
        removed += 1;
        for e in lts.out_edges(v) {
            if alive[e.target] {
                indegree[e.target] -= 1;
                if indegree[e.target] == 0 {
                    stack.push(e.target);
                }
            }
        }
    }
    removed == alive.iter().filter(|a| **a).count()
}

pub fn detect_termination(model: &SystemModel, lts: &Lts) -> TerminationReport {
    let agents = (0..model.agents().len())
        .map(|agent| {
            let alive: Vec<bool> = lts.nodes.iter().map(|c| c.messages[agent].is_some()).collect();
            let first_dead = alive.iter().position(|a| !a);
            AgentTermination {
                agent: model.agent_name(agent).to_string(),
                can_terminate: first_dead.is_some(),
                must_terminate: always_leaves(lts, &alive),
                witness: first_dead.map(|n| Trace::new(lts.path_to(n))),
            }
        })
        .collect();
    let alive: Vec<bool> = lts.nodes.iter().map(|c| c.pending_count() > 0).collect();
    let first_empty = alive.iter().position(|a| !a);
    TerminationReport {
        agents,
        total_can: first_empty.is_some(),
        total_must: always_leaves(lts, &alive),
        total_witness: first_empty.map(|n| Trace::new(lts.path_to(n))),
    }
}

/// Actions that label no LTS edge.
pub fn dead_actions(model: &SystemModel, lts: &Lts) -> Vec<ActionId> {
    let mut fired = vec![false; model.actions().len()];
    for e in &lts.edges {
        fired[e.label] = true;
    }
    (0..fired.len()).filter(|&id| !fired[id]).collect()
}

/// All verdicts for one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub model: String,
    pub nodes: usize,
    pub edges: usize,
    pub total_deadlock: Verdict,
    pub agent_deadlocks: Vec<Verdict>,
    pub server_deadlocks: Vec<Verdict>,
    pub termination: TerminationReport,
    pub dead_actions: Vec<ActionId>,
}

pub fn analyze(model: &SystemModel, lts: &Lts) -> Report {
    Report {
        model: model.name().to_string(),
        nodes: lts.node_count(),
        edges: lts.edge_count(),
        total_deadlock: detect_total_deadlock(model, lts),
        agent_deadlocks: detect_partial_deadlock_agents(model, lts),
        server_deadlocks: detect_partial_deadlock_servers(model, lts),
        termination: detect_termination(model, lts),
        dead_actions: dead_actions(model, lts),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictJson {
    pub id: String,
    pub kind: VerdictKind,
    pub subject: Option<String>,
    pub holds: bool,
    pub witness: Option<Vec<TraceStep>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentTerminationJson {
    pub agent: String,
    pub can_terminate: bool,
    pub must_terminate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TerminationJson {
    pub agents: Vec<AgentTerminationJson>,
    pub total_can: bool,
    pub total_must: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LtsSummary {
    pub nodes: usize,
    pub edges: usize,
}

/// Serialized form of a [`Report`].
#[derive(Debug, Clone, Serialize)]
pub struct ReportJson {
    pub schema_version: u32,
    pub model: String,
    pub lts: LtsSummary,
    pub deadlock_found: bool,
    pub verdicts: Vec<VerdictJson>,
    pub termination: TerminationJson,
    pub dead_actions: Vec<String>,
}

impl Report {
    /// Every verdict: total deadlock, per-agent and per-server partial
    /// deadlocks, total and per-agent termination, dead actions.
    pub fn verdicts(&self, model: &SystemModel) -> Vec<Verdict> {
        let mut out = vec![self.total_deadlock.clone()];
        out.extend(self.agent_deadlocks.iter().cloned());
        out.extend(self.server_deadlocks.iter().cloned());
        out.push(Verdict {
            kind: VerdictKind::TotalTermination,
            subject: None,
            holds: self.termination.total_can,
            witness: self.termination.total_witness.clone(),
            node: None,
        });
        out.extend(self.termination.agents.iter().map(|a| Verdict {
            kind: VerdictKind::AgentTermination,
            subject: Some(a.agent.clone()),
            holds: a.can_terminate,
            witness: a.witness.clone(),
            node: None,
        }));
        out.extend(self.dead_actions.iter().map(|&id| Verdict {
            kind: VerdictKind::DeadAction,
            subject: Some(model.action_label(id).to_string()),
            holds: true,
            witness: None,
            node: None,
        }));
        out
    }

    pub fn verdict(&self, model: &SystemModel, id: &str) -> Option<Verdict> {
        self.verdicts(model).into_iter().find(|v| v.id() == id)
    }

    pub fn any_deadlock(&self) -> bool {
        self.total_deadlock.holds
            || self.agent_deadlocks.iter().any(|v| v.holds)
            || self.server_deadlocks.iter().any(|v| v.holds)
    }

    pub fn to_json(&self, model: &SystemModel) -> ReportJson {
        ReportJson {
            schema_version: REPORT_SCHEMA_VERSION,
            model: self.model.clone(),
            lts: LtsSummary {
                nodes: self.nodes,
                edges: self.edges,
            },
            deadlock_found: self.any_deadlock(),
            verdicts: self
                .verdicts(model)
                .into_iter()
                .map(|v| VerdictJson {
                    id: v.id(),
                    kind: v.kind,
                    subject: v.subject.clone(),
                    holds: v.holds,
                    witness: v.witness.as_ref().map(|t| t.steps(model).expect("witness replays")),
                })
                .collect(),
            termination: TerminationJson {
                agents: self
                    .termination
                    .agents
                    .iter()
                    .map(|a| AgentTerminationJson {
                        agent: a.agent.clone(),
                        can_terminate: a.can_terminate,
                        must_terminate: a.must_terminate,
                    })
                    .collect(),
                total_can: self.termination.total_can,
                total_must: self.termination.total_must,
            },
            dead_actions: self
                .dead_actions
                .iter()
                .map(|&id| model.action_label(id).to_string())
                .collect(),
        }
    }

    /// Human-readable table, one verdict per line, followed by witnesses.
    pub fn to_table(&self, model: &SystemModel) -> String {
        let mut out = String::new();
        writeln!(out, "model {}: LTS {} nodes / {} edges", self.model, self.nodes, self.edges).unwrap();
        let verdicts = self.verdicts(model);
        let width = verdicts.iter().map(|v| v.id().len()).max().unwrap_or(0);
        for v in &verdicts {
            let status = if v.holds { "HOLDS" } else { "no" };
            let witness = match &v.witness {
                Some(t) => format!("  witness length {}", t.len()),
                None => String::new(),
            };
            writeln!(out, "{:width$}  {status}{witness}", v.id()).unwrap();
        }
        for a in &self.termination.agents {
            writeln!(
                out,
                "termination {}: can={} must={}",
                a.agent, a.can_terminate, a.must_terminate
            )
            .unwrap();
        }
        writeln!(
            out,
            "termination total: can={} must={}",
            self.termination.total_can, self.termination.total_must
        )
        .unwrap();
        for v in verdicts.iter().filter(|v| v.holds && v.kind.is_deadlock()) {
            if let Some(t) = &v.witness {
                writeln!(out, "\ncounterexample for {}:", v.id()).unwrap();
                writeln!(out, "  {}", model.configuration_text(&model.initial_configuration())).unwrap();
                for step in t.steps(model).expect("witness replays") {
                    writeln!(out, "  --{}--> {}", step.action, step.target).unwrap();
                }
            }
        }
        out
    }
}

//! Step-by-step execution over the DA³ automata.
//!
//! A session keeps only the current global position and the history of fired
//! actions; the global state space is never built. Undo replays the shortened
//! history from the initial position.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::automata::{to_ada3, to_sda3, Ada3, AdaNode, AdaPosition, AutomataKind, Sda3, SdaPosition};
use crate::model::{ActionId, Configuration, SystemModel};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("transition `{0}` is not enabled")]
    TransitionNotEnabled(String),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("trace action {index} (`{action}`) is not enabled at its point")]
    TraceMismatch { index: usize, action: String },
    #[error("no pinned trace to advance along")]
    NoPinnedTrace,
    #[error("pinned trace is fully replayed")]
    PinExhausted,
}

#[derive(Debug, Clone)]
enum Automata {
    Sda3(Sda3),
    Ada3(Ada3),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Position {
    Sda3(SdaPosition),
    Ada3(AdaPosition),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Pin {
    pub trace: Trace,
    pub cursor: usize,
}

/// Result of a step: the fired action and the automaton that should get
/// focus next (the destination of the produced message in SDA³, the stepping
/// agent in ADA³).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub action: ActionId,
    pub label: String,
    pub focus: String,
}

#[derive(Debug, Clone)]
pub struct Session {
    model: Arc<SystemModel>,
    automata: Automata,
    position: Position,
    history: Vec<ActionId>,
    pin: Option<Pin>,
}

impl Session {
    pub fn new(model: Arc<SystemModel>, view: AutomataKind) -> Self {
        let automata = match view {
            AutomataKind::Sda3 => Automata::Sda3(to_sda3(&model)),
            AutomataKind::Ada3 => Automata::Ada3(to_ada3(&model)),
        };
        let mut session = Session {
            position: Position::Sda3(SdaPosition {
                nodes: vec![],
                inputs: vec![],
            }),
            model,
            automata,
            history: Vec::new(),
            pin: None,
        };
        session.position = session.initial_position();
        session
    }

    fn initial_position(&self) -> Position {
        match &self.automata {
            Automata::Sda3(s) => Position::Sda3(s.initial_position()),
            Automata::Ada3(a) => Position::Ada3(a.initial_position(&self.model)),
        }
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn view(&self) -> AutomataKind {
        match self.automata {
            Automata::Sda3(_) => AutomataKind::Sda3,
            Automata::Ada3(_) => AutomataKind::Ada3,
        }
    }

    pub fn history(&self) -> &[ActionId] {
        &self.history
    }

    pub fn pin(&self) -> Option<&Pin> {
        self.pin.as_ref()
    }

    /// The configuration the current position corresponds to.
    pub fn configuration(&self) -> Configuration {
        match &self.position {
            Position::Sda3(p) => p
                .to_configuration(self.model.agents().len())
                .expect("simulator positions are well formed"),
            Position::Ada3(p) => p.to_configuration(),
        }
    }

    /// `(automaton, transition)` of `action` in the current view.
    fn locate(&self, action: ActionId) -> Option<(usize, usize)> {
        match &self.automata {
            Automata::Sda3(s) => s.locate(action),
            Automata::Ada3(a) => a.locate(action),
        }
    }

    fn is_enabled(&self, action: ActionId) -> bool {
        let Some((aut, k)) = self.locate(action) else {
            return false;
        };
        match (&self.automata, &self.position) {
            (Automata::Sda3(s), Position::Sda3(p)) => s.is_enabled(p, aut, k),
            (Automata::Ada3(a), Position::Ada3(p)) => a.is_enabled(p, aut, k),
            _ => unreachable!("view and position always agree"),
        }
    }

    /// Enabled actions, in action order.
    pub fn enabled_actions(&self) -> Vec<ActionId> {
        let mut ids: Vec<ActionId> = match (&self.automata, &self.position) {
            (Automata::Sda3(s), Position::Sda3(p)) => {
                s.enabled(p).into_iter().map(|(a, k)| s.automata[a].transitions[k].action).collect()
            }
            (Automata::Ada3(a), Position::Ada3(p)) => {
                a.enabled(p).into_iter().map(|(x, k)| a.automata[x].transitions[k].action).collect()
            }
            _ => unreachable!("view and position always agree"),
        };
        ids.sort_unstable();
        ids
    }

    /// Every automaton with all of its transitions; those leaving the current
    /// node are flagged, and among them the enabled ones.
    pub fn enabled(&self) -> Vec<AutomatonView> {
        let model = &self.model;
        let item = |index: usize, action: ActionId, from: bool, label: String| ListedTransition {
            index,
            action,
            action_label: model.action_label(action).to_string(),
            label,
            from_current: from,
            enabled: self.is_enabled(action),
        };
        match (&self.automata, &self.position) {
            (Automata::Sda3(s), Position::Sda3(p)) => s
                .automata
                .iter()
                .enumerate()
                .map(|(i, a)| AutomatonView {
                    name: a.name.clone(),
                    current: p.nodes[i],
                    current_label: a.nodes[p.nodes[i]].clone(),
                    terminated: false,
                    input_set: Some(p.inputs[i].iter().map(|&m| model.message_text(m)).collect()),
                    transitions: a
                        .transitions
                        .iter()
                        .enumerate()
                        .map(|(k, t)| {
                            let out = t.output.map_or("—".to_string(), |m| model.message_text(m));
                            let label = format!("{}/{}", model.message_text(t.input), out);
                            item(k, t.action, t.from == p.nodes[i], label)
                        })
                        .collect(),
                })
                .collect(),
            (Automata::Ada3(x), Position::Ada3(p)) => x
                .automata
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let current = a.node_of(match p.nodes[i] {
                        AdaNode::Message(m) => Some(m),
                        AdaNode::Terminal => None,
                    });
                    let current = current.unwrap_or(a.terminal());
                    AutomatonView {
                        name: a.name.clone(),
                        current,
                        current_label: match p.nodes[i] {
                            AdaNode::Message(m) => format!("{}.{}", model.server_name(m.server), model.service_name(m)),
                            AdaNode::Terminal => "t".to_string(),
                        },
                        terminated: p.terminated(i),
                        input_set: None,
                        transitions: a
                            .transitions
                            .iter()
                            .enumerate()
                            .map(|(k, t)| {
                                let label = format!("{}/{}", model.state_text(t.input), model.state_text(t.output));
                                item(k, t.action, t.from == current, label)
                            })
                            .collect(),
                    }
                })
                .collect(),
            _ => unreachable!("view and position always agree"),
        }
    }

    fn fire(&mut self, action: ActionId) -> StepOutcome {
        let (aut, k) = self.locate(action).expect("caller checked enabledness");
        let focus = match (&self.automata, &mut self.position) {
            (Automata::Sda3(s), Position::Sda3(p)) => {
                *p = s.fire(p, aut, k);
                let t = &s.automata[aut].transitions[k];
                t.output.map_or(s.automata[aut].name.clone(), |m| s.automata[m.server].name.clone())
            }
            (Automata::Ada3(a), Position::Ada3(p)) => {
                *p = a.fire(p, aut, k);
                a.automata[aut].name.clone()
            }
            _ => unreachable!("view and position always agree"),
        };
        self.history.push(action);
        StepOutcome {
            action,
            label: self.model.action_label(action).to_string(),
            focus,
        }
    }

    /// Fires an enabled action. A step off the pinned trace drops the pin.
    pub fn step(&mut self, action: ActionId) -> Result<StepOutcome, SimError> {
        if action >= self.model.actions().len() {
            return Err(SimError::UnknownTransition(action.to_string()));
        }
        if !self.is_enabled(action) {
            return Err(SimError::TransitionNotEnabled(self.model.action_label(action).to_string()));
        }
        match &mut self.pin {
            Some(pin) if pin.trace.actions.get(pin.cursor) == Some(&action) => pin.cursor += 1,
            _ => self.pin = None,
        }
        Ok(self.fire(action))
    }

    /// Resolves an action label (or numeric id) and fires it.
    pub fn step_label(&mut self, label: &str) -> Result<StepOutcome, SimError> {
        let id = self
            .model
            .resolve_action(label)
            .ok_or_else(|| SimError::UnknownTransition(label.to_string()))?;
        self.step(id)
    }

    fn replay(&mut self, actions: Vec<ActionId>) {
        self.position = self.initial_position();
        self.history.clear();
        for id in actions {
            self.fire(id);
        }
    }

    pub fn undo(&mut self) -> Result<(), SimError> {
        let mut history = std::mem::take(&mut self.history);
        if history.pop().is_none() {
            return Err(SimError::NothingToUndo);
        }
        if let Some(pin) = &mut self.pin {
            pin.cursor = pin.cursor.saturating_sub(1);
        }
        self.replay(history);
        Ok(())
    }

    pub fn reset(&mut self) {
        if let Some(pin) = &mut self.pin {
            pin.cursor = 0;
        }
        self.replay(Vec::new());
    }

    /// Checks that `trace` replays from the initial position, then resets the
    /// session and pins the trace.
    pub fn load_trace(&mut self, trace: Trace) -> Result<(), SimError> {
        let mut probe = Session::new(self.model.clone(), self.view());
        for (index, &id) in trace.actions.iter().enumerate() {
            if id >= self.model.actions().len() || !probe.is_enabled(id) {
                return Err(SimError::TraceMismatch {
                    index,
                    action: if id < self.model.actions().len() {
                        self.model.action_label(id).to_string()
                    } else {
                        id.to_string()
                    },
                });
            }
            probe.fire(id);
        }
        self.replay(Vec::new());
        self.pin = Some(Pin { trace, cursor: 0 });
        Ok(())
    }

    /// Fires the next action of the pinned trace.
    pub fn advance(&mut self) -> Result<StepOutcome, SimError> {
        let pin = self.pin.as_ref().ok_or(SimError::NoPinnedTrace)?;
        let id = *pin.trace.actions.get(pin.cursor).ok_or(SimError::PinExhausted)?;
        self.step(id)
    }

    pub fn snapshot(&self) -> Snapshot {
        let automata = self.enabled();
        let enabled_count = automata
            .iter()
            .map(|a| a.transitions.iter().filter(|t| t.enabled).count())
            .sum();
        let config = self.configuration();
        Snapshot {
            schema_version: 1,
            model: self.model.name().to_string(),
            view: self.view(),
            configuration: self.model.configuration_text(&config),
            vector: match &self.position {
                Position::Ada3(p) => Some(
                    p.vector
                        .iter()
                        .enumerate()
                        .map(|(s, &v)| self.model.state_text(crate::model::ServerState { server: s, value: v }))
                        .collect(),
                ),
                Position::Sda3(_) => None,
            },
            automata,
            enabled_count,
            deadlock: enabled_count == 0 && config.pending_count() > 0,
            terminated: config.pending_count() == 0,
            history: self.history.iter().map(|&id| self.model.action_label(id).to_string()).collect(),
            pin: self.pin.as_ref().map(|p| PinJson {
                trace: p.trace.labels(&self.model).into_iter().map(str::to_string).collect(),
                cursor: p.cursor,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ListedTransition {
    pub index: usize,
    pub action: ActionId,
    pub action_label: String,
    /// `m/m'` (SDA³) or `p/p'` (ADA³).
    pub label: String,
    /// Leaves the automaton's current node.
    pub from_current: bool,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AutomatonView {
    pub name: String,
    pub current: usize,
    pub current_label: String,
    /// ADA³ only: the agent sits in `t`.
    pub terminated: bool,
    /// SDA³ only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_set: Option<Vec<String>>,
    pub transitions: Vec<ListedTransition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PinJson {
    pub trace: Vec<String>,
    pub cursor: usize,
}

/// Serializable session state (`schema_version` 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub schema_version: u32,
    pub model: String,
    pub view: AutomataKind,
    pub configuration: String,
    /// ADA³ only: global input vector as `server.value`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<String>>,
    pub automata: Vec<AutomatonView>,
    pub enabled_count: usize,
    pub deadlock: bool,
    pub terminated: bool,
    pub history: Vec<String>,
    pub pin: Option<PinJson>,
}

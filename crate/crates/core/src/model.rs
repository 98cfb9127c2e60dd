//! Core IMDS domain types and the single-step execution semantics.
//!
//! A [`SystemModel`] is built through [`ModelBuilder`], which resolves names to
//! indices and stores actions in a canonical order. All other representations
//! (LTS, Petri net, DA³ automata) are derived from it.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an action in [`SystemModel::actions`].
pub type ActionId = usize;

/// A validated identifier: a letter followed by letters, digits or `_`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ident(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid identifier `{0}`")]
pub struct InvalidIdent(pub String);

impl Ident {
    pub fn new(text: impl Into<String>) -> Result<Self, InvalidIdent> {
        let text = text.into();
        if Self::is_valid(&text) {
            Ok(Ident(text))
        } else {
            Err(InvalidIdent(text))
        }
    }

    pub fn is_valid(text: &str) -> bool {
        let mut chars = text.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Ident {
    type Error = InvalidIdent;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Ident::new(value)
    }
}

impl From<Ident> for String {
    fn from(value: Ident) -> Self {
        value.0
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// State `p = (s, v)`: server index and value index within that server.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ServerState {
    pub server: usize,
    pub value: usize,
}

/// Message `m = (a, s, r)`: agent, target server, and service index within that server.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Message {
    pub agent: usize,
    pub server: usize,
    pub service: usize,
}

/// One element of the action relation: `(m, p) λ (m', p')`, or `(m, p) λ (p')`
/// when `output` is `None` (the agent terminates).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub label: Option<Ident>,
    pub input: Message,
    pub state: ServerState,
    pub output: Option<Message>,
    pub next: ServerState,
}

impl Action {
    pub fn is_terminating(&self) -> bool {
        self.output.is_none()
    }

    /// Everything except the optional label.
    fn signature(&self) -> (Message, ServerState, Option<Message>, ServerState) {
        (self.input, self.state, self.output, self.next)
    }

    fn canonical_key(&self) -> (usize, usize, usize, usize, bool, usize, usize, usize, usize) {
        let (oa, os, or) = self
            .output
            .map(|m| (m.agent, m.server, m.service))
            .unwrap_or((usize::MAX, usize::MAX, usize::MAX));
        (
            self.state.server,
            self.state.value,
            self.input.service,
            self.input.agent,
            self.output.is_none(),
            os,
            or,
            oa,
            self.next.value,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerDecl {
    pub name: Ident,
    pub values: Vec<Ident>,
    pub services: Vec<Ident>,
}

/// A global configuration `T`: one value per server and at most one pending
/// message per agent (`None` = terminated).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub states: Vec<usize>,
    pub messages: Vec<Option<Message>>,
}

impl Configuration {
    pub fn pending_count(&self) -> usize {
        self.messages.iter().flatten().count()
    }

    pub fn state_of(&self, server: usize) -> ServerState {
        ServerState {
            server,
            value: self.states[server],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown server `{0}`")]
    UnknownServer(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("server `{server}` has no value `{value}`")]
    UnknownValue { server: String, value: String },
    #[error("server `{server}` has no service `{service}`")]
    UnknownService { server: String, service: String },
    #[error(transparent)]
    InvalidIdent(#[from] InvalidIdent),
    #[error("action {0} is not enabled in this configuration")]
    ActionNotEnabled(ActionId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    MessageServerMismatch,
    StateServerMismatch,
    AgentMismatch,
    DuplicateAction,
    DuplicateLabel,
    DuplicateName,
    MissingInitialState,
    MissingInitialMessage,
    ParameterTypeMismatch,
}

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub action: Option<ActionId>,
    pub server: Option<usize>,
    pub agent: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// The IMDS system: servers with their values and services, agents, the
/// action relation and the initial configuration.
///
/// Equality ignores the system name, so the server and agent views of one
/// system compare equal.
#[derive(Clone, Debug)]
pub struct SystemModel {
    name: Ident,
    servers: Vec<ServerDecl>,
    agents: Vec<Ident>,
    actions: Vec<Action>,
    initial_states: Vec<Option<usize>>,
    initial_messages: Vec<Option<Message>>,
    labels: Vec<String>,
    matching: HashMap<(Message, usize), Vec<ActionId>>,
}

impl PartialEq for SystemModel {
    fn eq(&self, other: &Self) -> bool {
        self.servers == other.servers
            && self.agents == other.agents
            && self.actions == other.actions
            && self.initial_states == other.initial_states
            && self.initial_messages == other.initial_messages
    }
}

impl Eq for SystemModel {}

impl SystemModel {
    pub fn name(&self) -> &Ident {
        &self.name
    }

    pub fn servers(&self) -> &[ServerDecl] {
        &self.servers
    }

    pub fn agents(&self) -> &[Ident] {
        &self.agents
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &Action {
        &self.actions[id]
    }

    pub fn initial_states(&self) -> &[Option<usize>] {
        &self.initial_states
    }

    pub fn initial_messages(&self) -> &[Option<Message>] {
        &self.initial_messages
    }

    pub fn server_index(&self, name: &str) -> Option<usize> {
        self.servers.iter().position(|s| s.name.as_str() == name)
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.as_str() == name)
    }

    pub fn server_name(&self, server: usize) -> &str {
        self.servers[server].name.as_str()
    }

    pub fn agent_name(&self, agent: usize) -> &str {
        self.agents[agent].as_str()
    }

    pub fn value_name(&self, state: ServerState) -> &str {
        self.servers[state.server].values[state.value].as_str()
    }

    pub fn service_name(&self, message: Message) -> &str {
        self.servers[message.server].services[message.service].as_str()
    }

    /// `server.value`
    pub fn state_text(&self, state: ServerState) -> String {
        format!("{}.{}", self.server_name(state.server), self.value_name(state))
    }

    /// `agent.server.service`
    pub fn message_text(&self, message: Message) -> String {
        format!(
            "{}.{}.{}",
            self.agent_name(message.agent),
            self.server_name(message.server),
            self.service_name(message)
        )
    }

    /// The action in the concrete input syntax, e.g.
    /// `{Aprod.buf.put, buf.no_elem} -> {Aprod.Sprod.ok_put, buf.elem}`.
    pub fn action_text(&self, id: ActionId) -> String {
        let action = &self.actions[id];
        let lhs = format!(
            "{{{}, {}}}",
            self.message_text(action.input),
            self.state_text(action.state)
        );
        let rhs = match action.output {
            Some(out) => format!("{{{}, {}}}", self.message_text(out), self.state_text(action.next)),
            None => format!("{{{}}}", self.state_text(action.next)),
        };
        format!("{lhs} -> {rhs}")
    }

    /// Stable, unique display label of an action: the user label if given,
    /// otherwise `agent.server.service@value` (with `#k` for nondeterministic
    /// siblings).
    pub fn action_label(&self, id: ActionId) -> &str {
        &self.labels[id]
    }

    /// Resolves a label produced by [`Self::action_label`] or a plain numeric id.
    pub fn resolve_action(&self, text: &str) -> Option<ActionId> {
        let text = text.trim();
        if let Some(id) = self.labels.iter().position(|l| l == text) {
            return Some(id);
        }
        text.parse::<usize>().ok().filter(|id| *id < self.actions.len())
    }

    /// Actions owned by `server` (keyed by the server of the input state).
    pub fn server_actions(&self, server: usize) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.actions.len()).filter(move |&id| self.actions[id].state.server == server)
    }

    /// Actions owned by `agent` (keyed by the agent of the input message).
    pub fn agent_actions(&self, agent: usize) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.actions.len()).filter(move |&id| self.actions[id].input.agent == agent)
    }

    /// All messages `agent` can ever carry: its initial message first, then
    /// in order of first appearance over the actions.
    pub fn agent_messages(&self, agent: usize) -> Vec<Message> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut push = |m: Message| {
            if m.agent == agent && seen.insert(m) {
                out.push(m);
            }
        };
        if let Some(m) = self.initial_messages.get(agent).copied().flatten() {
            push(m);
        }
        for action in &self.actions {
            push(action.input);
            if let Some(m) = action.output {
                push(m);
            }
        }
        out
    }

    /// Every distinct message of the model, agents in declaration order.
    pub fn all_messages(&self) -> Vec<Message> {
        (0..self.agents.len()).flat_map(|a| self.agent_messages(a)).collect()
    }

    /// Checks every model invariant; the model is valid iff the result is empty.
    pub fn validate(&self) -> Vec<Diagnostic> {
        validate_model(self)
    }

    pub fn is_valid(&self) -> bool {
        validate_model(self).is_empty()
    }

    pub fn initial_configuration(&self) -> Configuration {
        Configuration {
            states: self.initial_states.iter().map(|v| v.unwrap_or(0)).collect(),
            messages: self.initial_messages.clone(),
        }
    }

    /// Actions whose input message is pending and whose input state is current,
    /// in action order.
    pub fn enabled_actions(&self, config: &Configuration) -> Vec<ActionId> {
        let mut out = Vec::new();
        self.enabled_into(config, &mut out);
        out
    }

    pub(crate) fn enabled_into(&self, config: &Configuration, out: &mut Vec<ActionId>) {
        out.clear();
        for message in config.messages.iter().flatten() {
            let value = config.states[message.server];
            if let Some(ids) = self.matching.get(&(*message, value)) {
                out.extend_from_slice(ids);
            }
        }
        out.sort_unstable();
    }

    pub fn is_enabled(&self, config: &Configuration, id: ActionId) -> bool {
        let Some(action) = self.actions.get(id) else {
            return false;
        };
        action.input.server == action.state.server
            && config.messages.get(action.input.agent).copied().flatten() == Some(action.input)
            && config.states.get(action.state.server) == Some(&action.state.value)
    }

    pub fn apply_action(&self, config: &Configuration, id: ActionId) -> Result<Configuration, ModelError> {
        if !self.is_enabled(config, id) {
            return Err(ModelError::ActionNotEnabled(id));
        }
        Ok(self.fire(config, id))
    }

    /// Fires without the enabledness check.
    pub(crate) fn fire(&self, config: &Configuration, id: ActionId) -> Configuration {
        let action = &self.actions[id];
        let mut next = config.clone();
        next.states[action.next.server] = action.next.value;
        next.messages[action.input.agent] = action.output;
        next
    }

    /// Canonical text: `agents: a1:srv.svc, a2:-; servers: s1.v1, s2.v2`.
    pub fn configuration_text(&self, config: &Configuration) -> String {
        let agents: Vec<String> = config
            .messages
            .iter()
            .enumerate()
            .map(|(a, m)| match m {
                Some(m) => format!(
                    "{}:{}.{}",
                    self.agent_name(a),
                    self.server_name(m.server),
                    self.service_name(*m)
                ),
                None => format!("{}:-", self.agent_name(a)),
            })
            .collect();
        let servers: Vec<String> = config
            .states
            .iter()
            .enumerate()
            .map(|(s, &v)| self.state_text(ServerState { server: s, value: v }))
            .collect();
        format!("agents: {}; servers: {}", agents.join(", "), servers.join(", "))
    }
}

/// Returns every violated invariant of `model`; empty means valid.
pub fn validate_model(model: &SystemModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |kind, message: String| Diagnostic {
        kind,
        action: None,
        server: None,
        agent: None,
        message,
    };

    let mut names = BTreeSet::new();
    for (s, decl) in model.servers.iter().enumerate() {
        if !names.insert(decl.name.as_str()) {
            out.push(Diagnostic {
                server: Some(s),
                ..diag(DiagnosticKind::DuplicateName, format!("duplicate server name `{}`", decl.name))
            });
        }
        for (what, list) in [("value", &decl.values), ("service", &decl.services)] {
            let mut seen = BTreeSet::new();
            for item in list {
                if !seen.insert(item) {
                    out.push(Diagnostic {
                        server: Some(s),
                        ..diag(
                            DiagnosticKind::DuplicateName,
                            format!("duplicate {what} `{item}` in server `{}`", decl.name),
                        )
                    });
                }
            }
        }
    }
    let mut agent_names = BTreeSet::new();
    for (a, name) in model.agents.iter().enumerate() {
        if !agent_names.insert(name) {
            out.push(Diagnostic {
                agent: Some(a),
                ..diag(DiagnosticKind::DuplicateName, format!("duplicate agent name `{name}`"))
            });
        }
    }

    let mut signatures = HashMap::new();
    let mut labels = HashMap::new();
    for (id, action) in model.actions.iter().enumerate() {
        let with_action = |kind, message| Diagnostic {
            action: Some(id),
            ..diag(kind, message)
        };
        if action.input.server != action.state.server {
            out.push(with_action(
                DiagnosticKind::MessageServerMismatch,
                format!(
                    "message server ≠ state server in action {}",
                    model.action_text(id)
                ),
            ));
        }
        if action.state.server != action.next.server {
            out.push(with_action(
                DiagnosticKind::StateServerMismatch,
                format!(
                    "input state server ≠ output state server in action {}",
                    model.action_text(id)
                ),
            ));
        }
        if let Some(output) = action.output {
            if output.agent != action.input.agent {
                out.push(with_action(
                    DiagnosticKind::AgentMismatch,
                    format!(
                        "input message agent ≠ output message agent in action {}",
                        model.action_text(id)
                    ),
                ));
            }
        }
        if let Some(first) = signatures.insert(action.signature(), id) {
            out.push(with_action(
                DiagnosticKind::DuplicateAction,
                format!(
                    "action {} duplicates action {first}",
                    model.action_text(id)
                ),
            ));
        }
        if let Some(label) = &action.label {
            if labels.insert(label.as_str(), id).is_some() {
                out.push(with_action(
                    DiagnosticKind::DuplicateLabel,
                    format!("duplicate action label `{label}`"),
                ));
            }
        }
    }

    for (s, init) in model.initial_states.iter().enumerate() {
        if init.is_none() {
            out.push(Diagnostic {
                server: Some(s),
                ..diag(
                    DiagnosticKind::MissingInitialState,
                    format!("server without initial state: `{}`", model.servers[s].name),
                )
            });
        }
    }
    for (a, init) in model.initial_messages.iter().enumerate() {
        if init.is_none() {
            out.push(Diagnostic {
                agent: Some(a),
                ..diag(
                    DiagnosticKind::MissingInitialMessage,
                    format!("agent without initial message: `{}`", model.agents[a]),
                )
            });
        }
    }
    out
}

/// Name-based construction of a [`SystemModel`].
///
/// Names are resolved eagerly; invariant violations are left for
/// [`validate_model`] so that invalid models can still be inspected.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    name: Ident,
    servers: Vec<ServerDecl>,
    agents: Vec<Ident>,
    actions: Vec<Action>,
    initial_states: Vec<Option<usize>>,
    initial_messages: Vec<Option<Message>>,
}

impl ModelBuilder {
    pub fn new(name: &str) -> Result<Self, ModelError> {
        Ok(ModelBuilder {
            name: Ident::new(name)?,
            servers: Vec::new(),
            agents: Vec::new(),
            actions: Vec::new(),
            initial_states: Vec::new(),
            initial_messages: Vec::new(),
        })
    }

    pub fn server(&mut self, name: &str, values: &[&str], services: &[&str]) -> Result<usize, ModelError> {
        let decl = ServerDecl {
            name: Ident::new(name)?,
            values: values.iter().map(|v| Ident::new(*v)).collect::<Result<_, _>>()?,
            services: services.iter().map(|v| Ident::new(*v)).collect::<Result<_, _>>()?,
        };
        self.servers.push(decl);
        self.initial_states.push(None);
        Ok(self.servers.len() - 1)
    }

    pub fn agent(&mut self, name: &str) -> Result<usize, ModelError> {
        self.agents.push(Ident::new(name)?);
        self.initial_messages.push(None);
        Ok(self.agents.len() - 1)
    }

    fn find_server(&self, name: &str) -> Result<usize, ModelError> {
        self.servers
            .iter()
            .position(|s| s.name.as_str() == name)
            .ok_or_else(|| ModelError::UnknownServer(name.to_string()))
    }

    pub fn state(&self, server: &str, value: &str) -> Result<ServerState, ModelError> {
        let s = self.find_server(server)?;
        let v = self.servers[s]
            .values
            .iter()
            .position(|x| x.as_str() == value)
            .ok_or_else(|| ModelError::UnknownValue {
                server: server.to_string(),
                value: value.to_string(),
            })?;
        Ok(ServerState { server: s, value: v })
    }

    pub fn message(&self, agent: &str, server: &str, service: &str) -> Result<Message, ModelError> {
        let a = self
            .agents
            .iter()
            .position(|x| x.as_str() == agent)
            .ok_or_else(|| ModelError::UnknownAgent(agent.to_string()))?;
        let s = self.find_server(server)?;
        let r = self.servers[s]
            .services
            .iter()
            .position(|x| x.as_str() == service)
            .ok_or_else(|| ModelError::UnknownService {
                server: server.to_string(),
                service: service.to_string(),
            })?;
        Ok(Message {
            agent: a,
            server: s,
            service: r,
        })
    }

    /// Adds an action; returns its insertion index (see [`Self::build_with_order`]).
    pub fn push_action(&mut self, action: Action) -> usize {
        self.actions.push(action);
        self.actions.len() - 1
    }

    /// Convenience form: `input`/`output` are `agent.server.service`,
    /// `state`/`next` are `server.value`.
    pub fn action(
        &mut self,
        label: Option<&str>,
        input: &str,
        state: &str,
        output: Option<&str>,
        next: &str,
    ) -> Result<usize, ModelError> {
        let msg = |b: &Self, text: &str| -> Result<Message, ModelError> {
            let parts: Vec<&str> = text.split('.').collect();
            match parts.as_slice() {
                [a, s, r] => b.message(a, s, r),
                _ => Err(ModelError::InvalidIdent(InvalidIdent(text.to_string()))),
            }
        };
        let st = |b: &Self, text: &str| -> Result<ServerState, ModelError> {
            match text.split_once('.') {
                Some((s, v)) => b.state(s, v),
                None => Err(ModelError::InvalidIdent(InvalidIdent(text.to_string()))),
            }
        };
        let action = Action {
            label: label.map(Ident::new).transpose()?,
            input: msg(self, input)?,
            state: st(self, state)?,
            output: output.map(|o| msg(self, o)).transpose()?,
            next: st(self, next)?,
        };
        Ok(self.push_action(action))
    }

    pub fn init_state(&mut self, state: ServerState) {
        self.initial_states[state.server] = Some(state.value);
    }

    pub fn init_message(&mut self, message: Message) {
        self.initial_messages[message.agent] = Some(message);
    }

    pub fn build(self) -> SystemModel {
        self.build_with_order().0
    }

    /// Builds the model; the returned vector maps each canonical action id to
    /// the insertion index it had in the builder.
    pub fn build_with_order(self) -> (SystemModel, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.actions.len()).collect();
        order.sort_by_key(|&i| (self.actions[i].canonical_key(), i));
        let actions: Vec<Action> = order.iter().map(|&i| self.actions[i].clone()).collect();

        let mut matching: HashMap<(Message, usize), Vec<ActionId>> = HashMap::new();
        for (id, action) in actions.iter().enumerate() {
            matching
                .entry((action.input, action.state.value))
                .or_default()
                .push(id);
        }

        let mut model = SystemModel {
            name: self.name,
            servers: self.servers,
            agents: self.agents,
            actions,
            initial_states: self.initial_states,
            initial_messages: self.initial_messages,
            labels: Vec::new(),
            matching,
        };
        // only actions whose message and state share a server can ever match
        model
            .matching
            .retain(|(m, _), ids| {
                ids.retain(|&id| model.actions[id].state.server == m.server);
                !ids.is_empty()
            });
        model.labels = derive_labels(&model);
        (model, order)
    }
}

fn derive_labels(model: &SystemModel) -> Vec<String> {
    let mut siblings: HashMap<(Message, ServerState), Vec<ActionId>> = HashMap::new();
    for (id, action) in model.actions.iter().enumerate() {
        siblings.entry((action.input, action.state)).or_default().push(id);
    }
    model
        .actions
        .iter()
        .enumerate()
        .map(|(id, action)| {
            if let Some(label) = &action.label {
                return label.to_string();
            }
            let in_range = action.input.agent < model.agents.len()
                && action.input.server < model.servers.len()
                && action.state.server < model.servers.len();
            if !in_range {
                return format!("#{id}");
            }
            let base = format!(
                "{}@{}",
                model.message_text(action.input),
                model.value_name(action.state)
            );
            let group = &siblings[&(action.input, action.state)];
            if group.len() > 1 {
                let k = group.iter().position(|&x| x == id).unwrap_or(0) + 1;
                format!("{base}#{k}")
            } else {
                base
            }
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn crossed() -> SystemModel {
        let mut b = ModelBuilder::new("crossed").unwrap();
        b.server("sem1", &["up", "down"], &["p"]).unwrap();
        b.server("sem2", &["up", "down"], &["p"]).unwrap();
        b.agent("a1").unwrap();
        b.agent("a2").unwrap();
        b.action(Some("A"), "a1.sem1.p", "sem1.up", Some("a1.sem2.p"), "sem1.down").unwrap();
        b.action(Some("B"), "a1.sem2.p", "sem2.up", None, "sem2.down").unwrap();
        b.action(Some("C"), "a2.sem2.p", "sem2.up", Some("a2.sem1.p"), "sem2.down").unwrap();
        b.action(Some("D"), "a2.sem1.p", "sem1.up", None, "sem1.down").unwrap();
        for s in ["sem1", "sem2"] {
            let st = b.state(s, "up").unwrap();
            b.init_state(st);
        }
        let m = b.message("a1", "sem1", "p").unwrap();
        b.init_message(m);
        let m = b.message("a2", "sem2", "p").unwrap();
        b.init_message(m);
        b.build()
    }

    fn id(model: &SystemModel, label: &str) -> ActionId {
        model.resolve_action(label).unwrap()
    }

    #[test]
    fn ident_pattern() {
        assert!(Ident::new("no_elem").is_ok());
        assert!(Ident::new("A1").is_ok());
        assert!(Ident::new("").is_err());
        assert!(Ident::new("1a").is_err());
        assert!(Ident::new("_a").is_err());
        assert!(Ident::new("a-b").is_err());
    }

    #[test]
    fn crossed_is_valid_and_initial() {
        let m = crossed();
        assert!(m.validate().is_empty());
        let t0 = m.initial_configuration();
        assert_eq!(
            m.configuration_text(&t0),
            "agents: a1:sem1.p, a2:sem2.p; servers: sem1.up, sem2.up"
        );
    }

    #[test]
    fn canonical_action_order() {
        let m = crossed();
        let labels: Vec<&str> = (0..4).map(|i| m.action_label(i)).collect();
        assert_eq!(labels, ["A", "D", "B", "C"]);
    }

    #[test]
    fn apply_regular_and_terminating() {
        let m = crossed();
        let t0 = m.initial_configuration();
        let t1 = m.apply_action(&t0, id(&m, "A")).unwrap();
        assert_eq!(
            m.configuration_text(&t1),
            "agents: a1:sem2.p, a2:sem2.p; servers: sem1.down, sem2.up"
        );
        let t3 = m.apply_action(&t1, id(&m, "B")).unwrap();
        assert_eq!(t3.messages[0], None);
        assert_eq!(
            m.configuration_text(&t3),
            "agents: a1:-, a2:sem2.p; servers: sem1.down, sem2.down"
        );
        assert_eq!(
            m.apply_action(&t0, id(&m, "B")),
            Err(ModelError::ActionNotEnabled(id(&m, "B")))
        );
    }

    #[test]
    fn enabled_in_initial_configuration() {
        let m = crossed();
        let t0 = m.initial_configuration();
        let enabled: Vec<&str> = m
            .enabled_actions(&t0)
            .into_iter()
            .map(|i| m.action_label(i))
            .collect();
        assert_eq!(enabled, ["A", "C"]);
    }

    #[test]
    fn all_terminated_enables_nothing() {
        let m = crossed();
        let mut c = m.initial_configuration();
        c.messages = vec![None, None];
        assert!(m.enabled_actions(&c).is_empty());
    }

    #[test]
    fn message_server_mismatch_is_reported() {
        let mut b = ModelBuilder::new("bad").unwrap();
        b.server("buf", &["no_elem", "elem"], &["put"]).unwrap();
        b.server("Sprod", &["neutral"], &["ok_put"]).unwrap();
        b.agent("Aprod").unwrap();
        b.action(None, "Aprod.buf.put", "Sprod.neutral", Some("Aprod.Sprod.ok_put"), "Sprod.neutral")
            .unwrap();
        b.init_state(b.state("buf", "no_elem").unwrap());
        b.init_state(b.state("Sprod", "neutral").unwrap());
        b.init_message(b.message("Aprod", "buf", "put").unwrap());
        let diags = b.build().validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::MessageServerMismatch);
        assert!(diags[0].message.contains("message server ≠ state server"));
    }

    #[test]
    fn missing_initial_message_is_reported() {
        let mut b = ModelBuilder::new("m").unwrap();
        b.server("s", &["v"], &["r"]).unwrap();
        b.agent("a").unwrap();
        b.init_state(b.state("s", "v").unwrap());
        let diags = b.build().validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::MissingInitialMessage);
        assert!(diags[0].message.contains("agent without initial message"));
    }

    #[test]
    fn duplicates_rejected_nondeterminism_allowed() {
        let mut b = ModelBuilder::new("m").unwrap();
        b.server("s", &["v", "w"], &["r"]).unwrap();
        b.agent("a").unwrap();
        b.action(None, "a.s.r", "s.v", Some("a.s.r"), "s.w").unwrap();
        b.action(None, "a.s.r", "s.v", None, "s.w").unwrap();
        b.init_state(b.state("s", "v").unwrap());
        b.init_message(b.message("a", "s", "r").unwrap());
        let ok = b.clone().build();
        assert!(ok.validate().is_empty());
        assert_eq!(ok.action_label(0), "a.s.r@v#1");
        assert_eq!(ok.action_label(1), "a.s.r@v#2");
        assert_eq!(ok.enabled_actions(&ok.initial_configuration()), vec![0, 1]);

        b.action(None, "a.s.r", "s.v", None, "s.w").unwrap();
        let diags = b.build().validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::DuplicateAction);
    }

    #[test]
    fn agent_messages_follow_first_appearance() {
        let m = crossed();
        let texts: Vec<String> = m.agent_messages(1).into_iter().map(|x| m.message_text(x)).collect();
        assert_eq!(texts, ["a2.sem2.p", "a2.sem1.p"]);
    }
}

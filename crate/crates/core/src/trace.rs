//! Action sequences from the initial configuration: counterexamples,
//! witnesses and simulation histories.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ActionId, Configuration, SystemModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("line {line}: unknown action `{text}`")]
    UnknownAction { line: usize, text: String },
    #[error("trace action {index} is not enabled at its point")]
    Mismatch { index: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trace {
    pub actions: Vec<ActionId>,
}

/// One counterexample step: action label with source and target configuration text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub action: String,
    pub source: String,
    pub target: String,
}

impl Trace {
    pub fn new(actions: Vec<ActionId>) -> Self {
        Trace { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// All configurations visited, starting with the initial one.
    pub fn replay(&self, model: &SystemModel) -> Result<Vec<Configuration>, TraceError> {
        let mut current = model.initial_configuration();
        let mut out = vec![current.clone()];
        for (index, &id) in self.actions.iter().enumerate() {
            current = model
                .apply_action(&current, id)
                .map_err(|_| TraceError::Mismatch { index })?;
            out.push(current.clone());
        }
        Ok(out)
    }

    pub fn steps(&self, model: &SystemModel) -> Result<Vec<TraceStep>, TraceError> {
        let configs = self.replay(model)?;
        Ok(self
            .actions
            .iter()
            .zip(configs.windows(2))
            .map(|(&id, pair)| TraceStep {
                action: model.action_label(id).to_string(),
                source: model.configuration_text(&pair[0]),
                target: model.configuration_text(&pair[1]),
            })
            .collect())
    }

    pub fn labels<'m>(&self, model: &'m SystemModel) -> Vec<&'m str> {
        self.actions.iter().map(|&id| model.action_label(id)).collect()
    }

    /// Trace file syntax: one action label (or numeric id) per line. A `#` at
    /// the start of a line or after whitespace opens a comment, so sibling
    /// labels such as `a.s.r@v#2` are read whole.
    pub fn parse(text: &str, model: &SystemModel) -> Result<Trace, TraceError> {
        let mut actions = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            let id = model.resolve_action(line).ok_or_else(|| TraceError::UnknownAction {
                line: i + 1,
                text: line.to_string(),
            })?;
            actions.push(id);
        }
        Ok(Trace { actions })
    }

    pub fn to_text(&self, model: &SystemModel) -> String {
        let mut out = String::new();
        for label in self.labels(model) {
            out.push_str(label);
            out.push('\n');
        }
        out
    }
}

fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    #[test]
    fn parse_and_replay() {
        let (m, _) = parse(include_str!("../../../corpus/crossed.imds")).unwrap();
        let t = Trace::parse("# deadlock\nA\n\nC  # second\n", &m).unwrap();
        assert_eq!(t.labels(&m), ["A", "C"]);
        let steps = t.steps(&m).unwrap();
        assert_eq!(steps[1].target, "agents: a1:sem2.p, a2:sem1.p; servers: sem1.down, sem2.down");
        assert_eq!(Trace::parse(&t.to_text(&m), &m).unwrap(), t);
    }

    #[test]
    fn errors() {
        let (m, _) = parse(include_str!("../../../corpus/crossed.imds")).unwrap();
        assert_eq!(
            Trace::parse("A\nZ\n", &m),
            Err(TraceError::UnknownAction {
                line: 2,
                text: "Z".into()
            })
        );
        let t = Trace::parse("C\nB\n", &m).unwrap();
        assert_eq!(t.replay(&m), Err(TraceError::Mismatch { index: 1 }));
    }

    #[test]
    fn sibling_labels_keep_their_suffix() {
        let src = "system s;\nserver: x (agents a), services {r}, states {u, v},\nactions {\n{a.x.r, x.u} -> {a.x.r, x.v},\n{a.x.r, x.u} -> {x.u},\n};\nservers x; agents a;\ninit -> { x(a).u, a.x.r }.\n";
        let (m, _) = parse(src).unwrap();
        assert_eq!(m.action_label(1), "a.x.r@u#2");
        let t = Trace::parse("a.x.r@u#2 # ends\n", &m).unwrap();
        assert_eq!(t.actions, [1]);
        assert_eq!(Trace::parse(&t.to_text(&m), &m).unwrap(), t);
    }
}

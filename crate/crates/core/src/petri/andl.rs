//! ANDL text export, plus a reader for the same dialect.
//!
//! ```text
//! pn [crossed] {
//! places:
//!   discrete:
//!     S_sem1_up = 1;
//!     M_a1_sem1_p = 1;
//! transitions:
//!   discrete:
//!     T0_sem1_p : : [M_a1_sem1_p - 1] & [S_sem1_up - 1] & [M_a1_sem2_p + 1] & [S_sem1_down + 1];
//! }
//! ```
//!
//! Consumed places come first, in arc order, then produced places. Place
//! colors are recovered from the `S_`/`M_` name prefix.

use std::fmt::Write as _;

use thiserror::Error;

use super::{PetriNet, Place, PlaceKind, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AndlError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
}

pub fn to_andl(net: &PetriNet) -> String {
    let mut out = String::new();
    writeln!(out, "pn [{}] {{", net.name).unwrap();
    out.push_str("places:\n  discrete:\n");
    for (p, place) in net.places.iter().enumerate() {
        writeln!(out, "    {} = {};", place.name, net.initial_marking[p]).unwrap();
    }
    out.push_str("transitions:\n  discrete:\n");
    for t in &net.transitions {
        let terms: Vec<String> = t
            .inputs
            .iter()
            .map(|&p| format!("[{} - 1]", net.places[p].name))
            .chain(t.outputs.iter().map(|&p| format!("[{} + 1]", net.places[p].name)))
            .collect();
        writeln!(out, "    {} : : {};", t.name, terms.join(" & ")).unwrap();
    }
    out.push_str("}\n");
    out
}

#[derive(PartialEq)]
enum Section {
    Header,
    Places,
    Transitions,
    Done,
}

fn syntax(line: usize, message: impl Into<String>) -> AndlError {
    AndlError::Syntax {
        line,
        message: message.into(),
    }
}

/// Reads text produced by [`to_andl`]. Place origins and transition actions
/// are not recoverable and come back as `None`.
pub fn read_andl(text: &str) -> Result<PetriNet, AndlError> {
    let mut name = String::new();
    let mut places = Vec::new();
    let mut marking = Vec::new();
    let mut transitions = Vec::new();
    let mut section = Section::Header;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        match line {
            "places:" => section = Section::Places,
            "transitions:" => section = Section::Transitions,
            "discrete:" if section != Section::Header => {}
            "}" => section = Section::Done,
            _ => match section {
                Section::Header => {
                    name = line
                        .strip_prefix("pn [")
                        .and_then(|r| r.strip_suffix("] {"))
                        .ok_or_else(|| syntax(line_no, "expected `pn [name] {`"))?
                        .to_string();
                }
                Section::Places => {
                    let body = line.strip_suffix(';').ok_or_else(|| syntax(line_no, "missing `;`"))?;
                    let (place, tokens) = body
                        .split_once('=')
                        .ok_or_else(|| syntax(line_no, "expected `place = tokens;`"))?;
                    let place = place.trim().to_string();
                    let tokens: u32 = tokens
                        .trim()
                        .parse()
                        .map_err(|_| syntax(line_no, "token count is not a number"))?;
                    let kind = if place.starts_with("M_") {
                        PlaceKind::Message
                    } else {
                        PlaceKind::State
                    };
                    places.push(Place {
                        name: place,
                        kind,
                        origin: None,
                    });
                    marking.push(tokens);
                }
                Section::Transitions => {
                    let body = line.strip_suffix(';').ok_or_else(|| syntax(line_no, "missing `;`"))?;
                    let (tname, arcs) = body
                        .split_once(" : : ")
                        .ok_or_else(|| syntax(line_no, "expected `name : : arcs;`"))?;
                    let mut t = Transition {
                        name: tname.trim().to_string(),
                        action: None,
                        inputs: vec![],
                        outputs: vec![],
                    };
                    for term in arcs.split('&').map(str::trim).filter(|s| !s.is_empty()) {
                        let inner = term
                            .strip_prefix('[')
                            .and_then(|r| r.strip_suffix(']'))
                            .ok_or_else(|| syntax(line_no, format!("bad arc term `{term}`")))?;
                        let (place, delta) = if let Some(p) = inner.strip_suffix(" - 1") {
                            (p, false)
                        } else if let Some(p) = inner.strip_suffix(" + 1") {
                            (p, true)
                        } else {
                            return Err(syntax(line_no, format!("bad arc term `{term}`")));
                        };
                        let p = places
                            .iter()
                            .position(|x: &Place| x.name == place.trim())
                            .ok_or_else(|| AndlError::UnknownPlace(place.trim().to_string()))?;
                        if delta {
                            t.outputs.push(p);
                        } else {
                            t.inputs.push(p);
                        }
                    }
                    transitions.push(t);
                }
                Section::Done => return Err(syntax(line_no, "text after closing `}`")),
            },
        }
    }
    if section != Section::Done {
        return Err(syntax(text.lines().count(), "missing closing `}`"));
    }
    Ok(PetriNet {
        name,
        places,
        transitions,
        initial_marking: marking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::crossed;
    use crate::petri::to_petri;

    #[test]
    fn crossed_text() {
        let text = to_andl(&to_petri(&crossed()));
        assert!(text.starts_with("pn [crossed] {\nplaces:\n  discrete:\n    S_sem1_up = 1;\n"));
        assert!(text.contains("    T0_sem1_p : : [M_a1_sem1_p - 1] & [S_sem1_up - 1] & [M_a1_sem2_p + 1] & [S_sem1_down + 1];\n"));
        assert!(text.contains("    T1_sem1_p : : [M_a2_sem1_p - 1] & [S_sem1_up - 1] & [S_sem1_down + 1];\n"));
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn round_trip() {
        let net = to_petri(&crossed());
        let text = to_andl(&net);
        let back = read_andl(&text).unwrap();
        assert_eq!(to_andl(&back), text);
        assert_eq!(back.initial_marking, net.initial_marking);
        for (a, b) in back.transitions.iter().zip(&net.transitions) {
            assert_eq!((&a.inputs, &a.outputs), (&b.inputs, &b.outputs));
        }
        for (a, b) in back.places.iter().zip(&net.places) {
            assert_eq!((&a.name, a.kind), (&b.name, b.kind));
        }
    }

    #[test]
    fn reader_errors() {
        assert!(matches!(read_andl("pn [x] {\nplaces:\n"), Err(AndlError::Syntax { .. })));
        assert_eq!(
            read_andl("pn [x] {\nplaces:\ndiscrete:\np = 1;\ntransitions:\ndiscrete:\nt : : [q - 1];\n}\n"),
            Err(AndlError::UnknownPlace("q".into()))
        );
    }
}

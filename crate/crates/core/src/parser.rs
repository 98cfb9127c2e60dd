//! The `.imds` input language, in server view and agent view.
//!
//! ```text
//! file        = "system" IDENT ";" { decl }
//! decl        = server_tpl | agent_tpl | var_decl | init
//! server_tpl  = "server" ":" IDENT [ "(" params ")" ] [","] { "services" list | "states" list | "actions" actions } [";"]
//! agent_tpl   = "agent" ":" IDENT [ "(" params ")" ] [","] "actions" actions [";"]
//! params      = group { ";" group }        group = ("agents" | "servers") param { "," param }
//! param       = IDENT [ ":" IDENT ]
//! list        = "{" [ IDENT { [","] IDENT } ] "}" [","]
//! actions     = "{" { [ IDENT ":" ] action [","] } "}" [","]
//! action      = "{" msg "," state "}" "->" "{" [ msg "," ] state "}"
//! msg         = IDENT "." IDENT "." IDENT       state = IDENT "." IDENT
//! var_decl    = ("servers" | "agents") param { "," param } ";"
//! init        = "init" "->" "{" { item [","] } "}" ["."]
//! item        = IDENT [ "(" IDENT { "," IDENT } ")" ] "." IDENT [ "." IDENT ]
//! ```
//!
//! Separators between list items are optional. `#` starts a comment.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Action, Diagnostic, Ident, Message, ModelBuilder, ServerState, SystemModel};
use crate::views::{agent_processes, server_processes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewKind {
    Server,
    Agent,
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViewKind::Server => "server",
            ViewKind::Agent => "agent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    SyntaxError { span: SourceSpan, message: String },
    #[error("{span}: unknown identifier `{name}`")]
    UnknownIdentifier { span: SourceSpan, name: String },
    #[error("{span}: `{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        span: SourceSpan,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{span}: duplicate name `{name}`")]
    DuplicateName { span: SourceSpan, name: String },
    #[error("{span}: {diagnostic}")]
    ConstraintViolation { span: SourceSpan, diagnostic: Diagnostic },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::SyntaxError { span, .. }
            | ParseError::UnknownIdentifier { span, .. }
            | ParseError::ArityMismatch { span, .. }
            | ParseError::DuplicateName { span, .. }
            | ParseError::ConstraintViolation { span, .. } => *span,
        }
    }
}

type Result<T> = std::result::Result<T, ParseError>;

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = SourceSpan {
            line,
            column: col,
            length: 1,
        };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let len = i - start;
            if !Ident::is_valid(&word) {
                return Err(ParseError::SyntaxError {
                    span: SourceSpan { length: len, ..span },
                    message: format!("invalid identifier `{word}`"),
                });
            }
            out.push(Token {
                tok: Tok::Ident(word),
                span: SourceSpan { length: len, ..span },
            });
            col += len;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Token {
                tok: Tok::Punct("->"),
                span: SourceSpan { length: 2, ..span },
            });
            i += 2;
            col += 2;
            continue;
        }
        let punct = match c {
            '{' => "{",
            '}' => "}",
            '(' => "(",
            ')' => ")",
            ',' => ",",
            ';' => ";",
            ':' => ":",
            '.' => ".",
            _ => {
                return Err(ParseError::SyntaxError {
                    span,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push(Token {
            tok: Tok::Punct(punct),
            span,
        });
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan {
            line,
            column: col,
            length: 0,
        },
    });
    Ok(out)
}

// ---------------------------------------------------------------- syntax tree

#[derive(Debug, Clone)]
struct Name {
    text: String,
    span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ParamKind {
    Agent,
    Server,
}

#[derive(Debug, Clone)]
struct Param {
    kind: ParamKind,
    name: Name,
    ty: Option<Name>,
}

#[derive(Debug, Clone)]
struct MsgRef {
    agent: Name,
    server: Name,
    service: Name,
}

#[derive(Debug, Clone)]
struct StateRef {
    server: Name,
    value: Name,
}

#[derive(Debug, Clone)]
struct ActionTemplate {
    label: Option<Name>,
    input: MsgRef,
    state: StateRef,
    output: Option<MsgRef>,
    next: StateRef,
    span: SourceSpan,
}

/// A server or agent template as written in the source.
#[derive(Debug, Clone)]
struct TemplateDecl {
    name: Name,
    /// Formal parameters in binding order.
    params: Vec<Param>,
    services: Vec<Name>,
    states: Vec<Name>,
    actions: Vec<ActionTemplate>,
}

#[derive(Debug, Clone)]
struct InitItem {
    head: Name,
    args: Option<Vec<Name>>,
    path: Vec<Name>,
    span: SourceSpan,
}

#[derive(Debug, Default)]
struct SourceFile {
    system: Option<Name>,
    server_templates: Vec<TemplateDecl>,
    agent_templates: Vec<TemplateDecl>,
    server_vars: Vec<Param>,
    agent_vars: Vec<Param>,
    init: Vec<InitItem>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(q) if q == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let token = self.peek();
        let found = match &token.tok {
            Tok::Ident(w) => format!("`{w}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(ParseError::SyntaxError {
            span: token.span,
            message: format!("{}, found {found}", message.into()),
        })
    }

    fn expect_punct(&mut self, p: &str) -> Result<SourceSpan> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            self.error(format!("expected `{p}`"))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<SourceSpan> {
        if self.is_word(w) {
            Ok(self.bump().span)
        } else {
            self.error(format!("expected `{w}`"))
        }
    }

    fn ident(&mut self) -> Result<Name> {
        match &self.peek().tok {
            Tok::Ident(w) => {
                let name = Name {
                    text: w.clone(),
                    span: self.peek().span,
                };
                self.bump();
                Ok(name)
            }
            _ => self.error("expected identifier"),
        }
    }

    fn file(&mut self) -> Result<SourceFile> {
        let mut file = SourceFile::default();
        self.expect_word("system")?;
        file.system = Some(self.ident()?);
        self.eat_punct(";");
        let mut seen_init = false;
        loop {
            match &self.peek().tok {
                Tok::Eof => break,
                Tok::Ident(w) if w == "server" && self.peek_is_colon() => {
                    let t = self.template(ParamKind::Server)?;
                    file.server_templates.push(t);
                }
                Tok::Ident(w) if w == "agent" && self.peek_is_colon() => {
                    let t = self.template(ParamKind::Agent)?;
                    file.agent_templates.push(t);
                }
                Tok::Ident(w) if w == "servers" => {
                    self.bump();
                    let vars = self.param_list(ParamKind::Server)?;
                    file.server_vars.extend(vars);
                    self.eat_punct(";");
                }
                Tok::Ident(w) if w == "agents" => {
                    self.bump();
                    let vars = self.param_list(ParamKind::Agent)?;
                    file.agent_vars.extend(vars);
                    self.eat_punct(";");
                }
                Tok::Ident(w) if w == "init" => {
                    if seen_init {
                        return self.error("duplicate `init` block");
                    }
                    seen_init = true;
                    file.init = self.init_block()?;
                }
                _ => return self.error("expected `server:`, `agent:`, `servers`, `agents` or `init`"),
            }
        }
        if !seen_init {
            return self.error("missing `init` block");
        }
        Ok(file)
    }

    fn peek_is_colon(&self) -> bool {
        matches!(self.peek_at(1).tok, Tok::Punct(":"))
    }

    fn template(&mut self, kind: ParamKind) -> Result<TemplateDecl> {
        self.bump();
        self.expect_punct(":")?;
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_punct("(") {
            loop {
                let group = if self.is_word("agents") {
                    ParamKind::Agent
                } else if self.is_word("servers") {
                    ParamKind::Server
                } else {
                    return self.error("expected `agents` or `servers`");
                };
                self.bump();
                params.extend(self.param_list(group)?);
                if self.eat_punct(";") {
                    continue;
                }
                self.expect_punct(")")?;
                break;
            }
        }
        self.eat_punct(",");
        let mut decl = TemplateDecl {
            name,
            params,
            services: Vec::new(),
            states: Vec::new(),
            actions: Vec::new(),
        };
        loop {
            if self.is_word("services") && kind == ParamKind::Server {
                self.bump();
                decl.services.extend(self.name_list()?);
            } else if self.is_word("states") && kind == ParamKind::Server {
                self.bump();
                decl.states.extend(self.name_list()?);
            } else if self.is_word("actions") {
                self.bump();
                decl.actions.extend(self.actions()?);
            } else {
                break;
            }
            self.eat_punct(",");
        }
        self.eat_punct(";");
        Ok(decl)
    }

    fn param_list(&mut self, kind: ParamKind) -> Result<Vec<Param>> {
        let mut out = Vec::new();
        loop {
            let name = self.ident()?;
            let ty = if self.eat_punct(":") {
                Some(self.ident()?)
            } else {
                None
            };
            out.push(Param { kind, name, ty });
            if !self.eat_punct(",") {
                break;
            }
            if !matches!(self.peek().tok, Tok::Ident(_)) {
                break;
            }
        }
        Ok(out)
    }

    fn name_list(&mut self) -> Result<Vec<Name>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.is_punct("}") {
            out.push(self.ident()?);
            self.eat_punct(",");
        }
        self.bump();
        Ok(out)
    }

    fn actions(&mut self) -> Result<Vec<ActionTemplate>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.is_punct("}") {
            out.push(self.action()?);
            self.eat_punct(",");
        }
        self.bump();
        Ok(out)
    }

    fn action(&mut self) -> Result<ActionTemplate> {
        let start = self.peek().span;
        let label = if matches!(self.peek().tok, Tok::Ident(_)) {
            let l = self.ident()?;
            self.expect_punct(":")?;
            Some(l)
        } else {
            None
        };
        let lhs = self.expect_punct("{")?;
        let input = self.msg_ref()?;
        self.expect_punct(",")?;
        let state = self.state_ref()?;
        self.expect_punct("}")?;
        self.expect_punct("->")?;
        self.expect_punct("{")?;
        let first = self.path()?;
        let (output, next) = match first.len() {
            3 => {
                self.expect_punct(",")?;
                let next = self.state_ref()?;
                (Some(msg_from_path(first)), next)
            }
            2 => (None, state_from_path(first)),
            _ => {
                return Err(ParseError::SyntaxError {
                    span: first[0].span,
                    message: "expected `agent.server.service` or `server.value`".into(),
                })
            }
        };
        let end = self.expect_punct("}")?;
        let span_start = label.as_ref().map(|l| l.span).unwrap_or(lhs);
        let span = SourceSpan {
            line: span_start.line,
            column: span_start.column,
            length: if end.line == span_start.line {
                end.column + 1 - span_start.column
            } else {
                start.length
            },
        };
        Ok(ActionTemplate {
            label,
            input,
            state,
            output,
            next,
            span,
        })
    }

    fn path(&mut self) -> Result<Vec<Name>> {
        let mut out = vec![self.ident()?];
        while self.eat_punct(".") {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn msg_ref(&mut self) -> Result<MsgRef> {
        let p = self.path()?;
        if p.len() != 3 {
            return Err(ParseError::SyntaxError {
                span: p[0].span,
                message: "expected message `agent.server.service`".into(),
            });
        }
        Ok(msg_from_path(p))
    }

    fn state_ref(&mut self) -> Result<StateRef> {
        let p = self.path()?;
        if p.len() != 2 {
            return Err(ParseError::SyntaxError {
                span: p[0].span,
                message: "expected state `server.value`".into(),
            });
        }
        Ok(state_from_path(p))
    }

    fn init_block(&mut self) -> Result<Vec<InitItem>> {
        self.expect_word("init")?;
        self.expect_punct("->")?;
        self.expect_punct("{")?;
        let mut items = Vec::new();
        while !self.is_punct("}") {
            let head = self.ident()?;
            let args = if self.eat_punct("(") {
                let mut args = Vec::new();
                if !self.is_punct(")") {
                    loop {
                        args.push(self.ident()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct(")")?;
                Some(args)
            } else {
                None
            };
            let mut path = Vec::new();
            while self.eat_punct(".") {
                path.push(self.ident()?);
            }
            if path.is_empty() {
                return self.error("expected `.` after init item");
            }
            let span = head.span;
            items.push(InitItem {
                head,
                args,
                path,
                span,
            });
            self.eat_punct(",");
        }
        self.bump();
        self.eat_punct(".");
        Ok(items)
    }
}

fn msg_from_path(mut p: Vec<Name>) -> MsgRef {
    let service = p.pop().unwrap();
    let server = p.pop().unwrap();
    let agent = p.pop().unwrap();
    MsgRef {
        agent,
        server,
        service,
    }
}

fn state_from_path(mut p: Vec<Name>) -> StateRef {
    let value = p.pop().unwrap();
    let server = p.pop().unwrap();
    StateRef { server, value }
}

// ---------------------------------------------------------------- elaboration

fn unknown(name: &Name) -> ParseError {
    ParseError::UnknownIdentifier {
        span: name.span,
        name: name.text.clone(),
    }
}

fn duplicate(name: &Name) -> ParseError {
    ParseError::DuplicateName {
        span: name.span,
        name: name.text.clone(),
    }
}

fn check_unique<'a>(names: impl IntoIterator<Item = &'a Name>) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.text.as_str()) {
            return Err(duplicate(n));
        }
    }
    Ok(())
}

fn constraint(span: SourceSpan, message: String) -> ParseError {
    ParseError::ConstraintViolation {
        span,
        diagnostic: Diagnostic {
            kind: crate::model::DiagnosticKind::ParameterTypeMismatch,
            action: None,
            server: None,
            agent: None,
            message,
        },
    }
}

/// Formal-to-actual binding of one template instance.
struct Binding<'a> {
    /// Name the template uses for itself.
    this_name: &'a str,
    /// Actual variable the template is instantiated as.
    this_actual: &'a str,
    this_kind: ParamKind,
    formals: HashMap<&'a str, (ParamKind, &'a str)>,
}

impl Binding<'_> {
    fn agent(&self, name: &Name) -> Result<String> {
        if self.this_kind == ParamKind::Agent && name.text == self.this_name {
            return Ok(self.this_actual.to_string());
        }
        match self.formals.get(name.text.as_str()) {
            Some((ParamKind::Agent, actual)) => Ok(actual.to_string()),
            _ => Err(unknown(name)),
        }
    }

    fn server(&self, name: &Name) -> Result<String> {
        if self.this_kind == ParamKind::Server && name.text == self.this_name {
            return Ok(self.this_actual.to_string());
        }
        match self.formals.get(name.text.as_str()) {
            Some((ParamKind::Server, actual)) => Ok(actual.to_string()),
            _ => Err(unknown(name)),
        }
    }
}

struct Elaborator<'a> {
    file: &'a SourceFile,
    view: ViewKind,
    builder: ModelBuilder,
    /// span of every action pushed into the builder, by insertion index
    action_spans: Vec<SourceSpan>,
}

impl<'a> Elaborator<'a> {
    fn server_template(&self, ty: &str) -> Option<&'a TemplateDecl> {
        self.file.server_templates.iter().find(|t| t.name.text == ty)
    }

    fn agent_template(&self, ty: &str) -> Option<&'a TemplateDecl> {
        self.file.agent_templates.iter().find(|t| t.name.text == ty)
    }

    fn var_type(var: &Param) -> &Name {
        var.ty.as_ref().unwrap_or(&var.name)
    }

    fn run(mut self) -> Result<(SystemModel, Vec<SourceSpan>, HashMap<String, SourceSpan>)> {
        let file = self.file;
        check_unique(file.server_templates.iter().map(|t| &t.name))?;
        check_unique(file.agent_templates.iter().map(|t| &t.name))?;
        check_unique(file.server_vars.iter().map(|v| &v.name))?;
        check_unique(file.agent_vars.iter().map(|v| &v.name))?;
        for t in file.server_templates.iter().chain(&file.agent_templates) {
            check_unique(t.params.iter().map(|p| &p.name))?;
            check_unique(&t.services)?;
            check_unique(&t.states)?;
            check_unique(t.actions.iter().filter_map(|a| a.label.as_ref()))?;
            self.check_template_names(t)?;
        }

        let mut var_spans = HashMap::new();
        for var in &file.server_vars {
            let ty = Self::var_type(var);
            let tpl = self.server_template(&ty.text).ok_or_else(|| unknown(ty))?;
            let values: Vec<&str> = tpl.states.iter().map(|n| n.text.as_str()).collect();
            let services: Vec<&str> = tpl.services.iter().map(|n| n.text.as_str()).collect();
            self.builder
                .server(&var.name.text, &values, &services)
                .map_err(|e| syntax(var.name.span, e))?;
            var_spans.insert(format!("server:{}", var.name.text), var.name.span);
        }
        for var in &file.agent_vars {
            if let Some(ty) = &var.ty {
                if ty.text != var.name.text && self.agent_template(&ty.text).is_none() {
                    return Err(unknown(ty));
                }
            }
            self.builder
                .agent(&var.name.text)
                .map_err(|e| syntax(var.name.span, e))?;
            var_spans.insert(format!("agent:{}", var.name.text), var.name.span);
        }

        // bindings per instance, filled from the init block
        let mut server_bindings: HashMap<&str, Vec<(&Param, &str)>> = HashMap::new();
        let mut agent_bindings: HashMap<&str, Vec<(&Param, &str)>> = HashMap::new();
        let mut initialized = HashSet::new();
        for item in &file.init {
            if !initialized.insert(item.head.text.as_str()) {
                return Err(duplicate(&item.head));
            }
            if let Some(var) = file.server_vars.iter().find(|v| v.name.text == item.head.text) {
                let tpl = self
                    .server_template(&Self::var_type(var).text)
                    .expect("checked above");
                let binding = self.bind(tpl, item)?;
                if item.path.len() != 1 {
                    return Err(ParseError::SyntaxError {
                        span: item.span,
                        message: "server initializer must be `Server(args).value`".into(),
                    });
                }
                let state = self
                    .builder
                    .state(&var.name.text, &item.path[0].text)
                    .map_err(|_| unknown(&item.path[0]))?;
                self.builder.init_state(state);
                server_bindings.insert(var.name.text.as_str(), binding);
            } else if let Some(var) = file.agent_vars.iter().find(|v| v.name.text == item.head.text) {
                let tpl = self.agent_template(&Self::var_type(var).text);
                let binding = match tpl {
                    Some(tpl) => self.bind(tpl, item)?,
                    None => {
                        if let Some(args) = &item.args {
                            if !args.is_empty() {
                                return Err(ParseError::ArityMismatch {
                                    span: item.span,
                                    name: item.head.text.clone(),
                                    expected: 0,
                                    found: args.len(),
                                });
                            }
                        }
                        Vec::new()
                    }
                };
                if item.path.len() != 2 {
                    return Err(ParseError::SyntaxError {
                        span: item.span,
                        message: "agent initializer must be `Agent(args).server.service`".into(),
                    });
                }
                let server_name = binding
                    .iter()
                    .find(|(p, _)| p.kind == ParamKind::Server && p.name.text == item.path[0].text)
                    .map(|(_, actual)| *actual)
                    .unwrap_or(item.path[0].text.as_str());
                if !file.server_vars.iter().any(|v| v.name.text == server_name) {
                    return Err(unknown(&item.path[0]));
                }
                let message = self
                    .builder
                    .message(&var.name.text, server_name, &item.path[1].text)
                    .map_err(|_| unknown(&item.path[1]))?;
                self.builder.init_message(message);
                agent_bindings.insert(var.name.text.as_str(), binding);
            } else {
                return Err(unknown(&item.head));
            }
        }

        match self.view {
            ViewKind::Server => {
                for var in &file.server_vars {
                    let tpl = self.server_template(&Self::var_type(var).text).unwrap();
                    if tpl.actions.is_empty() {
                        continue;
                    }
                    let Some(bound) = server_bindings.get(var.name.text.as_str()) else {
                        continue;
                    };
                    let binding = make_binding(tpl, &var.name.text, ParamKind::Server, bound);
                    self.instantiate(tpl, &binding)?;
                }
            }
            ViewKind::Agent => {
                for var in &file.agent_vars {
                    let Some(tpl) = self.agent_template(&Self::var_type(var).text) else {
                        continue;
                    };
                    let Some(bound) = agent_bindings.get(var.name.text.as_str()) else {
                        continue;
                    };
                    let binding = make_binding(tpl, &var.name.text, ParamKind::Agent, bound);
                    self.instantiate(tpl, &binding)?;
                }
            }
        }

        let (model, order) = self.builder.build_with_order();
        let spans = order.iter().map(|&i| self.action_spans[i]).collect();
        Ok((model, spans, var_spans))
    }

    /// Identifiers in agent/server positions of actions must be formals or the template itself.
    fn check_template_names(&self, tpl: &TemplateDecl) -> Result<()> {
        let kind = if self.file.agent_templates.iter().any(|t| std::ptr::eq(t, tpl)) {
            ParamKind::Agent
        } else {
            ParamKind::Server
        };
        let is = |name: &Name, want: ParamKind| {
            (kind == want && name.text == tpl.name.text)
                || tpl
                    .params
                    .iter()
                    .any(|p| p.kind == want && p.name.text == name.text)
        };
        for a in &tpl.actions {
            let msgs = std::iter::once(&a.input).chain(a.output.as_ref());
            for m in msgs {
                if !is(&m.agent, ParamKind::Agent) {
                    return Err(unknown(&m.agent));
                }
                if !is(&m.server, ParamKind::Server) {
                    return Err(unknown(&m.server));
                }
            }
            for s in [&a.state, &a.next] {
                if !is(&s.server, ParamKind::Server) {
                    return Err(unknown(&s.server));
                }
            }
        }
        Ok(())
    }

    fn bind<'t>(&self, tpl: &'t TemplateDecl, item: &'a InitItem) -> Result<Vec<(&'t Param, &'a str)>> {
        let args: &[Name] = item.args.as_deref().unwrap_or(&[]);
        if args.len() != tpl.params.len() {
            return Err(ParseError::ArityMismatch {
                span: item.span,
                name: item.head.text.clone(),
                expected: tpl.params.len(),
                found: args.len(),
            });
        }
        let mut out = Vec::new();
        for (param, arg) in tpl.params.iter().zip(args) {
            match param.kind {
                ParamKind::Agent => {
                    let var = self
                        .file
                        .agent_vars
                        .iter()
                        .find(|v| v.name.text == arg.text)
                        .ok_or_else(|| unknown(arg))?;
                    if let Some(ty) = &param.ty {
                        if Self::var_type(var).text != ty.text {
                            return Err(constraint(
                                arg.span,
                                format!("`{}` is not of agent type `{}`", arg.text, ty.text),
                            ));
                        }
                    }
                }
                ParamKind::Server => {
                    let var = self
                        .file
                        .server_vars
                        .iter()
                        .find(|v| v.name.text == arg.text)
                        .ok_or_else(|| unknown(arg))?;
                    if let Some(ty) = &param.ty {
                        if Self::var_type(var).text != ty.text {
                            return Err(constraint(
                                arg.span,
                                format!("`{}` is not of server type `{}`", arg.text, ty.text),
                            ));
                        }
                    }
                }
            }
            out.push((param, arg.text.as_str()));
        }
        Ok(out)
    }

    fn instantiate(&mut self, tpl: &TemplateDecl, binding: &Binding<'_>) -> Result<()> {
        for a in &tpl.actions {
            let msg = |b: &ModelBuilder, m: &MsgRef| -> Result<Message> {
                let agent = binding.agent(&m.agent)?;
                let server = binding.server(&m.server)?;
                b.message(&agent, &server, &m.service.text)
                    .map_err(|_| unknown(&m.service))
            };
            let st = |b: &ModelBuilder, s: &StateRef| -> Result<ServerState> {
                let server = binding.server(&s.server)?;
                b.state(&server, &s.value.text).map_err(|_| unknown(&s.value))
            };
            let action = Action {
                label: match &a.label {
                    Some(l) => Some(Ident::new(l.text.clone()).map_err(|e| syntax(l.span, e))?),
                    None => None,
                },
                input: msg(&self.builder, &a.input)?,
                state: st(&self.builder, &a.state)?,
                output: a.output.as_ref().map(|m| msg(&self.builder, m)).transpose()?,
                next: st(&self.builder, &a.next)?,
            };
            self.builder.push_action(action);
            self.action_spans.push(a.span);
        }
        Ok(())
    }
}

fn make_binding<'a>(
    tpl: &'a TemplateDecl,
    actual: &'a str,
    kind: ParamKind,
    bound: &[(&'a Param, &'a str)],
) -> Binding<'a> {
    Binding {
        this_name: &tpl.name.text,
        this_actual: actual,
        this_kind: kind,
        formals: bound
            .iter()
            .map(|(p, a)| (p.name.text.as_str(), (p.kind, *a)))
            .collect(),
    }
}

fn syntax(span: SourceSpan, e: impl fmt::Display) -> ParseError {
    ParseError::SyntaxError {
        span,
        message: e.to_string(),
    }
}

/// Parses a specification in either view into a validated [`SystemModel`].
pub fn parse(text: &str) -> Result<(SystemModel, ViewKind)> {
    let tokens = lex(text)?;
    let file = Parser { tokens, pos: 0 }.file()?;

    let server_actions = file.server_templates.iter().find(|t| !t.actions.is_empty());
    let agent_actions = file.agent_templates.iter().find(|t| !t.actions.is_empty());
    let view = match (server_actions, agent_actions) {
        (Some(_), Some(a)) => {
            return Err(ParseError::SyntaxError {
                span: a.name.span,
                message: "actions declared in both server and agent templates".into(),
            })
        }
        (None, Some(_)) => ViewKind::Agent,
        _ => ViewKind::Server,
    };
    let system = file.system.as_ref().expect("parsed header");
    let builder = ModelBuilder::new(&system.text).map_err(|e| syntax(system.span, e))?;
    let (model, action_spans, var_spans) = Elaborator {
        file: &file,
        view,
        builder,
        action_spans: Vec::new(),
    }
    .run()?;

    if let Some(diagnostic) = model.validate().into_iter().next() {
        let span = if let Some(id) = diagnostic.action {
            action_spans[id]
        } else if let Some(s) = diagnostic.server {
            var_spans
                .get(&format!("server:{}", model.server_name(s)))
                .copied()
                .unwrap_or_default()
        } else if let Some(a) = diagnostic.agent {
            var_spans
                .get(&format!("agent:{}", model.agent_name(a)))
                .copied()
                .unwrap_or_default()
        } else {
            SourceSpan::default()
        };
        return Err(ParseError::ConstraintViolation { span, diagnostic });
    }
    Ok((model, view))
}

// ---------------------------------------------------------------- rendering

fn action_line(model: &SystemModel, id: usize) -> String {
    match &model.action(id).label {
        Some(label) => format!("{label}: {}", model.action_text(id)),
        None => model.action_text(id),
    }
}

/// Renders `model` as source text in the requested view. The output parses
/// back to an equal model.
pub fn render(model: &SystemModel, view: ViewKind) -> String {
    let mut out = String::new();
    writeln!(out, "system {};", model.name()).unwrap();
    match view {
        ViewKind::Server => render_server_view(model, &mut out),
        ViewKind::Agent => render_agent_view(model, &mut out),
    }
    out
}

fn join<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    items.into_iter().collect::<Vec<_>>().join(",")
}

/// Agents and other servers referenced by a set of actions, in declaration order.
fn referenced(model: &SystemModel, actions: &[usize], extra_server: Option<usize>) -> (Vec<usize>, Vec<usize>) {
    let mut agents = vec![false; model.agents().len()];
    let mut servers = vec![false; model.servers().len()];
    for &id in actions {
        let a = model.action(id);
        agents[a.input.agent] = true;
        servers[a.input.server] = true;
        servers[a.state.server] = true;
        servers[a.next.server] = true;
        if let Some(o) = a.output {
            agents[o.agent] = true;
            servers[o.server] = true;
        }
    }
    if let Some(s) = extra_server {
        servers[s] = true;
    }
    let pick = |v: Vec<bool>| v.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
    (pick(agents), pick(servers))
}

fn render_server_view(model: &SystemModel, out: &mut String) {
    let partition = server_processes(model);
    let mut params: Vec<Vec<String>> = Vec::new();
    for block in &partition.blocks {
        let s = block.owner;
        let decl = &model.servers()[s];
        let (agents, servers) = referenced(model, &block.actions, None);
        let servers: Vec<usize> = servers.into_iter().filter(|&x| x != s).collect();
        let agent_names: Vec<&str> = agents.iter().map(|&a| model.agent_name(a)).collect();
        let server_names: Vec<&str> = servers.iter().map(|&x| model.server_name(x)).collect();
        let mut groups = Vec::new();
        if !agent_names.is_empty() {
            groups.push(format!("agents {}", join(agent_names.iter().copied())));
        }
        if !server_names.is_empty() {
            groups.push(format!("servers {}", join(server_names.iter().copied())));
        }
        let header = if groups.is_empty() {
            String::new()
        } else {
            format!(" ({})", groups.join("; "))
        };
        writeln!(out, "\nserver: {}{header},", decl.name).unwrap();
        writeln!(out, "services {{{}}},", join(decl.services.iter().map(|x| x.as_str()))).unwrap();
        writeln!(out, "states {{{}}},", join(decl.values.iter().map(|x| x.as_str()))).unwrap();
        writeln!(out, "actions {{").unwrap();
        for &id in &block.actions {
            writeln!(out, "  {},", action_line(model, id)).unwrap();
        }
        writeln!(out, "}};").unwrap();
        params.push(agent_names.iter().chain(&server_names).map(|x| x.to_string()).collect());
    }
    writeln!(out).unwrap();
    render_vars(model, out);
    writeln!(out, "\ninit -> {{").unwrap();
    for (s, args) in params.iter().enumerate() {
        let args = if args.is_empty() {
            String::new()
        } else {
            format!("({})", args.join(","))
        };
        if let Some(v) = model.initial_states()[s] {
            let value = model.value_name(ServerState { server: s, value: v });
            writeln!(out, "  {}{args}.{value},", model.server_name(s)).unwrap();
        }
    }
    for m in model.initial_messages().iter().flatten() {
        writeln!(out, "  {},", model.message_text(*m)).unwrap();
    }
    writeln!(out, "}}.").unwrap();
}

fn render_agent_view(model: &SystemModel, out: &mut String) {
    for decl in model.servers() {
        writeln!(out, "\nserver: {},", decl.name).unwrap();
        writeln!(out, "services {{{}}},", join(decl.services.iter().map(|x| x.as_str()))).unwrap();
        writeln!(out, "states {{{}}};", join(decl.values.iter().map(|x| x.as_str()))).unwrap();
    }
    let partition = agent_processes(model);
    let mut params: Vec<Vec<&str>> = Vec::new();
    for block in &partition.blocks {
        let a = block.owner;
        let init_server = model.initial_messages()[a].map(|m| m.server);
        let (_, servers) = referenced(model, &block.actions, init_server);
        let names: Vec<&str> = servers.iter().map(|&s| model.server_name(s)).collect();
        let header = if names.is_empty() {
            String::new()
        } else {
            format!(
                " (servers {})",
                join(names.iter().map(|n| format!("{n}:{n}")).collect::<Vec<_>>().iter().map(|s| s.as_str()))
            )
        };
        writeln!(out, "\nagent: {}{header},", model.agent_name(a)).unwrap();
        writeln!(out, "actions {{").unwrap();
        for &id in &block.actions {
            writeln!(out, "  {},", action_line(model, id)).unwrap();
        }
        writeln!(out, "}};").unwrap();
        params.push(names);
    }
    writeln!(out).unwrap();
    render_vars(model, out);
    writeln!(out, "\ninit -> {{").unwrap();
    for (a, m) in model.initial_messages().iter().enumerate() {
        if let Some(m) = m {
            let args = if params[a].is_empty() {
                String::new()
            } else {
                format!("({})", params[a].join(","))
            };
            writeln!(
                out,
                "  {}{args}.{}.{},",
                model.agent_name(a),
                model.server_name(m.server),
                model.service_name(*m)
            )
            .unwrap();
        }
    }
    for (s, v) in model.initial_states().iter().enumerate() {
        if let Some(v) = v {
            writeln!(out, "  {},", model.state_text(ServerState { server: s, value: *v })).unwrap();
        }
    }
    writeln!(out, "}}.").unwrap();
}

fn render_vars(model: &SystemModel, out: &mut String) {
    if !model.servers().is_empty() {
        writeln!(out, "servers {};", join(model.servers().iter().map(|s| s.name.as_str()))).unwrap();
    }
    if !model.agents().is_empty() {
        writeln!(out, "agents {};", join(model.agents().iter().map(|a| a.as_str()))).unwrap();
    }
}

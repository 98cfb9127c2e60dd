//! Verification workbench for distributed systems in the IMDS formalism.
//!
//! A [`SystemModel`] (parsed from `.imds` text in server or agent view) is the
//! single source of truth. From it the crate builds:
//!
//! * the labeled transition system of reachable configurations ([`lts`]) and
//!   deadlock / termination verdicts over it ([`analysis`]);
//! * the equivalent place/transition net with structural analyses ([`petri`]);
//! * server-side and agent-side DA³ automata with their global graphs
//!   ([`automata`]), and a step-by-step simulator over them ([`simulator`]).
//!
//! [`iso`] checks that the LTS, the marking graph and both global graphs are
//! isomorphic under the structural mappings between the formalisms.

pub mod analysis;
pub mod automata;
pub mod graph;
pub mod iso;
pub mod lts;
pub mod model;
pub mod parser;
pub mod petri;
pub mod simulator;
pub mod trace;
pub mod views;

pub use analysis::{analyze, Report, Verdict, VerdictKind};
pub use automata::{to_ada3, to_sda3, Ada3, AutomataKind, Sda3};
pub use iso::IsoReport;
pub use graph::{Edge, LimitExceeded, Limits, StateGraph};
pub use lts::{build_lts, Lts};
pub use model::{
    validate_model, Action, ActionId, Configuration, Diagnostic, Ident, Message, ModelBuilder, ServerState,
    SystemModel,
};
pub use petri::{to_petri, PetriNet};
pub use parser::{parse, render, ParseError, SourceSpan, ViewKind};
pub use simulator::{Session, SimError, Snapshot, StepOutcome};
pub use trace::{Trace, TraceError, TraceStep};
pub use views::{agent_processes, server_processes, ProcessPartition};

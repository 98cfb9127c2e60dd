use std::fs;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use imds_core::automata::{
    ada3_dot, automata_json, check_ada3_iso, check_sda3_iso, dot_index, sda3_dot, AutomataKind, DotOptions,
};
use imds_core::petri::{
    check_iso_with_lts, marking_graph, minimal_siphons, minimal_traps, p_invariants, siphon_emptiable,
    structural_report, to_andl, SiphonSearch,
};
use imds_core::{
    analyze, build_lts, lts, parse, petri, render, to_ada3, to_petri, to_sda3, LimitExceeded, Limits, Session,
    SystemModel, Trace, ViewKind,
};

#[derive(Parser)]
#[command(name = "imds", version, about = "Deadlock and termination analysis for IMDS models")]
struct Cli {
    /// Maximum number of states explored by any state-space construction.
    #[arg(long, global = true, env = "IMDS_MAX_NODES", default_value_t = Limits::default().max_nodes)]
    max_nodes: usize,
    /// Maximum number of transitions explored.
    #[arg(long, global = true, env = "IMDS_MAX_EDGES", default_value_t = Limits::default().max_edges)]
    max_edges: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum View {
    Server,
    Agent,
}

#[derive(Clone, Copy, ValueEnum)]
enum DaView {
    Sda3,
    Ada3,
}

impl From<DaView> for AutomataKind {
    fn from(v: DaView) -> Self {
        match v {
            DaView::Sda3 => AutomataKind::Sda3,
            DaView::Ada3 => AutomataKind::Ada3,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model.
    Check { file: PathBuf },
    /// Re-render a model in the server or agent view.
    Convert {
        file: PathBuf,
        #[arg(long, value_enum)]
        to: View,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the LTS and print its size.
    Lts {
        file: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Line-oriented node/edge listing.
        #[arg(long)]
        text: Option<PathBuf>,
    },
    /// Deadlock and termination verdicts; exits 1 if any deadlock holds.
    Verify {
        file: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Petri net export and structural analysis.
    Petri {
        file: PathBuf,
        #[arg(long)]
        andl: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        siphons: bool,
        #[arg(long)]
        traps: bool,
        #[arg(long)]
        invariants: bool,
        #[arg(long)]
        report: bool,
    },
    /// Export the DA³ automata of one view.
    Automata {
        file: PathBuf,
        #[arg(long, value_enum)]
        view: DaView,
        /// Directory for one DOT file per automaton plus index.txt.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Draw the terminal node even for agents that never terminate.
        #[arg(long)]
        show_terminal: bool,
    },
    /// Check LTS, marking graph and both global graphs for isomorphism.
    Xcheck { file: PathBuf },
    /// Step through the automata in the terminal.
    Simulate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "sda3")]
        view: DaView,
        /// Replay this trace file (one action label per line).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Take N random enabled steps instead of reading commands.
        #[arg(long, value_name = "N")]
        random_walk: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve the simulation API (and optionally a UI bundle).
    Serve {
        dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long)]
        ui: Option<PathBuf>,
    },
}

/// An error carrying its own exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn limit(e: LimitExceeded) -> anyhow::Error {
    Exit(3, format!("{e}")).into()
}

fn load(path: &Path) -> Result<(SystemModel, ViewKind)> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn place_names(net: &petri::PetriNet, set: &[usize]) -> String {
    let names: Vec<&str> = set.iter().map(|&p| net.places[p].name.as_str()).collect();
    format!("{{{}}}", names.join(", "))
}

fn run(cli: Cli) -> Result<u8> {
    let limits = Limits {
        max_nodes: cli.max_nodes,
        max_edges: cli.max_edges,
    };
    match cli.command {
        Command::Check { file } => {
            let text = fs::read_to_string(&file).with_context(|| format!("cannot read {}", file.display()))?;
            match parse(&text) {
                Ok((model, view)) => {
                    let view = match view {
                        ViewKind::Server => "server",
                        ViewKind::Agent => "agent",
                    };
                    println!(
                        "{}: ok ({view} view; {} servers, {} agents, {} actions)",
                        file.display(),
                        model.servers().len(),
                        model.agents().len(),
                        model.actions().len()
                    );
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("{}:{e}", file.display());
                    Ok(1)
                }
            }
        }
        Command::Convert { file, to, output } => {
            let (model, _) = load(&file)?;
            let view = match to {
                View::Server => ViewKind::Server,
                View::Agent => ViewKind::Agent,
            };
            write_out(output.as_deref(), &render(&model, view))?;
            Ok(0)
        }
        Command::Lts { file, dot, text } => {
            let (model, _) = load(&file)?;
            let graph = build_lts(&model, limits).map_err(limit)?;
            println!("nodes={} edges={}", graph.node_count(), graph.edge_count());
            if let Some(p) = dot {
                write_out(Some(&p), &lts::to_dot(&model, &graph))?;
            }
            if let Some(p) = text {
                write_out(Some(&p), &lts::to_text(&model, &graph))?;
            }
            Ok(0)
        }
        Command::Verify { file, json } => {
            let (model, _) = load(&file)?;
            let graph = build_lts(&model, limits).map_err(limit)?;
            let report = analyze(&model, &graph);
            print!("{}", report.to_table(&model));
            if let Some(p) = json {
                let text = serde_json::to_string_pretty(&report.to_json(&model))? + "\n";
                write_out(Some(&p), &text)?;
            }
            Ok(u8::from(report.any_deadlock()))
        }
        Command::Petri {
            file,
            andl,
            dot,
            siphons,
            traps,
            invariants,
            report,
        } => {
            let (model, _) = load(&file)?;
            let net = to_petri(&model);
            println!("places={} transitions={}", net.places.len(), net.transitions.len());
            if let Some(p) = andl {
                write_out(Some(&p), &to_andl(&net))?;
            }
            if let Some(p) = dot {
                write_out(Some(&p), &petri::to_dot(&net))?;
            }
            let needs_graph = siphons || traps || report;
            let graph = if needs_graph {
                Some(marking_graph(&net, limits).map_err(limit)?)
            } else {
                None
            };
            if siphons {
                let found = minimal_siphons(&net, SiphonSearch::default()).map_err(|e| Exit(3, e.to_string()))?;
                println!("minimal siphons: {}", found.len());
                for s in &found {
                    let empty = match siphon_emptiable(s, graph.as_ref().expect("built above")) {
                        Some(m) => format!("emptiable at marking {m}"),
                        None => "never emptied".to_string(),
                    };
                    println!("  {}  {empty}", place_names(&net, s));
                }
            }
            if traps {
                let found = minimal_traps(&net, SiphonSearch::default()).map_err(|e| Exit(3, e.to_string()))?;
                println!("minimal traps: {}", found.len());
                for s in &found {
                    println!("  {}", place_names(&net, s));
                }
            }
            if invariants {
                let inv = p_invariants(&net);
                println!("P-invariants: {}", inv.len());
                for x in &inv {
                    let terms: Vec<String> = x
                        .iter()
                        .enumerate()
                        .filter(|(_, &w)| w != 0)
                        .map(|(p, &w)| {
                            if w == 1 {
                                net.places[p].name.clone()
                            } else {
                                format!("{w}*{}", net.places[p].name)
                            }
                        })
                        .collect();
                    let total: i64 = x.iter().zip(&net.initial_marking).map(|(w, &m)| w * i64::from(m)).sum();
                    println!("  {} = {total}", terms.join(" + "));
                }
            }
            if report {
                let graph = graph.as_ref().expect("built above");
                let r = structural_report(&net, graph);
                println!("markings={} firings={}", graph.node_count(), graph.edge_count());
                println!("components: {}", r.components.len());
                let dead: Vec<&str> = r.dead_transitions.iter().map(|&t| net.transitions[t].name.as_str()).collect();
                println!("dead transitions: {}", if dead.is_empty() { "none".into() } else { dead.join(", ") });
                println!("safe: {}", r.safe);
            }
            Ok(0)
        }
        Command::Automata {
            file,
            view,
            dot,
            json,
            show_terminal,
        } => {
            let (model, _) = load(&file)?;
            let kind = AutomataKind::from(view);
            let dots = match kind {
                AutomataKind::Sda3 => sda3_dot(&model, &to_sda3(&model)),
                AutomataKind::Ada3 => ada3_dot(
                    &model,
                    &to_ada3(&model),
                    DotOptions {
                        show_unreachable_terminal: show_terminal,
                    },
                ),
            };
            println!("{} automata: {}", kind.as_str(), dots.len());
            if let Some(dir) = dot {
                fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
                let mut files = Vec::new();
                for (name, text) in &dots {
                    let file = format!("{}_{name}.dot", kind.as_str());
                    fs::write(dir.join(&file), text)?;
                    files.push((name.clone(), file));
                }
                fs::write(dir.join("index.txt"), dot_index(&model, kind, &files))?;
            }
            if let Some(p) = json {
                write_out(Some(&p), &(serde_json::to_string_pretty(&automata_json(&model, kind))? + "\n"))?;
            }
            Ok(0)
        }
        Command::Xcheck { file } => {
            let (model, _) = load(&file)?;
            let graph = build_lts(&model, limits).map_err(limit)?;
            let net = to_petri(&model);
            let pn = marking_graph(&net, limits).map_err(limit)?;
            let sda = to_sda3(&model).global_graph(limits).map_err(limit)?;
            let ada = to_ada3(&model).global_graph(&model, limits).map_err(limit)?;
            let checks = [
                ("PN", check_iso_with_lts(&net, &pn, &graph)),
                ("SDA3", check_sda3_iso(&sda, &graph)),
                ("ADA3", check_ada3_iso(&ada, &graph)),
            ];
            let failed: Vec<String> = checks
                .iter()
                .filter(|(_, r)| !r.isomorphic)
                .map(|(n, r)| format!("{n}: {}", r.mismatch.as_deref().unwrap_or("?")))
                .collect();
            println!(
                "LTS={}/{}, PN={}/{}, SDA3={}/{}, ADA3={}/{}, ISO: {}",
                graph.node_count(),
                graph.edge_count(),
                pn.node_count(),
                pn.edge_count(),
                sda.node_count(),
                sda.edge_count(),
                ada.node_count(),
                ada.edge_count(),
                if failed.is_empty() { "OK" } else { "FAILED" }
            );
            for f in &failed {
                println!("  {f}");
            }
            Ok(u8::from(!failed.is_empty()))
        }
        Command::Simulate {
            file,
            view,
            trace,
            random_walk,
            seed,
        } => {
            let (model, _) = load(&file)?;
            let model = Arc::new(model);
            let mut session = Session::new(model.clone(), view.into());
            if let Some(path) = trace {
                let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
                let trace = Trace::parse(&text, &model).map_err(|e| anyhow!("{}: {e}", path.display()))?;
                session.load_trace(trace).map_err(|e| anyhow!("{e}"))?;
                print_state(&session);
                while session.pin().is_some_and(|p| p.cursor < p.trace.len()) {
                    let out = session.advance().map_err(|e| anyhow!("{e}"))?;
                    println!("--{}--> (focus {})", out.label, out.focus);
                    print_state(&session);
                }
                return Ok(0);
            }
            if let Some(n) = random_walk {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                print_state(&session);
                for _ in 0..n {
                    let enabled = session.enabled_actions();
                    let Some(&id) = enabled.choose(&mut rng) else {
                        break;
                    };
                    let out = session.step(id).map_err(|e| anyhow!("{e}"))?;
                    println!("--{}--> {}", out.label, model.configuration_text(&session.configuration()));
                }
                print_state(&session);
                return Ok(0);
            }
            interactive(&mut session)?;
            Ok(0)
        }
        Command::Serve { dir, bind, ui } => {
            let models = imds_service::load_models(&dir, limits)?;
            if models.is_empty() {
                bail!("no .imds models in {}", dir.display());
            }
            eprintln!("serving {} model(s) on http://{bind}", models.len());
            let state = imds_service::AppState::new(models);
            tokio::runtime::Runtime::new()?.block_on(imds_service::serve(state, bind, ui))?;
            Ok(0)
        }
    }
}

fn print_state(session: &Session) {
    let snap = session.snapshot();
    println!("{}", snap.configuration);
    for a in &snap.automata {
        let mut line = format!("  {} @ {}", a.name, a.current_label);
        if a.terminated {
            line.push_str(" (terminated)");
        }
        if let Some(inputs) = &a.input_set {
            line.push_str(&format!("  inputs {{{}}}", inputs.join(", ")));
        }
        println!("{line}");
        for t in a.transitions.iter().filter(|t| t.from_current) {
            let mark = if t.enabled { "*" } else { " " };
            println!("    {mark} {} {}", t.action_label, t.label);
        }
    }
    if snap.deadlock {
        println!("  DEADLOCK: pending messages but no enabled transition");
    } else if snap.terminated {
        println!("  all agents terminated");
    }
}

const HELP: &str = "commands: <label or id> step, u undo, r reset, a advance, h history, q quit";

fn interactive(session: &mut Session) -> Result<()> {
    let stdin = io::stdin();
    print_state(session);
    println!("{HELP}");
    loop {
        print!("> ");
        io::stdout().flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            return Ok(());
        }
        let result = match line.trim() {
            "" => continue,
            "q" => return Ok(()),
            "u" => session.undo().map(|_| ()),
            "r" => {
                session.reset();
                Ok(())
            }
            "a" => session.advance().map(|out| println!("focus {}", out.focus)),
            "h" => {
                let labels: Vec<&str> = session.history().iter().map(|&id| session.model().action_label(id)).collect();
                println!("{}", labels.join(" "));
                continue;
            }
            "?" => {
                println!("{HELP}");
                continue;
            }
            label => session.step_label(label).map(|out| println!("focus {}", out.focus)),
        };
        match result {
            Ok(()) => print_state(session),
            Err(e) => println!("error: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Exit>() {
                Some(Exit(code, _)) => ExitCode::from(*code),
                None => ExitCode::from(1),
            }
        }
    }
}

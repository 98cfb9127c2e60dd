//! Shared test support: the corpus, a random model generator and a
//! brute-force oracle that works on names only.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use imds_core::{parse, Lts, ModelBuilder, SystemModel};

pub const CORPUS: [(&str, &str, &str); 4] = [
    (
        "buffer",
        include_str!("../../../../corpus/buffer.imds"),
        include_str!("../../../../corpus/agent/buffer.imds"),
    ),
    (
        "crossed",
        include_str!("../../../../corpus/crossed.imds"),
        include_str!("../../../../corpus/agent/crossed.imds"),
    ),
    (
        "mutex",
        include_str!("../../../../corpus/mutex.imds"),
        include_str!("../../../../corpus/agent/mutex.imds"),
    ),
    (
        "philosophers",
        include_str!("../../../../corpus/philosophers.imds"),
        include_str!("../../../../corpus/agent/philosophers.imds"),
    ),
];

pub fn corpus(name: &str) -> SystemModel {
    let (_, text, _) = CORPUS.iter().find(|(n, _, _)| *n == name).expect("corpus model");
    parse(text).expect("corpus parses").0
}

pub fn corpus_models() -> Vec<(&'static str, SystemModel)> {
    CORPUS.iter().map(|(n, t, _)| (*n, parse(t).unwrap().0)).collect()
}

/// A random valid model with at most 3 servers, 3 agents and 10 actions.
pub fn random_model(seed: u64) -> SystemModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(m) = try_random_model(&mut rng) {
            return m;
        }
    }
}

fn try_random_model(rng: &mut ChaCha8Rng) -> Option<SystemModel> {
    let servers = rng.random_range(1..=3usize);
    let agents = rng.random_range(1..=3usize);
    let values: Vec<usize> = (0..servers).map(|_| rng.random_range(1..=3)).collect();
    let services: Vec<usize> = (0..servers).map(|_| rng.random_range(1..=2)).collect();
    let mut b = ModelBuilder::new(&format!("rnd{}", rng.random::<u16>())).ok()?;
    for s in 0..servers {
        let vs: Vec<String> = (0..values[s]).map(|v| format!("v{v}")).collect();
        let rs: Vec<String> = (0..services[s]).map(|r| format!("r{r}")).collect();
        let vs: Vec<&str> = vs.iter().map(String::as_str).collect();
        let rs: Vec<&str> = rs.iter().map(String::as_str).collect();
        b.server(&format!("s{s}"), &vs, &rs).ok()?;
    }
    for a in 0..agents {
        b.agent(&format!("a{a}")).ok()?;
    }
    let msg = |rng: &mut ChaCha8Rng, a: usize| {
        let s = rng.random_range(0..servers);
        format!("a{a}.s{s}.r{}", rng.random_range(0..services[s]))
    };
    // each agent starts with one message; later inputs mostly reuse messages
    // the agent can already carry, so actions chain into longer behaviours
    let init: Vec<String> = (0..agents).map(|a| msg(rng, a)).collect();
    let mut known: Vec<Vec<String>> = init.iter().map(|m| vec![m.clone()]).collect();
    let mut seen = BTreeSet::new();
    let count = rng.random_range(2..=10);
    for _ in 0..count {
        let a = rng.random_range(0..agents);
        let input = if rng.random_bool(0.75) {
            known[a][rng.random_range(0..known[a].len())].clone()
        } else {
            msg(rng, a)
        };
        let s: usize = input.split('.').nth(1).unwrap()[1..].parse().unwrap();
        let state = format!("s{s}.v{}", rng.random_range(0..values[s]));
        let next = format!("s{s}.v{}", rng.random_range(0..values[s]));
        let output = if rng.random_bool(0.2) { None } else { Some(msg(rng, a)) };
        if !seen.insert((input.clone(), state.clone(), output.clone(), next.clone())) {
            continue;
        }
        b.action(None, &input, &state, output.as_deref(), &next).ok()?;
        if let Some(o) = output {
            if !known[a].contains(&o) {
                known[a].push(o);
            }
        }
    }
    for s in 0..servers {
        let st = b.state(&format!("s{s}"), &format!("v{}", rng.random_range(0..values[s]))).ok()?;
        b.init_state(st);
    }
    for text in &init {
        let parts: Vec<&str> = text.split('.').collect();
        b.init_message(b.message(parts[0], parts[1], parts[2]).ok()?);
    }
    let model = b.build();
    model.is_valid().then_some(model)
}

/// A rule read back from the concrete action text.
#[derive(Debug, Clone)]
struct Rule {
    label: String,
    agent: String,
    server: String,
    service: String,
    value: String,
    output: Option<(String, String)>,
    next: String,
}

fn split_action(text: &str) -> (Vec<String>, Vec<String>) {
    // "{a.s.r, s.v} -> {a.s.r, s.v}" or "{a.s.r, s.v} -> {s.v}"
    let (lhs, rhs) = text.split_once(" -> ").expect("arrow");
    let parts = |side: &str| {
        side.trim_matches(|c| c == '{' || c == '}')
            .split(", ")
            .map(str::to_string)
            .collect::<Vec<_>>()
    };
    (parts(lhs), parts(rhs))
}

/// Configuration by names: server -> value, agent -> Some((server, service)).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NamedConfig {
    pub servers: Vec<(String, String)>,
    pub agents: Vec<(String, Option<(String, String)>)>,
}

impl NamedConfig {
    pub fn text(&self) -> String {
        let agents: Vec<String> = self
            .agents
            .iter()
            .map(|(a, m)| match m {
                Some((s, r)) => format!("{a}:{s}.{r}"),
                None => format!("{a}:-"),
            })
            .collect();
        let servers: Vec<String> = self.servers.iter().map(|(s, v)| format!("{s}.{v}")).collect();
        format!("agents: {}; servers: {}", agents.join(", "), servers.join(", "))
    }

    pub fn pending(&self) -> usize {
        self.agents.iter().filter(|(_, m)| m.is_some()).count()
    }
}

/// Exhaustive enumeration of the configuration product, the transition
/// relation over it, and fixpoint reachability from the initial configuration.
pub struct Oracle {
    pub reachable: Vec<NamedConfig>,
    pub edges: BTreeSet<(String, String, String)>,
    /// Successors by reachable index: (rule label, agent of the rule, server of the rule, target index).
    pub succ: Vec<Vec<(String, String, String, usize)>>,
    pub initial: usize,
    pub product_size: usize,
}

impl Oracle {
    pub fn new(model: &SystemModel) -> Oracle {
        let rules: Vec<Rule> = (0..model.actions().len())
            .map(|k| {
                let (lhs, rhs) = split_action(&model.action_text(k));
                let msg: Vec<&str> = lhs[0].split('.').collect();
                let st: Vec<&str> = lhs[1].split('.').collect();
                let (output, next) = if rhs.len() == 2 {
                    let m: Vec<&str> = rhs[0].split('.').collect();
                    (Some((m[1].to_string(), m[2].to_string())), rhs[1].split('.').nth(1).unwrap().to_string())
                } else {
                    (None, rhs[0].split('.').nth(1).unwrap().to_string())
                };
                Rule {
                    label: model.action_label(k).to_string(),
                    agent: msg[0].to_string(),
                    server: msg[1].to_string(),
                    service: msg[2].to_string(),
                    value: st[1].to_string(),
                    output,
                    next,
                }
            })
            .collect();

        let server_names: Vec<String> = model.servers().iter().map(|s| s.name.to_string()).collect();
        let server_values: Vec<Vec<String>> =
            model.servers().iter().map(|s| s.values.iter().map(|v| v.to_string()).collect()).collect();
        let agent_names: Vec<String> = model.agents().iter().map(|a| a.to_string()).collect();

        // every combination of server values and agent messages
        let mut product: Vec<NamedConfig> = vec![NamedConfig {
            servers: vec![],
            agents: vec![],
        }];
        for (s, vals) in server_names.iter().zip(&server_values) {
            product = product
                .into_iter()
                .flat_map(|c| {
                    vals.iter().map(move |v| {
                        let mut c = c.clone();
                        c.servers.push((s.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        for (ai, a) in agent_names.iter().enumerate() {
            // the messages this agent can ever carry, plus "done" if it can terminate
            let mut domain: BTreeSet<Option<(String, String)>> = BTreeSet::new();
            if let Some(m) = model.initial_messages()[ai] {
                domain.insert(Some((server_names[m.server].clone(), model.servers()[m.server].services[m.service].to_string())));
            }
            for r in rules.iter().filter(|r| r.agent == *a) {
                domain.insert(Some((r.server.clone(), r.service.clone())));
                domain.insert(r.output.clone());
            }
            let options: Vec<Option<(String, String)>> = domain.into_iter().collect();
            product = product
                .into_iter()
                .flat_map(|c| {
                    options.iter().map(move |m| {
                        let mut c = c.clone();
                        c.agents.push((a.clone(), m.clone()));
                        c
                    })
                })
                .collect();
        }
        let product_size = product.len();

        let fire = |c: &NamedConfig, r: &Rule| -> Option<NamedConfig> {
            let agent = c.agents.iter().position(|(a, _)| *a == r.agent)?;
            if c.agents[agent].1 != Some((r.server.clone(), r.service.clone())) {
                return None;
            }
            let server = c.servers.iter().position(|(s, _)| *s == r.server)?;
            if c.servers[server].1 != r.value {
                return None;
            }
            let mut next = c.clone();
            next.servers[server].1 = r.next.clone();
            next.agents[agent].1 = r.output.clone();
            Some(next)
        };

        let initial_config = NamedConfig {
            servers: server_names
                .iter()
                .enumerate()
                .map(|(s, name)| (name.clone(), server_values[s][model.initial_states()[s].unwrap_or(0)].clone()))
                .collect(),
            agents: agent_names
                .iter()
                .enumerate()
                .map(|(a, name)| {
                    let m = model.initial_messages()[a].map(|m| {
                        (
                            server_names[m.server].clone(),
                            model.servers()[m.server].services[m.service].to_string(),
                        )
                    });
                    (name.clone(), m)
                })
                .collect(),
        };

        // relation over the whole product, then a fixpoint from the initial configuration
        let index: HashMap<&NamedConfig, usize> = product.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let relation: Vec<Vec<(usize, usize)>> = product
            .iter()
            .map(|c| {
                rules
                    .iter()
                    .enumerate()
                    .filter_map(|(k, r)| fire(c, r).map(|t| (k, index[&t])))
                    .collect()
            })
            .collect();
        let mut reached = vec![false; product.len()];
        reached[index[&initial_config]] = true;
        loop {
            let mut changed = false;
            for i in 0..product.len() {
                if reached[i] {
                    for &(_, t) in &relation[i] {
                        if !reached[t] {
                            reached[t] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let reachable: Vec<NamedConfig> =
            (0..product.len()).filter(|&i| reached[i]).map(|i| product[i].clone()).collect();
        let local: HashMap<&NamedConfig, usize> = reachable.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut edges = BTreeSet::new();
        let mut succ = vec![Vec::new(); reachable.len()];
        for (i, c) in reachable.iter().enumerate() {
            for &(k, t) in &relation[index[c]] {
                let target = &product[t];
                edges.insert((c.text(), rules[k].label.clone(), target.text()));
                succ[i].push((rules[k].label.clone(), rules[k].agent.clone(), rules[k].server.clone(), local[target]));
            }
        }
        let initial = local[&initial_config];
        Oracle {
            reachable,
            edges,
            succ,
            initial,
            product_size,
        }
    }

    pub fn node_count(&self) -> usize {
        self.reachable.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_texts(&self) -> BTreeSet<String> {
        self.reachable.iter().map(NamedConfig::text).collect()
    }

    /// BFS distance from the initial configuration.
    pub fn distances(&self) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.reachable.len()];
        dist[self.initial] = 0;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(v) = queue.pop_front() {
            for &(_, _, _, t) in &self.succ[v] {
                if dist[t] == usize::MAX {
                    dist[t] = dist[v] + 1;
                    queue.push_back(t);
                }
            }
        }
        dist
    }

    pub fn deadlocks(&self) -> Vec<usize> {
        (0..self.reachable.len())
            .filter(|&i| self.succ[i].is_empty() && self.reachable[i].pending() > 0)
            .collect()
    }

    /// Nodes reachable from `v` (including `v`).
    pub fn closure(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([v]);
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for &(_, _, _, t) in &self.succ[x] {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen
    }

    /// Some reachable configuration where `agent` is pending and no action of
    /// it can ever fire again.
    pub fn agent_partially_deadlocks(&self, agent: &str) -> bool {
        (0..self.reachable.len()).any(|v| {
            let alive = self.reachable[v].agents.iter().any(|(a, m)| a == agent && m.is_some());
            alive
                && !self
                    .closure(v)
                    .iter()
                    .any(|&x| self.succ[x].iter().any(|(_, a, _, _)| a == agent))
        })
    }

    pub fn server_partially_deadlocks(&self, server: &str) -> bool {
        (0..self.reachable.len()).any(|v| {
            let waiting = self.reachable[v]
                .agents
                .iter()
                .any(|(_, m)| m.as_ref().is_some_and(|(s, _)| s == server));
            waiting
                && !self
                    .closure(v)
                    .iter()
                    .any(|&x| self.succ[x].iter().any(|(_, _, s, _)| s == server))
        })
    }

    pub fn can_terminate(&self, agent: &str) -> bool {
        self.reachable
            .iter()
            .any(|c| c.agents.iter().any(|(a, m)| a == agent && m.is_none()))
    }

    /// Every maximal path from the initial configuration reaches a
    /// configuration where `dead` holds: no alive sink, no alive cycle.
    fn always(&self, dead: impl Fn(&NamedConfig) -> bool) -> bool {
        let alive: Vec<bool> = self.reachable.iter().map(|c| !dead(c)).collect();
        let mut g = petgraph::graph::DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..alive.len()).map(|_| g.add_node(())).collect();
        for v in 0..alive.len() {
            if !alive[v] {
                continue;
            }
            if self.succ[v].is_empty() {
                return false;
            }
            for &(_, _, _, t) in &self.succ[v] {
                if alive[t] {
                    g.add_edge(nodes[v], nodes[t], ());
                }
            }
        }
        !petgraph::algo::is_cyclic_directed(&g)
    }

    pub fn must_terminate(&self, agent: &str) -> bool {
        self.always(|c| c.agents.iter().any(|(a, m)| a == agent && m.is_none()))
    }

    pub fn total_can(&self) -> bool {
        self.reachable.iter().any(|c| c.pending() == 0)
    }

    pub fn total_must(&self) -> bool {
        self.always(|c| c.pending() == 0)
    }

    pub fn strongly_connected(&self) -> bool {
        let mut g = petgraph::graph::DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..self.reachable.len()).map(|_| g.add_node(())).collect();
        for (v, out) in self.succ.iter().enumerate() {
            for &(_, _, _, t) in out {
                g.add_edge(nodes[v], nodes[t], ());
            }
        }
        petgraph::algo::kosaraju_scc(&g).len() == 1
    }
}

/// LTS edges as `(source text, label, target text)`.
pub fn lts_edges(model: &SystemModel, lts: &Lts) -> BTreeSet<(String, String, String)> {
    lts.edges
        .iter()
        .map(|e| {
            (
                model.configuration_text(lts.configuration(e.source)),
                model.action_label(e.label).to_string(),
                model.configuration_text(lts.configuration(e.target)),
            )
        })
        .collect()
}

pub fn lts_nodes(model: &SystemModel, lts: &Lts) -> BTreeSet<String> {
    lts.nodes.iter().map(|c| model.configuration_text(c)).collect()
}

/// Counts how often each name appears; handy for failure messages.
pub fn histogram<'a>(items: impl IntoIterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut out = BTreeMap::new();
    for i in items {
        *out.entry(i).or_insert(0) += 1;
    }
    out
}

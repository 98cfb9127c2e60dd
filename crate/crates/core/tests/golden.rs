mod common;

use std::collections::{BTreeSet, HashMap};

use imds_core::{analyze, build_lts, Limits};

use common::{corpus, lts_edges, lts_nodes, Oracle};

// Buffer, enumerated by hand. A configuration is
// (buf, Sprod, Scons, Aprod message, Acons message) with
// buf: 0 no_elem / 1 elem, Sprod: 0 neutral / 1 prod, Scons: 0 neutral / 1 cons,
// Aprod: 0 Sprod.doSth / 1 buf.put / 2 Sprod.ok_put,
// Acons: 0 Scons.doSth / 1 buf.get / 2 Scons.ok_get.
type Buf = (u8, u8, u8, u8, u8);

fn buffer_step(c: Buf) -> Vec<Buf> {
    let (b, p, q, ap, ac) = c;
    let mut out = Vec::new();
    if ap == 1 && b == 0 {
        out.push((1, p, q, 2, ac));
    }
    if ac == 1 && b == 1 {
        out.push((0, p, q, ap, 2));
    }
    if ap == 0 && p == 0 {
        out.push((b, 1, q, 1, ac));
    }
    if ap == 2 && p == 1 {
        out.push((b, 0, q, 0, ac));
    }
    if ac == 0 && q == 0 {
        out.push((b, p, 1, ap, 1));
    }
    if ac == 2 && q == 1 {
        out.push((b, p, 0, ap, 0));
    }
    out
}

#[test]
fn buffer_hand_enumeration() {
    let mut product = Vec::new();
    for b in 0..2 {
        for p in 0..2 {
            for q in 0..2 {
                for ap in 0..3 {
                    for ac in 0..3 {
                        product.push((b, p, q, ap, ac));
                    }
                }
            }
        }
    }
    assert_eq!(product.len(), 72);

    let mut reached = BTreeSet::from([(0u8, 0u8, 0u8, 0u8, 0u8)]);
    let mut frontier = vec![(0, 0, 0, 0, 0)];
    while let Some(c) = frontier.pop() {
        for n in buffer_step(c) {
            if reached.insert(n) {
                frontier.push(n);
            }
        }
    }
    let edges: usize = reached.iter().map(|&c| buffer_step(c).len()).sum();
    assert_eq!((reached.len(), edges), (18, 30));
    assert!(reached.iter().all(|&c| !buffer_step(c).is_empty()));

    let model = corpus("buffer");
    let lts = build_lts(&model, Limits::default()).unwrap();
    assert_eq!((lts.node_count(), lts.edge_count()), (18, 30));

    let text = |c: &Buf| {
        let ap = ["Sprod.doSth", "buf.put", "Sprod.ok_put"][c.3 as usize];
        let ac = ["Scons.doSth", "buf.get", "Scons.ok_get"][c.4 as usize];
        format!(
            "agents: Aprod:{ap}, Acons:{ac}; servers: buf.{}, Sprod.{}, Scons.{}",
            ["no_elem", "elem"][c.0 as usize],
            ["neutral", "prod"][c.1 as usize],
            ["neutral", "cons"][c.2 as usize],
        )
    };
    let expected: BTreeSet<String> = reached.iter().map(text).collect();
    assert_eq!(lts_nodes(&model, &lts), expected);
}

#[test]
fn buffer_against_oracle() {
    let model = corpus("buffer");
    let oracle = Oracle::new(&model);
    assert_eq!(oracle.product_size, 72);
    assert_eq!((oracle.node_count(), oracle.edge_count()), (18, 30));
    assert!(oracle.strongly_connected());
    assert!(oracle.deadlocks().is_empty());
    assert!(!oracle.total_can());
    for agent in ["Aprod", "Acons"] {
        assert!(!oracle.can_terminate(agent));
        assert!(!oracle.agent_partially_deadlocks(agent));
    }

    let lts = build_lts(&model, Limits::default()).unwrap();
    assert_eq!(lts_edges(&model, &lts), oracle.edges);
    let report = analyze(&model, &lts);
    assert!(!report.total_deadlock.holds);
    assert!(report.agent_deadlocks.iter().chain(&report.server_deadlocks).all(|v| !v.holds));
    assert!(!report.termination.total_can);
    assert!(report.dead_actions.is_empty());
}

#[test]
fn crossed_hand_enumeration() {
    let model = corpus("crossed");
    let lts = build_lts(&model, Limits::default()).unwrap();
    let t = |s1: &str, s2: &str, a1: &str, a2: &str| format!("agents: a1:{a1}, a2:{a2}; servers: sem1.{s1}, sem2.{s2}");
    let t0 = t("up", "up", "sem1.p", "sem2.p");
    let t1 = t("down", "up", "sem2.p", "sem2.p");
    let t2 = t("up", "down", "sem1.p", "sem1.p");
    let t3 = t("down", "down", "-", "sem2.p");
    let t4 = t("down", "down", "sem2.p", "sem1.p");
    let t5 = t("down", "down", "sem1.p", "-");
    let e = |a: &String, l: &str, b: &String| (a.clone(), l.to_string(), b.clone());
    let expected = BTreeSet::from([
        e(&t0, "A", &t1),
        e(&t0, "C", &t2),
        e(&t1, "B", &t3),
        e(&t1, "C", &t4),
        e(&t2, "A", &t4),
        e(&t2, "D", &t5),
    ]);
    assert_eq!(lts_edges(&model, &lts), expected);
    assert_eq!(lts_nodes(&model, &lts), BTreeSet::from([t0.clone(), t1, t2, t3.clone(), t4.clone(), t5.clone()]));
    assert_eq!(model.configuration_text(lts.configuration(0)), t0);

    let dead: BTreeSet<String> = (0..lts.node_count())
        .filter(|&v| lts.out_degree(v) == 0)
        .map(|v| model.configuration_text(lts.configuration(v)))
        .collect();
    assert_eq!(dead, BTreeSet::from([t3, t4.clone(), t5]));

    let report = analyze(&model, &lts);
    assert!(report.total_deadlock.holds);
    let witness = report.total_deadlock.witness.as_ref().unwrap();
    assert_eq!(witness.labels(&model), ["A", "C"]);
    assert_eq!(model.configuration_text(lts.configuration(report.total_deadlock.node.unwrap())), t4);

    let holds: HashMap<String, bool> = report
        .agent_deadlocks
        .iter()
        .chain(&report.server_deadlocks)
        .map(|v| (v.id(), v.holds))
        .collect();
    for id in [
        "partial-deadlock-agent:a1",
        "partial-deadlock-agent:a2",
        "partial-deadlock-server:sem1",
        "partial-deadlock-server:sem2",
    ] {
        assert_eq!(holds.get(id), Some(&true), "{id}");
    }
    for agent in &report.termination.agents {
        assert!(agent.can_terminate && !agent.must_terminate, "{}", agent.agent);
    }
    assert!(!report.termination.total_can && !report.termination.total_must);
}

#[test]
fn corpus_against_oracle() {
    let expected = [("buffer", 18, 30), ("crossed", 6, 6), ("mutex", 21, 38), ("philosophers", 35, 75)];
    for (name, nodes, edges) in expected {
        let model = corpus(name);
        let oracle = Oracle::new(&model);
        assert_eq!((oracle.node_count(), oracle.edge_count()), (nodes, edges), "{name}");
        let lts = build_lts(&model, Limits::default()).unwrap();
        assert_eq!(lts_nodes(&model, &lts), oracle.node_texts(), "{name}");
        assert_eq!(lts_edges(&model, &lts), oracle.edges, "{name}");
    }
}

#[test]
fn mutex_and_philosophers_verdicts() {
    let mutex = corpus("mutex");
    let oracle = Oracle::new(&mutex);
    assert!(oracle.deadlocks().is_empty());
    assert!(oracle.total_can());
    let report = analyze(&mutex, &build_lts(&mutex, Limits::default()).unwrap());
    assert!(!report.total_deadlock.holds);
    assert!(report.termination.total_can);

    let phil = corpus("philosophers");
    let oracle = Oracle::new(&phil);
    let depth = oracle.deadlocks().iter().map(|&v| oracle.distances()[v]).min();
    assert_eq!(depth, Some(3));
    let report = analyze(&phil, &build_lts(&phil, Limits::default()).unwrap());
    assert!(report.total_deadlock.holds);
    assert_eq!(report.total_deadlock.witness.as_ref().unwrap().len(), 3);
}

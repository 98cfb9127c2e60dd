//! Workloads for the benchmarks: the corpus and a ring of philosophers of
//! any size.

use imds_core::{parse, SystemModel};

pub const CORPUS: [(&str, &str); 4] = [
    ("buffer", include_str!("../../../corpus/buffer.imds")),
    ("crossed", include_str!("../../../corpus/crossed.imds")),
    ("mutex", include_str!("../../../corpus/mutex.imds")),
    ("philosophers", include_str!("../../../corpus/philosophers.imds")),
];

pub fn corpus() -> Vec<(&'static str, SystemModel)> {
    CORPUS.iter().map(|(n, t)| (*n, parse(t).expect("corpus parses").0)).collect()
}

/// `n` philosophers around `n` forks, everyone reaching left first.
pub fn philosophers(n: usize) -> SystemModel {
    assert!(n >= 2);
    let fork = |i: usize| format!("f{}", (i + n) % n + 1);
    let mut src = String::from(
        "system ring;\n\
         server: fork (agents pl, pr; servers next, prev),\n\
         services {take, release},\n\
         states {free, taken},\n\
         actions {\n\
         {pl.fork.take, fork.free} -> {pl.next.take, fork.taken},\n\
         {pr.fork.take, fork.free} -> {pr.fork.release, fork.taken},\n\
         {pr.fork.release, fork.taken} -> {pr.prev.release, fork.free},\n\
         {pl.fork.release, fork.taken} -> {pl.fork.take, fork.free},\n\
         };\n",
    );
    let forks: Vec<String> = (0..n).map(|i| format!("{}:fork", fork(i))).collect();
    let phils: Vec<String> = (1..=n).map(|i| format!("ph{i}")).collect();
    src.push_str(&format!("servers {};\nagents {};\ninit -> {{\n", forks.join(", "), phils.join(", ")));
    for i in 0..n {
        let left_owner = i + 1;
        let right_owner = (i + n - 1) % n + 1;
        src.push_str(&format!(
            "  {}(ph{left_owner}, ph{right_owner}, {}, {}).free,\n",
            fork(i),
            fork(i + 1),
            fork(i + n - 1)
        ));
    }
    for i in 0..n {
        src.push_str(&format!("  ph{}.{}.take,\n", i + 1, fork(i)));
    }
    src.push_str("}.\n");
    parse(&src).expect("ring parses").0
}

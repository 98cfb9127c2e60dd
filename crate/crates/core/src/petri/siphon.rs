//! Minimal siphons and traps.
//!
//! A siphon `D` satisfies `•D ⊆ D•`: every transition that puts a token into
//! `D` also takes one out of it, so once `D` is empty it stays empty. Traps
//! are the dual (`D• ⊆ •D`) and are found by running the siphon search on the
//! reversed net.
//!
//! The search grows a candidate set one place at a time. While some transition
//! `t` feeds the candidate without consuming from it, the candidate cannot be
//! a siphon yet, and any siphon containing it must also contain one of the
//! input places of `t`; the search branches over those.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Marking, PetriNet};
use crate::graph::StateGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("siphon search budget exhausted after {expansions} expansions")]
pub struct SearchLimitExceeded {
    pub expansions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiphonSearch {
    /// Return at most this many sets (after canonical sorting).
    pub max_results: usize,
    /// Nets with at most this many places are searched without a budget.
    pub exhaustive_places: usize,
    /// Expansion budget for larger nets.
    pub budget: usize,
}

impl Default for SiphonSearch {
    fn default() -> Self {
        SiphonSearch {
            max_results: usize::MAX,
            exhaustive_places: 24,
            budget: 1_000_000,
        }
    }
}

impl SiphonSearch {
    pub fn with_max_results(max_results: usize) -> Self {
        SiphonSearch {
            max_results,
            ..Self::default()
        }
    }
}

struct Search<'a> {
    net: &'a PetriNet,
    /// Per transition: input and output place sets.
    inputs: Vec<FixedBitSet>,
    outputs: Vec<FixedBitSet>,
    found: Vec<FixedBitSet>,
    visited: HashSet<FixedBitSet>,
    expansions: usize,
    budget: Option<usize>,
}

impl Search<'_> {
    /// First transition producing into `set` without consuming from it.
    fn unbalanced(&self, set: &FixedBitSet) -> Option<usize> {
        (0..self.net.transitions.len())
            .find(|&t| !self.outputs[t].is_disjoint(set) && self.inputs[t].is_disjoint(set))
    }

    fn grow(&mut self, set: FixedBitSet) -> Result<(), SearchLimitExceeded> {
        if self.found.iter().any(|f| f.is_subset(&set)) || !self.visited.insert(set.clone()) {
            return Ok(());
        }
        self.expansions += 1;
        if let Some(budget) = self.budget {
            if self.expansions > budget {
                return Err(SearchLimitExceeded {
                    expansions: self.expansions,
                });
            }
        }
        match self.unbalanced(&set) {
            None => {
                self.found.push(set);
                Ok(())
            }
            Some(t) => {
                let choices: Vec<usize> = self.inputs[t].ones().collect();
                for p in choices {
                    let mut next = set.clone();
                    next.insert(p);
                    self.grow(next)?;
                }
                Ok(())
            }
        }
    }
}

fn canonical(sets: Vec<FixedBitSet>, max_results: usize) -> Vec<Vec<usize>> {
    let minimal: Vec<&FixedBitSet> = sets
        .iter()
        .filter(|s| !sets.iter().any(|o| o != *s && o.is_subset(s)))
        .collect();
    let mut out: Vec<Vec<usize>> = minimal.into_iter().map(|s| s.ones().collect()).collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out.dedup();
    out.truncate(max_results);
    out
}

fn search(net: &PetriNet, options: SiphonSearch) -> Result<Vec<Vec<usize>>, SearchLimitExceeded> {
    let n = net.places.len();
    let to_set = |places: &[usize]| {
        let mut s = FixedBitSet::with_capacity(n);
        for &p in places {
            s.insert(p);
        }
        s
    };
    let mut state = Search {
        net,
        inputs: net.transitions.iter().map(|t| to_set(&t.inputs)).collect(),
        outputs: net.transitions.iter().map(|t| to_set(&t.outputs)).collect(),
        found: Vec::new(),
        visited: HashSet::new(),
        expansions: 0,
        budget: (n > options.exhaustive_places).then_some(options.budget),
    };
    for p in 0..n {
        state.grow(to_set(&[p]))?;
    }
    Ok(canonical(state.found, options.max_results))
}

/// All minimal siphons as sorted place index lists, ordered by size then
/// lexicographically.
pub fn minimal_siphons(net: &PetriNet, options: SiphonSearch) -> Result<Vec<Vec<usize>>, SearchLimitExceeded> {
    search(net, options)
}

/// All minimal traps, in the same order as [`minimal_siphons`].
pub fn minimal_traps(net: &PetriNet, options: SiphonSearch) -> Result<Vec<Vec<usize>>, SearchLimitExceeded> {
    search(&net.dual(), options)
}

/// Checks `•D ⊆ D•` directly from the arcs (non-empty `D` only).
pub fn is_siphon(net: &PetriNet, places: &[usize]) -> bool {
    !places.is_empty()
        && net.transitions.iter().all(|t| {
            !t.outputs.iter().any(|p| places.contains(p)) || t.inputs.iter().any(|p| places.contains(p))
        })
}

pub fn is_trap(net: &PetriNet, places: &[usize]) -> bool {
    is_siphon(&net.dual(), places)
}

/// First reachable marking (in graph order) with no token on `siphon`.
pub fn siphon_emptiable(siphon: &[usize], graph: &StateGraph<Marking>) -> Option<usize> {
    graph
        .nodes
        .iter()
        .position(|m| siphon.iter().all(|&p| m[p] == 0))
}

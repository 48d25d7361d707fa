//! Learning facts: the per-instance data the constraint theory ranges over.

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::dl::{FeatureKind, FeaturePool, Value};
use crate::search::tuple_graph;
use crate::statespace::{StateId, StateSpace, UNREACHABLE};
use crate::task::GroundTask;

use super::LearnError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureFact {
    pub text: String,
    pub complexity: usize,
    pub kind: FeatureKind,
}

/// `s_distance(I, S, S', D)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairFact {
    pub from: StateId,
    pub to: StateId,
    pub distance: u32,
}

/// One `tuple(I, S, T)` with its `t_distance` and `contain` states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TupleFact {
    pub distance: u32,
    pub contain: Vec<StateId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceFacts {
    pub name: String,
    pub num_states: usize,
    pub solvable: Vec<bool>,
    /// Alive states (`exceed`), in increasing order.
    pub alive: Vec<StateId>,
    /// Tuples per alive state, parallel to `alive`.
    pub tuples: Vec<Vec<TupleFact>>,
    /// Pairs grouped by source in `alive` order, then by target index.
    pub pairs: Vec<PairFact>,
    /// `feature_valuation`, indexed by feature then state.
    pub valuations: Vec<Vec<Value>>,
}

impl InstanceFacts {
    /// Largest tuple distance of an alive state; 0 for every other state.
    pub fn horizons(&self) -> Vec<u32> {
        let mut h = vec![0; self.num_states];
        for (s, ts) in self.alive.iter().zip(&self.tuples) {
            h[*s as usize] = ts.iter().map(|t| t.distance).max().unwrap_or(0);
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LearnFacts {
    pub k: usize,
    pub features: Vec<FeatureFact>,
    pub instances: Vec<InstanceFacts>,
}

/// Tuples of `root` beyond layer 0, plus one singleton tuple per distinct
/// successor, deduplicated by (distance, contain) and sorted.
fn root_tuples(task: &GroundTask, space: &StateSpace, root: StateId, k: usize) -> Vec<TupleFact> {
    let mut seen = FxHashSet::default();
    let mut out = Vec::new();
    let graph = tuple_graph(task, space, root, k);
    let nodes = graph.nodes.iter().filter(|n| n.distance > 0).map(|n| TupleFact { distance: n.distance, contain: n.contain.clone() });
    let steps = space.successors(root).iter().filter(|(_, t)| *t != root).map(|(_, t)| TupleFact { distance: 1, contain: vec![*t] });
    for t in steps.chain(nodes) {
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out.sort_by(|a, b| (a.distance, &a.contain).cmp(&(b.distance, &b.contain)));
    out
}

fn instance_facts(task: &GroundTask, space: &StateSpace, pool: &FeaturePool, sample: usize, k: usize) -> InstanceFacts {
    let alive = space.alive_states();
    let per_root: Vec<(Vec<TupleFact>, Vec<PairFact>)> = alive
        .par_iter()
        .map(|&s| {
            let tuples = root_tuples(task, space, s, k);
            let horizon = tuples.iter().map(|t| t.distance).max().unwrap_or(0);
            let dist = space.bfs(s);
            let pairs = space
                .ids()
                .filter(|t| *t != s && dist[*t as usize] != UNREACHABLE && dist[*t as usize] <= horizon)
                .map(|t| PairFact { from: s, to: t, distance: dist[t as usize] })
                .collect();
            (tuples, pairs)
        })
        .collect();
    let (tuples, pairs): (Vec<_>, Vec<_>) = per_root.into_iter().unzip();
    InstanceFacts {
        name: task.problem_name.clone(),
        num_states: space.len(),
        solvable: space.ids().map(|s| space.is_solvable(s)).collect(),
        alive,
        tuples,
        pairs: pairs.into_iter().flatten().collect(),
        valuations: (0..pool.len()).map(|f| pool.sample_values(f, sample).to_vec()).collect(),
    }
}

/// Facts for the training spaces at bound `k`. Sample `i` of the pool must
/// hold the states of `instances[i]` in space order.
pub fn build_facts(instances: &[(&GroundTask, &StateSpace)], pool: &FeaturePool, k: usize) -> Result<LearnFacts, LearnError> {
    let sizes_match = |i: usize, sp: &StateSpace| pool.is_empty() || pool.sample_values(0, i).len() == sp.len();
    if pool.num_samples() != instances.len() || instances.iter().enumerate().any(|(i, (_, sp))| !sizes_match(i, sp)) {
        return Err(LearnError::Config("feature pool samples do not match the training spaces".into()));
    }
    let features = pool
        .features
        .iter()
        .map(|f| FeatureFact { text: f.text.clone(), complexity: f.complexity, kind: f.kind })
        .collect();
    let instances = instances.iter().enumerate().map(|(i, (t, sp))| instance_facts(t, sp, pool, i, k)).collect();
    Ok(LearnFacts { k, features, instances })
}

//! Tuple graphs: tuples of at most k atoms reachable from a root state through
//! chains where every optimal plan for one tuple extends by one action into an
//! optimal plan for the next.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::statespace::{StateId, StateSpace};
use crate::task::{AtomId, GroundTask};

use super::novelty::state_tuples;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TupleNode {
    /// Sorted fluent atoms; empty only for the root tuple when `k = 0`.
    pub tuple: Vec<AtomId>,
    pub distance: u32,
    /// States at `distance` from the root that make the tuple true, sorted.
    pub contain: Vec<StateId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TupleGraph {
    pub root: StateId,
    pub k: usize,
    pub nodes: Vec<TupleNode>,
    /// Node indices per distance.
    pub layers: Vec<Vec<usize>>,
}

impl TupleGraph {
    pub fn layer(&self, d: usize) -> impl Iterator<Item = &TupleNode> {
        self.layers.get(d).into_iter().flatten().map(|i| &self.nodes[*i])
    }

    /// Largest tuple distance in the graph.
    pub fn horizon(&self) -> u32 {
        self.layers.len().saturating_sub(1) as u32
    }
}

pub fn tuple_graph(task: &GroundTask, space: &StateSpace, root: StateId, k: usize) -> TupleGraph {
    tuple_graph_bounded(task, space, root, k, u32::MAX)
}

/// Builds the tuple graph of `root` up to layer `max_depth`.
pub fn tuple_graph_bounded(task: &GroundTask, space: &StateSpace, root: StateId, k: usize, max_depth: u32) -> TupleGraph {
    let statics = &task.static_atom;
    let dist = space.bfs(root);
    let tuples_of = |s: StateId| state_tuples(space.state(s), statics, k);

    let mut graph = TupleGraph { root, k, nodes: Vec::new(), layers: Vec::new() };
    let root_tuples = tuples_of(root);
    let mut seen: FxHashSet<Vec<AtomId>> = root_tuples.iter().cloned().collect();
    let layer0 = if root_tuples.is_empty() { vec![Vec::new()] } else { root_tuples };
    graph.layers.push(Vec::new());
    for t in layer0 {
        graph.layers[0].push(graph.nodes.len());
        graph.nodes.push(TupleNode { tuple: t, distance: 0, contain: vec![root] });
    }
    if k == 0 {
        return graph;
    }

    let mut frontier = vec![root];
    let mut d = 0u32;
    while d < max_depth && !graph.layers[d as usize].is_empty() {
        // States at depth d + 1 and their tuples not seen at a lower depth.
        let mut next: Vec<StateId> = frontier
            .iter()
            .flat_map(|s| space.successors(*s).iter().map(|(_, t)| *t))
            .filter(|t| dist[*t as usize] == d + 1)
            .collect();
        next.sort_unstable();
        next.dedup();
        let fresh: FxHashMap<StateId, FxHashSet<Vec<AtomId>>> = next
            .iter()
            .map(|s| (*s, tuples_of(*s).into_iter().filter(|t| !seen.contains(t)).collect()))
            .collect();

        // Tuples each depth-d state reaches in one step.
        let mut reach: FxHashMap<StateId, FxHashSet<&Vec<AtomId>>> = FxHashMap::default();
        let layer = &graph.layers[d as usize];
        let mut extensions: FxHashSet<Vec<AtomId>> = FxHashSet::default();
        for &i in layer {
            let contain = &graph.nodes[i].contain;
            for s in contain {
                reach.entry(*s).or_insert_with(|| {
                    space.successors(*s).iter().filter_map(|(_, t)| fresh.get(t)).flatten().collect()
                });
            }
            let (first, rest) = contain.split_first().expect("contain sets are non-empty");
            for t in &reach[first] {
                if rest.iter().all(|s| reach[s].contains(t)) {
                    extensions.insert((*t).clone());
                }
            }
        }

        for tuples in fresh.values() {
            seen.extend(tuples.iter().cloned());
        }
        let mut ext: Vec<Vec<AtomId>> = extensions.into_iter().collect();
        ext.sort();
        let mut new_layer = Vec::with_capacity(ext.len());
        for t in ext {
            let contain: Vec<StateId> = next.iter().copied().filter(|s| fresh[s].contains(&t)).collect();
            new_layer.push(graph.nodes.len());
            graph.nodes.push(TupleNode { tuple: t, distance: d + 1, contain });
        }
        if new_layer.is_empty() {
            break;
        }
        graph.layers.push(new_layer);
        frontier = next;
        d += 1;
    }
    debug_assert!(graph.nodes.iter().all(|n| n.contain.iter().all(|s| dist[*s as usize] == n.distance)));
    graph
}

//! Sketch verification over expanded state spaces: acyclicity of the subgoal
//! graph and (s-)width of the subproblems of every alive state.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search::{iw, tuple_graph_bounded, SpaceTransitions, TupleGraph};
use crate::sketch::{Sketch, Subgoals, Valuations};
use crate::statespace::{StateId, StateSpace, UNREACHABLE};
use crate::task::GroundTask;

/// Largest space `brute_force_width` accepts.
pub const BRUTE_FORCE_CAP: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("state space has {0} states, above the brute-force cap of {BRUTE_FORCE_CAP}")]
    CapacityExceeded(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WidthMode {
    #[default]
    Strict,
    SWidth,
}

/// Which subgoal edges leave each state in the acyclicity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    /// From every alive state to its closest subgoals.
    Closest,
    /// From every alive state to its subgoals within a per-state horizon,
    /// indexed by state.
    Within(Vec<u32>),
    /// From every solvable state to every reachable state satisfying a rule.
    Reachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AcyclicityReport {
    pub acyclic: bool,
    /// A cycle `s_0, ..., s_n` with an edge from each state to the next and
    /// from `s_n` back to `s_0`.
    pub witness: Option<Vec<StateId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateWidth {
    pub state: StateId,
    /// Distance to the closest subgoal, if one is reachable.
    pub distance: Option<u32>,
    /// Smallest bound at which the subproblem is solved, if at most `k`.
    pub width: Option<usize>,
    pub dead_end_subgoal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WidthReport {
    pub mode: WidthMode,
    pub k: usize,
    pub states: Vec<StateWidth>,
    /// Largest per-state width; `None` if some state exceeds `k`.
    pub max_width: Option<usize>,
    pub bounded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub instance: String,
    pub acyclicity: AcyclicityReport,
    pub width: WidthReport,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.acyclicity.acyclic && self.width.bounded
    }
}

/// Looks for a cycle in the graph of subgoal edges among solvable states.
pub fn check_acyclicity(sketch: &Sketch, space: &StateSpace, valuations: &Valuations, scope: &Scope) -> AcyclicityReport {
    let sub = Subgoals::new(sketch, space, valuations);
    let rule_edge = |s: StateId, t: StateId| t != s && space.is_solvable(t) && sketch.any_rule(valuations.of(s), valuations.of(t));
    let edges: Vec<Vec<StateId>> = (0..space.len() as StateId)
        .into_par_iter()
        .map(|s| match scope {
            _ if !space.is_solvable(s) => Vec::new(),
            Scope::Closest if space.is_alive(s) => {
                sub.closest_subgoals(s).map(|(_, ts)| ts.into_iter().filter(|t| rule_edge(s, *t)).collect()).unwrap_or_default()
            }
            Scope::Within(h) if space.is_alive(s) => sub
                .subgoals_within(s, h[s as usize])
                .into_iter()
                .map(|(t, _)| t)
                .filter(|t| rule_edge(s, *t))
                .collect(),
            Scope::Reachable => sub.subgoal_states(s).into_iter().filter(|t| rule_edge(s, *t)).collect(),
            _ => Vec::new(),
        })
        .collect();
    let witness = find_cycle(&edges);
    AcyclicityReport { acyclic: witness.is_none(), witness }
}

/// Iterative depth-first search for a cycle; returns its states in order.
fn find_cycle(edges: &[Vec<StateId>]) -> Option<Vec<StateId>> {
    const NEW: u8 = 0;
    const OPEN: u8 = 1;
    const DONE: u8 = 2;
    let mut color = vec![NEW; edges.len()];
    for root in 0..edges.len() {
        if color[root] != NEW {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        color[root] = OPEN;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if let Some(&v) = edges[u].get(*next) {
                *next += 1;
                let v = v as usize;
                match color[v] {
                    NEW => {
                        color[v] = OPEN;
                        stack.push((v, 0));
                    }
                    OPEN => {
                        let start = stack.iter().position(|(x, _)| *x == v).expect("open states are on the stack");
                        return Some(stack[start..].iter().map(|(x, _)| *x as StateId).collect());
                    }
                    _ => {}
                }
            } else {
                color[u] = DONE;
                stack.pop();
            }
        }
    }
    None
}

/// Width of the subproblem of every alive state: reach G_R(s) from `s`.
///
/// Strict mode: smallest `k' <= k` such that IW(k') reaches G_R(s) with a plan
/// of optimal length; a dead end among the closest subgoals fails the state.
/// S-width mode: smallest `k' <= k` whose tuple graph has a tuple all of whose
/// optimal plans end in G_R(s) and no dead end lies among the subgoals within
/// that tuple's distance. A state with satisficing tuples that all fail the
/// dead-end screen reports the smallest such `k'` and is flagged.
pub fn check_width(
    task: &GroundTask,
    sketch: &Sketch,
    space: &StateSpace,
    valuations: &Valuations,
    k: usize,
    mode: WidthMode,
) -> WidthReport {
    let sub = Subgoals::new(sketch, space, valuations);
    let tr = SpaceTransitions::new(task, space);
    let states: Vec<StateWidth> = space
        .alive_states()
        .into_par_iter()
        .map(|s| {
            let closest = sub.closest_subgoals(s);
            let mut entry = StateWidth { state: s, distance: closest.as_ref().map(|c| c.0), width: None, dead_end_subgoal: false };
            let Some((d, nearest)) = closest else { return entry };
            match mode {
                WidthMode::Strict => {
                    entry.dead_end_subgoal = nearest.iter().any(|t| space.is_dead_end(*t));
                    entry.width = (0..=k).find(|kk| {
                        iw(&tr, s, *kk, |t| sub.is_subgoal(s, *t)).plan_len() == Some(d as usize)
                    });
                }
                WidthMode::SWidth => {
                    let clean = |m: u32| !sub.subgoals_within(s, m).iter().any(|(t, _)| space.is_dead_end(*t));
                    let found: Vec<(usize, u32)> = if d <= 1 {
                        vec![(0, d)]
                    } else {
                        (1..=k)
                            .filter_map(|kk| {
                                let g = tuple_graph_bounded(task, space, s, kk, u32::MAX);
                                satisficing_distance(&g, |t| sub.is_subgoal(s, t)).map(|m| (kk, m))
                            })
                            .collect()
                    };
                    if let Some((kk, _)) = found.iter().find(|(_, m)| clean(*m)) {
                        entry.width = Some(*kk);
                    } else if let Some((kk, _)) = found.first() {
                        entry.width = Some(*kk);
                        entry.dead_end_subgoal = true;
                    }
                }
            }
            entry
        })
        .collect();
    let bounded = states.iter().all(|e| e.width.is_some() && !e.dead_end_subgoal);
    let max_width = if states.iter().all(|e| e.width.is_some()) {
        Some(states.iter().filter_map(|e| e.width).max().unwrap_or(0))
    } else {
        None
    };
    WidthReport { mode, k, states, max_width, bounded }
}

/// Smallest distance of a tuple whose optimal plans all end in the target set.
pub fn satisficing_distance(graph: &TupleGraph, target: impl Fn(StateId) -> bool) -> Option<u32> {
    graph.nodes.iter().filter(|n| n.contain.iter().all(|s| target(*s))).map(|n| n.distance).min()
}

/// Acyclicity (closest-subgoal scope) and width of `sketch` on one space.
pub fn verify(task: &GroundTask, sketch: &Sketch, space: &StateSpace, k: usize, mode: WidthMode) -> VerificationReport {
    let valuations = sketch.valuations(task, space);
    VerificationReport {
        instance: task.problem_name.clone(),
        acyclicity: check_acyclicity(sketch, space, &valuations, &Scope::Closest),
        width: check_width(task, sketch, space, &valuations, k, mode),
    }
}

/// Width of reaching `goal` from `start` by direct search over tuple chains:
/// 0 when the goal set is at most one step away, otherwise the smallest
/// `k <= k_max` with a chain of `k`-tuples whose last tuple's optimal plans
/// are optimal plans to the goal set. `Ok(None)` when the goal set is
/// unreachable or needs more than `k_max`.
pub fn brute_force_width(
    task: &GroundTask,
    space: &StateSpace,
    start: StateId,
    goal: impl Fn(StateId) -> bool,
    k_max: usize,
) -> Result<Option<usize>, VerifyError> {
    if space.len() > BRUTE_FORCE_CAP {
        return Err(VerifyError::CapacityExceeded(space.len()));
    }
    let dist = space.bfs(start);
    let Some(d) = space.ids().filter(|s| dist[*s as usize] != UNREACHABLE && goal(*s)).map(|s| dist[s as usize]).min()
    else {
        return Ok(None);
    };
    if d <= 1 {
        return Ok(Some(0));
    }
    Ok((1..=k_max).find(|k| {
        let g = tuple_graph_bounded(task, space, start, *k, d);
        let found = g.layer(d as usize).any(|n| n.contain.iter().all(|s| goal(*s)));
        found
    }))
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instance {}", self.instance)?;
        match &self.acyclicity.witness {
            None => writeln!(f, "  acyclic: yes")?,
            Some(w) => writeln!(f, "  acyclic: no (cycle through states {w:?})")?,
        }
        let w = &self.width;
        let mode = match w.mode {
            WidthMode::Strict => "width",
            WidthMode::SWidth => "s-width",
        };
        let max = w.max_width.map_or("unbounded".to_string(), |m| m.to_string());
        writeln!(f, "  {mode} (k = {}): max {max} over {} alive states", w.k, w.states.len())?;
        let dead = w.states.iter().filter(|e| e.dead_end_subgoal).count();
        let over = w.states.iter().filter(|e| e.width.is_none()).count();
        if dead > 0 {
            writeln!(f, "  {dead} states with dead-end subgoals")?;
        }
        if over > 0 {
            writeln!(f, "  {over} states above the bound")?;
        }
        writeln!(f, "  verdict: {}", if self.passed() { "pass" } else { "fail" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_witness() {
        let edges = vec![vec![1], vec![2], vec![1], vec![]];
        assert_eq!(find_cycle(&edges), Some(vec![1, 2]));
        assert_eq!(find_cycle(&[vec![1], vec![2], vec![]]), None);
        assert_eq!(find_cycle(&[vec![0]]), Some(vec![0]));
    }
}

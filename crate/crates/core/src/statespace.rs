//! Explicit breadth-first expansion of small tasks with goal, solvability and
//! distance labels.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::task::{ActionId, GroundTask, State};

pub type StateId = u32;

/// Distance marker for states that cannot be reached.
pub const UNREACHABLE: u32 = u32::MAX;

pub const DEFAULT_MAX_STATES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StateSpaceError {
    #[error("state space exceeds the cap of {0} states")]
    CapacityExceeded(usize),
    #[error("state index {index} out of range (space has {len} states)")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug)]
pub struct StateSpace {
    states: Vec<State>,
    index: FxHashMap<State, StateId>,
    successors: Vec<Vec<(ActionId, StateId)>>,
    predecessors: Vec<Vec<StateId>>,
    goal: Vec<bool>,
    solvable: Vec<bool>,
    depth: Vec<u32>,
    goal_distance: Vec<u32>,
    max_states: usize,
    cache: Mutex<FxHashMap<StateId, Arc<Vec<u32>>>>,
}

/// Serializable view of a space for debugging dumps.
#[derive(Debug, Serialize)]
pub struct SpaceDump {
    pub states: Vec<DumpedState>,
    pub initial: StateId,
}

#[derive(Debug, Serialize)]
pub struct DumpedState {
    pub id: StateId,
    pub atoms: Vec<String>,
    pub goal: bool,
    pub solvable: bool,
    pub depth: u32,
    pub successors: Vec<(String, StateId)>,
}

impl StateSpace {
    /// Expands every state reachable from the initial state, failing once more
    /// than `max_states` distinct states have been discovered.
    pub fn expand(task: &GroundTask, max_states: usize) -> Result<StateSpace, StateSpaceError> {
        assert!(max_states >= 1, "max_states must be positive");
        let mut space = StateSpace {
            states: vec![task.init.clone()],
            index: FxHashMap::default(),
            successors: Vec::new(),
            predecessors: Vec::new(),
            goal: Vec::new(),
            solvable: Vec::new(),
            depth: vec![0],
            goal_distance: Vec::new(),
            max_states,
            cache: Mutex::new(FxHashMap::default()),
        };
        space.index.insert(task.init.clone(), 0);
        let mut queue = VecDeque::from([0u32]);
        while let Some(s) = queue.pop_front() {
            let state = space.states[s as usize].clone();
            let mut out = Vec::new();
            for (a, next) in task.successors(&state) {
                let id = match space.index.get(&next) {
                    Some(id) => *id,
                    None => {
                        if space.states.len() >= max_states {
                            return Err(StateSpaceError::CapacityExceeded(max_states));
                        }
                        let id = space.states.len() as StateId;
                        space.index.insert(next.clone(), id);
                        space.states.push(next);
                        space.depth.push(space.depth[s as usize] + 1);
                        queue.push_back(id);
                        id
                    }
                };
                out.push((a, id));
            }
            space.successors.push(out);
        }
        space.predecessors = vec![Vec::new(); space.states.len()];
        for (s, succ) in space.successors.iter().enumerate() {
            for (_, t) in succ {
                let preds = &mut space.predecessors[*t as usize];
                if preds.last() != Some(&(s as StateId)) {
                    preds.push(s as StateId);
                }
            }
        }
        space.goal = space.states.iter().map(|s| task.is_goal(s)).collect();
        space.label_solvability();
        log::debug!("expanded {} states ({} alive)", space.len(), space.num_alive());
        Ok(space)
    }

    /// Labels solvable states by backward reachability from the goal states and
    /// records the distance to the nearest goal.
    pub fn label_solvability(&mut self) {
        let n = self.states.len();
        let mut dist = vec![UNREACHABLE; n];
        let mut queue = VecDeque::new();
        for (s, g) in self.goal.iter().enumerate() {
            if *g {
                dist[s] = 0;
                queue.push_back(s as StateId);
            }
        }
        while let Some(s) = queue.pop_front() {
            for p in &self.predecessors[s as usize] {
                if dist[*p as usize] == UNREACHABLE {
                    dist[*p as usize] = dist[s as usize] + 1;
                    queue.push_back(*p);
                }
            }
        }
        self.solvable = dist.iter().map(|d| *d != UNREACHABLE).collect();
        self.goal_distance = dist;
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> StateId {
        0
    }

    pub fn max_states(&self) -> usize {
        self.max_states
    }

    pub fn state(&self, s: StateId) -> &State {
        &self.states[s as usize]
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn id_of(&self, state: &State) -> Option<StateId> {
        self.index.get(state).copied()
    }

    pub fn successors(&self, s: StateId) -> &[(ActionId, StateId)] {
        &self.successors[s as usize]
    }

    pub fn predecessors(&self, s: StateId) -> &[StateId] {
        &self.predecessors[s as usize]
    }

    pub fn is_goal(&self, s: StateId) -> bool {
        self.goal[s as usize]
    }

    pub fn is_solvable(&self, s: StateId) -> bool {
        self.solvable[s as usize]
    }

    pub fn is_dead_end(&self, s: StateId) -> bool {
        !self.solvable[s as usize]
    }

    pub fn is_alive(&self, s: StateId) -> bool {
        self.solvable[s as usize] && !self.goal[s as usize]
    }

    pub fn depth(&self, s: StateId) -> u32 {
        self.depth[s as usize]
    }

    /// Length of a shortest path to a goal state, or [`UNREACHABLE`].
    pub fn goal_distance(&self, s: StateId) -> u32 {
        self.goal_distance[s as usize]
    }

    pub fn ids(&self) -> impl Iterator<Item = StateId> {
        0..self.states.len() as StateId
    }

    pub fn alive_states(&self) -> Vec<StateId> {
        self.ids().filter(|s| self.is_alive(*s)).collect()
    }

    pub fn num_alive(&self) -> usize {
        self.ids().filter(|s| self.is_alive(*s)).count()
    }

    pub fn num_dead_ends(&self) -> usize {
        self.solvable.iter().filter(|s| !**s).count()
    }

    pub fn num_goals(&self) -> usize {
        self.goal.iter().filter(|g| **g).count()
    }

    /// Breadth-first distances from `source`, computed once and cached.
    pub fn distances_from(&self, source: StateId) -> Result<Arc<Vec<u32>>, StateSpaceError> {
        self.check(source)?;
        if let Some(d) = self.cache.lock().unwrap().get(&source) {
            return Ok(Arc::clone(d));
        }
        let d = Arc::new(self.bfs(source));
        self.cache.lock().unwrap().insert(source, Arc::clone(&d));
        Ok(d)
    }

    /// Breadth-first distances from `source` without touching the cache.
    pub fn bfs(&self, source: StateId) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.states.len()];
        dist[source as usize] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(s) = queue.pop_front() {
            let next = dist[s as usize] + 1;
            for (_, t) in &self.successors[s as usize] {
                if dist[*t as usize] == UNREACHABLE {
                    dist[*t as usize] = next;
                    queue.push_back(*t);
                }
            }
        }
        dist
    }

    /// Drops all cached distance tables.
    pub fn clear_cache(&self) {
        self.cache.lock().unwrap().clear();
    }

    /// A shortest action sequence from `from` to `to`, if one exists.
    pub fn shortest_path(&self, from: StateId, to: StateId) -> Option<Vec<ActionId>> {
        let mut parent: Vec<Option<(StateId, ActionId)>> = vec![None; self.states.len()];
        let mut seen = vec![false; self.states.len()];
        seen[from as usize] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            if s == to {
                let mut plan = Vec::new();
                let mut cur = to;
                while let Some((p, a)) = parent[cur as usize] {
                    plan.push(a);
                    cur = p;
                }
                plan.reverse();
                return Some(plan);
            }
            for (a, t) in &self.successors[s as usize] {
                if !seen[*t as usize] {
                    seen[*t as usize] = true;
                    parent[*t as usize] = Some((s, *a));
                    queue.push_back(*t);
                }
            }
        }
        None
    }

    pub fn dump(&self, task: &GroundTask) -> SpaceDump {
        SpaceDump {
            initial: 0,
            states: self
                .ids()
                .map(|s| DumpedState {
                    id: s,
                    atoms: self
                        .state(s)
                        .atoms()
                        .iter()
                        .filter(|a| !task.static_atom[**a as usize])
                        .map(|a| task.atom_text(*a))
                        .collect(),
                    goal: self.is_goal(s),
                    solvable: self.is_solvable(s),
                    depth: self.depth(s),
                    successors: self.successors(s).iter().map(|(a, t)| (task.action_text(*a), *t)).collect(),
                })
                .collect(),
        }
    }

    fn check(&self, s: StateId) -> Result<(), StateSpaceError> {
        if (s as usize) < self.states.len() {
            Ok(())
        } else {
            Err(StateSpaceError::IndexOutOfRange { index: s as usize, len: self.states.len() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{ground, parse_domain, parse_problem};

    fn line(n: usize) -> GroundTask {
        let d = parse_domain(
            "(define (domain line) (:predicates (at ?x) (next ?x ?y))
             (:action go :parameters (?x ?y) :precondition (and (at ?x) (next ?x ?y)) :effect (and (at ?y) (not (at ?x)))))",
        )
        .unwrap();
        let objs: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let nexts: String = (0..n - 1).map(|i| format!("(next p{i} p{})", i + 1)).collect();
        let text = format!(
            "(define (problem l) (:domain line) (:objects {}) (:init (at p0) {nexts}) (:goal (at p{})))",
            objs.join(" "),
            n - 1
        );
        ground(&d, &parse_problem(&text, &d).unwrap())
    }

    #[test]
    fn one_way_line_has_dead_ends_only_past_the_goal() {
        let t = line(4);
        let sp = StateSpace::expand(&t, 100).unwrap();
        assert_eq!(sp.len(), 4);
        assert_eq!(sp.num_goals(), 1);
        assert_eq!(sp.num_dead_ends(), 0);
        assert_eq!(sp.goal_distance(0), 3);
        let d = sp.distances_from(0).unwrap();
        assert_eq!(*d, vec![0, 1, 2, 3]);
        let back = sp.distances_from(3).unwrap();
        assert_eq!(back[0], UNREACHABLE);
        assert_eq!(sp.shortest_path(0, 3).unwrap().len(), 3);
    }

    #[test]
    fn capacity_is_enforced() {
        let t = line(4);
        assert_eq!(StateSpace::expand(&t, 1).unwrap_err(), StateSpaceError::CapacityExceeded(1));
        assert!(StateSpace::expand(&t, 4).is_ok());
        assert!(StateSpace::expand(&t, 3).is_err());
    }

    #[test]
    fn out_of_range_source() {
        let sp = StateSpace::expand(&line(2), 10).unwrap();
        assert!(matches!(sp.distances_from(7), Err(StateSpaceError::IndexOutOfRange { .. })));
    }
}

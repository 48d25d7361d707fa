//! Grounded STRIPS tasks: atom and action tables, states, successor generation
//! and plan replay.

use std::fmt;

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

pub type AtomId = u32;
pub type ActionId = u32;
pub type ObjectId = u32;

/// A state as the sorted set of its true atoms (static atoms included).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct State(Vec<AtomId>);

impl State {
    pub fn new(mut atoms: Vec<AtomId>) -> Self {
        atoms.sort_unstable();
        atoms.dedup();
        State(atoms)
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.0
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        self.0.binary_search(&atom).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Object {
    pub name: String,
    pub display: String,
    /// Declared type followed by its ancestors, without `object`.
    pub types: Vec<String>,
    pub is_constant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredicateInfo {
    pub name: String,
    pub arity: usize,
    pub is_static: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GroundAtom {
    pub predicate: u32,
    pub args: Vec<ObjectId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<ObjectId>,
    pub pre_pos: Vec<AtomId>,
    pub pre_neg: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundTask {
    pub domain_name: String,
    pub problem_name: String,
    pub objects: Vec<Object>,
    pub predicates: Vec<PredicateInfo>,
    pub atoms: Vec<GroundAtom>,
    pub actions: Vec<GroundAction>,
    pub init: State,
    pub goal_pos: Vec<AtomId>,
    pub goal_neg: Vec<AtomId>,
    pub static_atom: Vec<bool>,
    #[serde(skip)]
    pub(crate) atom_index: FxHashMap<GroundAtom, AtomId>,
    /// Actions whose static preconditions hold, in table order.
    #[serde(skip)]
    pub(crate) live: Vec<ActionId>,
    /// For every atom, the live actions whose first fluent positive
    /// precondition is that atom.
    #[serde(skip)]
    pub(crate) triggered_by: Vec<Vec<ActionId>>,
    /// Live actions without fluent positive preconditions.
    #[serde(skip)]
    pub(crate) untriggered: Vec<ActionId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("step {step}: action index {action} out of range")]
    UnknownAction { step: usize, action: ActionId },
    #[error("step {step}: action {name} is not applicable")]
    NotApplicable { step: usize, name: String },
    #[error("the plan ends in a state that does not satisfy the goal")]
    GoalNotReached,
}

impl GroundTask {
    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_fluent_atoms(&self) -> usize {
        self.static_atom.iter().filter(|s| !**s).count()
    }

    pub fn atom_id(&self, atom: &GroundAtom) -> Option<AtomId> {
        self.atom_index.get(atom).copied()
    }

    /// Looks an atom up by predicate and object names.
    pub fn find_atom(&self, predicate: &str, args: &[&str]) -> Option<AtomId> {
        let p = self.predicates.iter().position(|p| p.name == predicate)? as u32;
        let mut ids = Vec::with_capacity(args.len());
        for a in args {
            ids.push(self.objects.iter().position(|o| o.name == *a)? as ObjectId);
        }
        self.atom_id(&GroundAtom { predicate: p, args: ids })
    }

    pub fn object_id(&self, name: &str) -> Option<ObjectId> {
        self.objects.iter().position(|o| o.name == name).map(|i| i as ObjectId)
    }

    pub fn atom_text(&self, atom: AtomId) -> String {
        let a = &self.atoms[atom as usize];
        let mut s = format!("({}", self.predicates[a.predicate as usize].name);
        for o in &a.args {
            s.push(' ');
            s.push_str(&self.objects[*o as usize].display);
        }
        s.push(')');
        s
    }

    pub fn action_text(&self, action: ActionId) -> String {
        let a = &self.actions[action as usize];
        let mut s = format!("({}", a.schema);
        for o in &a.args {
            s.push(' ');
            s.push_str(&self.objects[*o as usize].display);
        }
        s.push(')');
        s
    }

    pub fn is_goal(&self, state: &State) -> bool {
        self.goal_pos.iter().all(|a| state.contains(*a)) && !self.goal_neg.iter().any(|a| state.contains(*a))
    }

    /// Number of goal literals not satisfied in `state`.
    pub fn unsatisfied_goals(&self, state: &State) -> usize {
        self.goal_pos.iter().filter(|a| !state.contains(**a)).count()
            + self.goal_neg.iter().filter(|a| state.contains(**a)).count()
    }

    pub fn num_goal_literals(&self) -> usize {
        self.goal_pos.len() + self.goal_neg.len()
    }

    pub fn is_applicable(&self, state: &State, action: ActionId) -> bool {
        let a = &self.actions[action as usize];
        a.pre_pos.iter().all(|p| state.contains(*p)) && !a.pre_neg.iter().any(|p| state.contains(*p))
    }

    pub fn apply(&self, state: &State, action: ActionId) -> State {
        let a = &self.actions[action as usize];
        let mut atoms: Vec<AtomId> = state.atoms().iter().copied().filter(|x| !a.del.contains(x)).collect();
        atoms.extend_from_slice(&a.add);
        State::new(atoms)
    }

    /// Applicable actions in action-table order.
    pub fn applicable(&self, state: &State) -> Vec<ActionId> {
        let mut cands: Vec<ActionId> = self.untriggered.clone();
        for atom in state.atoms() {
            cands.extend_from_slice(&self.triggered_by[*atom as usize]);
        }
        cands.sort_unstable();
        cands.retain(|a| self.is_applicable(state, *a));
        cands
    }

    pub fn successors(&self, state: &State) -> Vec<(ActionId, State)> {
        self.applicable(state).into_iter().map(|a| (a, self.apply(state, a))).collect()
    }

    /// Replays `plan` from `start`, returning the final state.
    pub fn replay(&self, start: &State, plan: &[ActionId]) -> Result<State, PlanError> {
        let mut s = start.clone();
        for (step, &a) in plan.iter().enumerate() {
            if a as usize >= self.actions.len() {
                return Err(PlanError::UnknownAction { step, action: a });
            }
            if !self.is_applicable(&s, a) {
                return Err(PlanError::NotApplicable { step, name: self.action_text(a) });
            }
            s = self.apply(&s, a);
        }
        Ok(s)
    }

    /// Replays `plan` from the initial state and checks that it reaches the goal.
    pub fn validate_plan(&self, plan: &[ActionId]) -> Result<State, PlanError> {
        let end = self.replay(&self.init, plan)?;
        if self.is_goal(&end) {
            Ok(end)
        } else {
            Err(PlanError::GoalNotReached)
        }
    }

    pub(crate) fn finish(&mut self) {
        let n = self.atoms.len();
        self.atom_index = self.atoms.iter().enumerate().map(|(i, a)| (a.clone(), i as AtomId)).collect();
        self.live.clear();
        self.triggered_by = vec![Vec::new(); n];
        self.untriggered.clear();
        for (i, a) in self.actions.iter().enumerate() {
            let static_ok = a
                .pre_pos
                .iter()
                .filter(|p| self.static_atom[**p as usize])
                .all(|p| self.init.contains(*p))
                && !a
                    .pre_neg
                    .iter()
                    .filter(|p| self.static_atom[**p as usize])
                    .any(|p| self.init.contains(*p));
            if !static_ok {
                continue;
            }
            self.live.push(i as ActionId);
            match a.pre_pos.iter().find(|p| !self.static_atom[**p as usize]) {
                Some(p) => self.triggered_by[*p as usize].push(i as ActionId),
                None => self.untriggered.push(i as ActionId),
            }
        }
    }

    /// Number of actions that can ever be applicable, judging by static atoms.
    pub fn num_live_actions(&self) -> usize {
        self.live.len()
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

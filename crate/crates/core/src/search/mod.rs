//! Width-based search: IW(k), iterated IW, SIW, SIW_R and tuple graphs.

mod iw;
pub mod novelty;
mod siw;
mod tuple_graph;

use serde::Serialize;
use thiserror::Error;

use crate::statespace::{StateId, StateSpace};
use crate::task::{ActionId, GroundTask, State};

pub use iw::{iterated_iw, iw};
pub use novelty::NoveltyTable;
pub use siw::{siw, siwr, Episode, SiwResult, SiwrConfig};
pub use tuple_graph::{tuple_graph, tuple_graph_bounded, TupleGraph, TupleNode};

/// Successor oracle for search: either a task expanded on the fly or an
/// already expanded state space.
pub trait Transitions {
    type Node: Clone;

    fn state<'b>(&'b self, node: &'b Self::Node) -> &'b State;
    fn successors(&self, node: &Self::Node) -> Vec<(ActionId, Self::Node)>;
    fn static_atoms(&self) -> &[bool];
}

impl Transitions for GroundTask {
    type Node = State;

    fn state<'b>(&'b self, node: &'b State) -> &'b State {
        node
    }

    fn successors(&self, node: &State) -> Vec<(ActionId, State)> {
        GroundTask::successors(self, node)
    }

    fn static_atoms(&self) -> &[bool] {
        &self.static_atom
    }
}

/// Search over the states of an expanded space, identified by index.
pub struct SpaceTransitions<'a> {
    pub task: &'a GroundTask,
    pub space: &'a StateSpace,
}

impl<'a> SpaceTransitions<'a> {
    pub fn new(task: &'a GroundTask, space: &'a StateSpace) -> Self {
        SpaceTransitions { task, space }
    }
}

impl Transitions for SpaceTransitions<'_> {
    type Node = StateId;

    fn state<'b>(&'b self, node: &'b StateId) -> &'b State {
        self.space.state(*node)
    }

    fn successors(&self, node: &StateId) -> Vec<(ActionId, StateId)> {
        self.space.successors(*node).to_vec()
    }

    fn static_atoms(&self) -> &[bool] {
        &self.task.static_atom
    }
}

/// Outcome of one IW or iterated IW run.
#[derive(Debug, Clone)]
pub struct SearchResult<N> {
    /// `None` when the search space was exhausted.
    pub plan: Option<Vec<ActionId>>,
    pub end: Option<N>,
    pub expanded: usize,
    pub generated: usize,
    /// The bound at which the search succeeded.
    pub width: Option<usize>,
}

impl<N> SearchResult<N> {
    fn failure() -> Self {
        SearchResult { plan: None, end: None, expanded: 0, generated: 0, width: None }
    }

    pub fn solved(&self) -> bool {
        self.plan.is_some()
    }

    pub fn plan_len(&self) -> Option<usize> {
        self.plan.as_ref().map(Vec::len)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
pub enum SearchError {
    #[error("episode {episode} found no subgoal from state {state} within width {k_max}")]
    EpisodeFailure { episode: usize, state: String, k_max: usize },
    #[error("more than {limit} episodes without reaching the goal; the sketch is probably cyclic on this instance")]
    CycleGuard { limit: usize },
}

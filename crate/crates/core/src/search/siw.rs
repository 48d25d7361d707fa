//! SIW (goal counting) and SIW_R (sketch subgoals).

use serde::{Deserialize, Serialize};

use crate::dl::Evaluator;
use crate::sketch::Sketch;
use crate::task::{ActionId, GroundTask, State};

use super::{iterated_iw, iw, SearchError, SearchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiwrConfig {
    /// Largest IW bound tried per episode.
    pub k_max: usize,
    /// Run IW(k_max) in each episode instead of iterating from 0.
    pub strict: bool,
    /// Episode limit; defaults to 10 per goal literal, at least 10.
    pub max_episodes: Option<usize>,
}

impl Default for SiwrConfig {
    fn default() -> Self {
        SiwrConfig { k_max: 2, strict: false, max_episodes: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Episode {
    pub width: usize,
    pub length: usize,
    pub expanded: usize,
    pub generated: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SiwResult {
    pub plan: Vec<ActionId>,
    pub episodes: Vec<Episode>,
    pub expanded: usize,
    pub generated: usize,
}

impl SiwResult {
    pub fn max_width(&self) -> usize {
        self.episodes.iter().map(|e| e.width).max().unwrap_or(0)
    }

    pub fn mean_width(&self) -> f64 {
        if self.episodes.is_empty() {
            0.0
        } else {
            self.episodes.iter().map(|e| e.width as f64).sum::<f64>() / self.episodes.len() as f64
        }
    }

    fn push(&mut self, r: SearchResult<State>) -> State {
        let plan = r.plan.expect("episode succeeded");
        self.episodes.push(Episode {
            width: r.width.unwrap_or(0),
            length: plan.len(),
            expanded: r.expanded,
            generated: r.generated,
        });
        self.expanded += r.expanded;
        self.generated += r.generated;
        self.plan.extend(plan);
        r.end.expect("episode succeeded")
    }
}

fn describe(task: &GroundTask, s: &State) -> String {
    let atoms: Vec<String> =
        s.atoms().iter().filter(|a| !task.static_atom[**a as usize]).map(|a| task.atom_text(*a)).collect();
    atoms.join(" ")
}

fn empty_result() -> SiwResult {
    SiwResult { plan: Vec::new(), episodes: Vec::new(), expanded: 0, generated: 0 }
}

/// Serialized IW: each episode searches for a state with fewer unsatisfied
/// goal literals than the episode start.
pub fn siw(task: &GroundTask, k_max: usize) -> Result<SiwResult, SearchError> {
    let mut out = empty_result();
    let mut s = task.init.clone();
    while !task.is_goal(&s) {
        let open = task.unsatisfied_goals(&s);
        let r = iterated_iw(task, s.clone(), k_max, |t| task.unsatisfied_goals(t) < open);
        if !r.solved() {
            return Err(SearchError::EpisodeFailure { episode: out.episodes.len(), state: describe(task, &s), k_max });
        }
        s = out.push(r);
    }
    Ok(out)
}

/// SIW_R: each episode searches from its start state `s` for a goal state or
/// a state `t != s` such that `(f(s), f(t))` satisfies some rule.
pub fn siwr(task: &GroundTask, sketch: &Sketch, config: &SiwrConfig) -> Result<SiwResult, SearchError> {
    let ev = Evaluator::new(task);
    let features = sketch.feature_list();
    let limit = config.max_episodes.unwrap_or_else(|| (10 * task.num_goal_literals()).max(10));
    let mut out = empty_result();
    let mut s = task.init.clone();
    while !task.is_goal(&s) {
        if out.episodes.len() >= limit {
            return Err(SearchError::CycleGuard { limit });
        }
        let f = ev.valuation(&features, &s);
        let test = |t: &State| task.is_goal(t) || (*t != s && sketch.any_rule(&f, &ev.valuation(&features, t)));
        let r = if config.strict {
            iw(task, s.clone(), config.k_max, test)
        } else {
            iterated_iw(task, s.clone(), config.k_max, test)
        };
        if !r.solved() {
            return Err(SearchError::EpisodeFailure {
                episode: out.episodes.len(),
                state: describe(task, &s),
                k_max: config.k_max,
            });
        }
        log::debug!("episode {}: width {:?}, {} steps", out.episodes.len(), r.width, r.plan_len().unwrap_or(0));
        s = out.push(r);
    }
    Ok(out)
}

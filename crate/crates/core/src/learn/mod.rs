//! Sketch learning: ASP-schema facts over expanded training spaces, an
//! exact branch-and-bound solver, ASP emission and the incremental loop.

mod asp;
mod facts;
mod incremental;
mod solver;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dl::DlError;
use crate::statespace::StateSpaceError;

pub use asp::{emit_asp, LISTING};
pub use facts::{build_facts, FeatureFact, InstanceFacts, LearnFacts, PairFact, TupleFact};
pub use incremental::{check_learned, incremental_learn, learn_on, training_facts, AuditEntry, LearnOutcome, TrainingInstance};
pub use solver::{solve, Solution, SolverStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Internal,
    AspEmit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub k: usize,
    pub max_rules: usize,
    pub max_complexity: usize,
    pub include_distance: bool,
    pub max_states: usize,
    pub max_instances: usize,
    /// Largest feature subset the solver enumerates.
    pub max_features: usize,
    pub complexity_weight: usize,
    pub rule_weight: usize,
    /// Enables the literal distance constraint on rule-satisfying pairs.
    pub strict_c6: bool,
    /// Solver budget in seconds.
    pub timeout: Option<f64>,
    pub max_iterations: usize,
    pub backend: Backend,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            k: 1,
            max_rules: 6,
            max_complexity: 8,
            include_distance: false,
            max_states: 10_000,
            max_instances: 200,
            max_features: 4,
            complexity_weight: 1,
            rule_weight: 1,
            strict_c6: false,
            timeout: None,
            max_iterations: 50,
            backend: Backend::Internal,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.k > 2 {
            return Err(LearnError::Config(format!("width bound {} is not supported (0, 1 or 2)", self.k)));
        }
        if self.complexity_weight == 0 && self.rule_weight == 0 {
            return Err(LearnError::Config("objective weights are both zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no sketch with at most {max_rules} rules over the pool: {reason}")]
    Unsatisfiable { max_rules: usize, reason: String },
    #[error("solver budget of {seconds}s exhausted without a solution (objective lower bound {lower_bound})")]
    Timeout { seconds: f64, lower_bound: usize },
    #[error("learned sketch fails verification on `{instance}`: {detail}")]
    PostCondition { instance: String, detail: String },
    #[error("incremental learning did not converge after {0} iterations")]
    NonTermination(usize),
    #[error("no training instances")]
    NoInstances,
    #[error(transparent)]
    Dl(#[from] DlError),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
}

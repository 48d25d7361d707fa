//! Sketches: rules `C -> E` over named features, rule satisfaction between
//! feature valuations, and subgoal sets over expanded state spaces.

mod dsl;

use std::collections::VecDeque;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dl::{DlError, Evaluator, Feature, FeatureKind, Value};
use crate::statespace::{StateId, StateSpace};
use crate::task::{GroundTask, State};

pub use dsl::parse_sketch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Test {
    Pos,
    Neg,
    Eq,
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Change {
    SetTrue,
    SetFalse,
    AnyBool,
    Dec,
    Inc,
    AnyNum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Condition {
    pub feature: usize,
    pub test: Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Effect {
    pub feature: usize,
    pub change: Change,
}

/// A rule; features without an effect must keep their value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NamedFeature {
    pub name: String,
    pub feature: Feature,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Sketch {
    pub features: Vec<NamedFeature>,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SketchError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown feature `{name}`")]
    UnknownFeature { line: usize, name: String },
    #[error("line {line}: `{test}` does not apply to {kind:?} feature `{name}`")]
    TypeMismatch { line: usize, test: String, name: String, kind: FeatureKind },
    #[error("line {line}: feature `{name}` is defined twice")]
    DuplicateFeature { line: usize, name: String },
    #[error("line {line}: feature `{name}` appears twice in one rule side")]
    RepeatedFeature { line: usize, name: String },
    #[error("line {line}: {source}")]
    Feature { line: usize, source: DlError },
    #[error("valuation has {found} values but the sketch has {expected} features")]
    MissingFeature { expected: usize, found: usize },
}

impl Test {
    pub fn holds(self, v: Value) -> bool {
        match self {
            Test::Pos => v == 1,
            Test::Neg | Test::Eq => v == 0,
            Test::Gt => v > 0,
        }
    }

    pub fn kind(self) -> FeatureKind {
        match self {
            Test::Pos | Test::Neg => FeatureKind::Boolean,
            Test::Eq | Test::Gt => FeatureKind::Numerical,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Test::Pos => "pos",
            Test::Neg => "neg",
            Test::Eq => "eq",
            Test::Gt => "gt",
        }
    }
}

impl Change {
    /// Whether the change from `v` to `w` is allowed. Infinity is the top
    /// element, so finite-to-infinite is an increase.
    pub fn holds(self, v: Value, w: Value) -> bool {
        match self {
            Change::SetTrue => w == 1,
            Change::SetFalse => w == 0,
            Change::AnyBool | Change::AnyNum => true,
            Change::Dec => w < v,
            Change::Inc => w > v,
        }
    }

    pub fn kind(self) -> FeatureKind {
        match self {
            Change::SetTrue | Change::SetFalse | Change::AnyBool => FeatureKind::Boolean,
            Change::Dec | Change::Inc | Change::AnyNum => FeatureKind::Numerical,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Change::SetTrue => "pos",
            Change::SetFalse => "neg",
            Change::AnyBool | Change::AnyNum => "unk",
            Change::Dec => "dec",
            Change::Inc => "inc",
        }
    }
}

impl Rule {
    /// The per-feature part of satisfaction for feature `f` with values `v`, `w`.
    pub fn feature_satisfied(&self, f: usize, v: Value, w: Value) -> bool {
        if let Some(c) = self.conditions.iter().find(|c| c.feature == f) {
            if !c.test.holds(v) {
                return false;
            }
        }
        match self.effects.iter().find(|e| e.feature == f) {
            Some(e) => e.change.holds(v, w),
            None => v == w,
        }
    }

    /// Whether the pair of valuations satisfies the rule. Both slices must
    /// cover every feature of the sketch.
    pub fn satisfied(&self, f: &[Value], g: &[Value]) -> bool {
        self.conditions.iter().all(|c| c.test.holds(f[c.feature]))
            && (0..f.len()).all(|i| match self.effects.iter().find(|e| e.feature == i) {
                Some(e) => e.change.holds(f[i], g[i]),
                None => f[i] == g[i],
            })
    }

    fn sort(&mut self) {
        self.conditions.sort();
        self.effects.sort();
    }
}

impl Sketch {
    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_list(&self) -> Vec<Feature> {
        self.features.iter().map(|f| f.feature.clone()).collect()
    }

    /// Sum of feature complexities.
    pub fn complexity(&self) -> usize {
        self.features.iter().map(|f| f.feature.complexity()).sum()
    }

    pub fn max_complexity(&self) -> usize {
        self.features.iter().map(|f| f.feature.complexity()).max().unwrap_or(0)
    }

    pub fn satisfies(&self, rule: usize, f: &[Value], g: &[Value]) -> Result<bool, SketchError> {
        for v in [f, g] {
            if v.len() != self.features.len() {
                return Err(SketchError::MissingFeature { expected: self.features.len(), found: v.len() });
            }
        }
        Ok(self.rules[rule].satisfied(f, g))
    }

    pub fn any_rule(&self, f: &[Value], g: &[Value]) -> bool {
        self.rules.iter().any(|r| r.satisfied(f, g))
    }

    /// Canonical form: conditions and effects sorted by feature.
    pub fn canonical(mut self) -> Sketch {
        for r in &mut self.rules {
            r.sort();
        }
        self
    }

    /// Checks every feature against a task's vocabulary.
    pub fn check(&self, task: &GroundTask) -> Result<(), DlError> {
        let ev = Evaluator::new(task);
        self.features.iter().try_for_each(|f| ev.check(&f.feature))
    }

    /// Feature values of every state of `space`.
    pub fn valuations(&self, task: &GroundTask, space: &StateSpace) -> Valuations {
        let ev = Evaluator::new(task);
        let features = self.feature_list();
        Valuations { values: space.states().par_iter().map(|s| ev.valuation(&features, s)).collect() }
    }

    pub fn valuation(&self, task: &GroundTask, state: &State) -> Vec<Value> {
        Evaluator::new(task).valuation(&self.feature_list(), state)
    }
}

/// Feature values per state of one space.
#[derive(Debug, Clone)]
pub struct Valuations {
    pub values: Vec<Vec<Value>>,
}

impl Valuations {
    pub fn of(&self, s: StateId) -> &[Value] {
        &self.values[s as usize]
    }
}

/// Subgoal queries of one sketch over one expanded space.
pub struct Subgoals<'a> {
    pub sketch: &'a Sketch,
    pub space: &'a StateSpace,
    pub valuations: &'a Valuations,
}

impl<'a> Subgoals<'a> {
    pub fn new(sketch: &'a Sketch, space: &'a StateSpace, valuations: &'a Valuations) -> Self {
        Subgoals { sketch, space, valuations }
    }

    /// Whether `t` belongs to G_R(s): a goal state, or a state other than `s`
    /// whose valuation pair with `s` satisfies some rule.
    pub fn is_subgoal(&self, s: StateId, t: StateId) -> bool {
        self.space.is_goal(t) || (t != s && self.sketch.any_rule(self.valuations.of(s), self.valuations.of(t)))
    }

    /// Rules satisfied by `(s, t)`.
    pub fn rules_between(&self, s: StateId, t: StateId) -> Vec<usize> {
        let (f, g) = (self.valuations.of(s), self.valuations.of(t));
        (0..self.sketch.rules.len()).filter(|r| self.sketch.rules[*r].satisfied(f, g)).collect()
    }

    /// G_R(s) restricted to states reachable from `s`, in BFS order.
    pub fn subgoal_states(&self, s: StateId) -> Vec<StateId> {
        let mut out = Vec::new();
        self.bfs(s, |t, _| {
            if self.is_subgoal(s, t) {
                out.push(t);
            }
            true
        });
        out
    }

    /// Distance to the closest subgoal states and those states (G*_R(s)), or
    /// `None` if no subgoal is reachable.
    pub fn closest_subgoals(&self, s: StateId) -> Option<(u32, Vec<StateId>)> {
        let mut best: Option<u32> = None;
        let mut out = Vec::new();
        self.bfs(s, |t, d| {
            if best.is_some_and(|b| d > b) {
                return false;
            }
            if self.is_subgoal(s, t) {
                best = Some(d);
                out.push(t);
            }
            true
        });
        best.map(|d| (d, out))
    }

    /// Subgoal states within `horizon` steps of `s`, with their distances.
    pub fn subgoals_within(&self, s: StateId, horizon: u32) -> Vec<(StateId, u32)> {
        let mut out = Vec::new();
        self.bfs(s, |t, d| {
            if d > horizon {
                return false;
            }
            if self.is_subgoal(s, t) {
                out.push((t, d));
            }
            true
        });
        out
    }

    /// Breadth-first visit from `s`; stops as soon as `visit` returns false.
    fn bfs(&self, s: StateId, mut visit: impl FnMut(StateId, u32) -> bool) {
        let mut dist = vec![u32::MAX; self.space.len()];
        dist[s as usize] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if !visit(u, dist[u as usize]) {
                return;
            }
            for (_, t) in self.space.successors(u) {
                if dist[*t as usize] == u32::MAX {
                    dist[*t as usize] = dist[u as usize] + 1;
                    queue.push_back(*t);
                }
            }
        }
    }
}

fn side(items: &[String]) -> String {
    if items.is_empty() {
        "{}".to_string()
    } else {
        format!("{{ {} }}", items.join(", "))
    }
}

impl fmt::Display for Sketch {
    /// Writes the sketch in the DSL; parsing the output gives an equal sketch.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for nf in &self.features {
            writeln!(f, "feature {} = {}", nf.name, nf.feature)?;
        }
        if !self.features.is_empty() && !self.rules.is_empty() {
            writeln!(f)?;
        }
        for r in &self.rules {
            let mut r = r.clone();
            r.sort();
            let conds: Vec<String> =
                r.conditions.iter().map(|c| format!("{}({})", c.test.keyword(), self.features[c.feature].name)).collect();
            let effs: Vec<String> =
                r.effects.iter().map(|e| format!("{}({})", e.change.keyword(), self.features[e.feature].name)).collect();
            writeln!(f, "rule {} -> {}", side(&conds), side(&effs))?;
        }
        Ok(())
    }
}

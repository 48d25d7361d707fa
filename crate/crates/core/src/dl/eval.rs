//! Denotations of concepts and roles in a state, and feature values.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashMap;

use super::expr::{Concept, Expr, Feature, Role};
use super::{DlError, Value, INFINITY};
use crate::task::{GroundTask, ObjectId, State};

#[derive(Debug, Clone)]
enum PredRef {
    Predicate { index: usize, arity: usize },
    Type(FixedBitSet),
}

/// True atoms grouped by predicate, for the state and for the goal.
pub struct View<'s> {
    state: Vec<Vec<&'s [ObjectId]>>,
}

/// Evaluates expressions on the states of one task. Type names behave as
/// static unary predicates unless a domain predicate has the same name.
pub struct Evaluator<'a> {
    task: &'a GroundTask,
    n: usize,
    preds: FxHashMap<String, PredRef>,
    goal: Vec<Vec<&'a [ObjectId]>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(task: &'a GroundTask) -> Self {
        let n = task.objects.len();
        let mut preds = FxHashMap::default();
        for (i, p) in task.predicates.iter().enumerate() {
            preds.insert(p.name.clone(), PredRef::Predicate { index: i, arity: p.arity });
        }
        for (i, o) in task.objects.iter().enumerate() {
            for t in &o.types {
                if let PredRef::Type(set) = preds
                    .entry(t.clone())
                    .or_insert_with(|| PredRef::Type(FixedBitSet::with_capacity(n)))
                {
                    set.insert(i);
                }
            }
        }
        let mut goal = vec![Vec::new(); task.predicates.len()];
        for a in &task.goal_pos {
            let atom = &task.atoms[*a as usize];
            goal[atom.predicate as usize].push(atom.args.as_slice());
        }
        Evaluator { task, n, preds, goal }
    }

    pub fn task(&self) -> &'a GroundTask {
        self.task
    }

    pub fn num_objects(&self) -> usize {
        self.n
    }

    pub fn view<'s>(&self, state: &'s State) -> View<'s>
    where
        'a: 's,
    {
        let mut by_pred = vec![Vec::new(); self.task.predicates.len()];
        for a in state.atoms() {
            let atom = &self.task.atoms[*a as usize];
            by_pred[atom.predicate as usize].push(atom.args.as_slice());
        }
        View { state: by_pred }
    }

    /// Checks that every predicate, position and object a feature mentions
    /// exists in this task.
    pub fn check(&self, f: &Feature) -> Result<(), DlError> {
        f.validate()?;
        match f {
            Feature::Nullary { pred, .. } => self.check_pred(pred, 0, None),
            Feature::Empty(Expr::Concept(c)) | Feature::Count(Expr::Concept(c)) => self.check_concept(c),
            Feature::Empty(Expr::Role(r)) | Feature::Count(Expr::Role(r)) => self.check_role(r),
            Feature::Distance(c, r, d) => {
                self.check_concept(c)?;
                self.check_role(r)?;
                self.check_concept(d)
            }
        }
    }

    fn check_pred(&self, pred: &str, min_arity: usize, pos: Option<usize>) -> Result<(), DlError> {
        let arity = match self.preds.get(pred) {
            Some(PredRef::Predicate { arity, .. }) => *arity,
            Some(PredRef::Type(_)) => 1,
            None => return Err(DlError::UnknownPredicate(pred.to_string())),
        };
        let ok = match pos {
            Some(p) => p < arity && arity >= min_arity,
            None => arity == 0,
        };
        if ok {
            Ok(())
        } else {
            Err(DlError::BadPosition { pred: pred.to_string(), arity })
        }
    }

    fn check_concept(&self, c: &Concept) -> Result<(), DlError> {
        match c {
            Concept::Primitive { pred, pos, .. } => self.check_pred(pred, 1, Some(*pos)),
            Concept::OneOf(o) => {
                self.task.object_id(o).ok_or_else(|| DlError::UnknownObject(o.clone()))?;
                Ok(())
            }
            Concept::Top | Concept::Bot => Ok(()),
            Concept::Equal(r, s) => {
                self.check_role(r)?;
                self.check_role(s)
            }
            Concept::And(c, d) => {
                self.check_concept(c)?;
                self.check_concept(d)
            }
            Concept::Not(c) => self.check_concept(c),
            Concept::Some(r, c) | Concept::All(r, c) => {
                self.check_role(r)?;
                self.check_concept(c)
            }
        }
    }

    fn check_role(&self, r: &Role) -> Result<(), DlError> {
        match r {
            Role::Primitive { pred, second, .. } => self.check_pred(pred, 2, Some(*second)),
            Role::Inverse(r) | Role::TransitiveClosure(r) => self.check_role(r),
            Role::Restrict(r, c) => {
                self.check_role(r)?;
                self.check_concept(c)
            }
        }
    }

    fn atoms<'v>(&'v self, view: &'v View<'_>, pred: &str, goal: bool) -> Result<&'v [&'v [ObjectId]], &'v FixedBitSet> {
        match &self.preds[pred] {
            PredRef::Predicate { index, .. } => Ok(if goal { &self.goal[*index] } else { &view.state[*index] }),
            PredRef::Type(set) => Err(set),
        }
    }

    pub fn concept(&self, c: &Concept, view: &View<'_>) -> FixedBitSet {
        let n = self.n;
        match c {
            Concept::Primitive { pred, pos, goal } => match self.atoms(view, pred, *goal) {
                Ok(atoms) => {
                    let mut set = FixedBitSet::with_capacity(n);
                    for args in atoms {
                        set.insert(args[*pos] as usize);
                    }
                    set
                }
                Err(set) => set.clone(),
            },
            Concept::OneOf(o) => {
                let mut set = FixedBitSet::with_capacity(n);
                set.insert(self.task.object_id(o).expect("unchecked object") as usize);
                set
            }
            Concept::Top => {
                let mut set = FixedBitSet::with_capacity(n);
                set.insert_range(..);
                set
            }
            Concept::Bot => FixedBitSet::with_capacity(n),
            Concept::Equal(r, s) => {
                let (r, s) = (self.role(r, view), self.role(s, view));
                let mut set = FixedBitSet::with_capacity(n);
                for a in 0..n {
                    if (0..n).all(|b| r.contains(a * n + b) == s.contains(a * n + b)) {
                        set.insert(a);
                    }
                }
                set
            }
            Concept::And(c, d) => {
                let mut set = self.concept(c, view);
                set.intersect_with(&self.concept(d, view));
                set
            }
            Concept::Not(c) => {
                let mut set = self.concept(c, view);
                set.toggle_range(..);
                set
            }
            Concept::Some(r, c) => {
                let (r, c) = (self.role(r, view), self.concept(c, view));
                let mut set = FixedBitSet::with_capacity(n);
                for a in 0..n {
                    if c.ones().any(|b| r.contains(a * n + b)) {
                        set.insert(a);
                    }
                }
                set
            }
            Concept::All(r, c) => {
                let (r, c) = (self.role(r, view), self.concept(c, view));
                let mut set = FixedBitSet::with_capacity(n);
                for a in 0..n {
                    if (0..n).all(|b| !r.contains(a * n + b) || c.contains(b)) {
                        set.insert(a);
                    }
                }
                set
            }
        }
    }

    /// Role denotation as an `n * n` bitset indexed by `a * n + b`.
    pub fn role(&self, r: &Role, view: &View<'_>) -> FixedBitSet {
        let n = self.n;
        match r {
            Role::Primitive { pred, first, second, goal } => {
                let mut set = FixedBitSet::with_capacity(n * n);
                if let Ok(atoms) = self.atoms(view, pred, *goal) {
                    for args in atoms {
                        set.insert(args[*first] as usize * n + args[*second] as usize);
                    }
                }
                set
            }
            Role::Inverse(r) => {
                let inner = self.role(r, view);
                let mut set = FixedBitSet::with_capacity(n * n);
                for p in inner.ones() {
                    set.insert((p % n) * n + p / n);
                }
                set
            }
            Role::Restrict(r, c) => {
                let mut set = self.role(r, view);
                let c = self.concept(c, view);
                for p in 0..n * n {
                    if set.contains(p) && !c.contains(p % n) {
                        set.set(p, false);
                    }
                }
                set
            }
            Role::TransitiveClosure(r) => {
                let base = self.role(r, view);
                let mut set = FixedBitSet::with_capacity(n * n);
                for a in 0..n {
                    let mut queue: VecDeque<usize> = (0..n).filter(|b| base.contains(a * n + b)).collect();
                    for b in &queue {
                        set.insert(a * n + b);
                    }
                    while let Some(b) = queue.pop_front() {
                        for c in 0..n {
                            if base.contains(b * n + c) && !set.contains(a * n + c) {
                                set.insert(a * n + c);
                                queue.push_back(c);
                            }
                        }
                    }
                }
                set
            }
        }
    }

    pub fn feature_in(&self, f: &Feature, view: &View<'_>) -> Value {
        match f {
            Feature::Nullary { pred, goal } => match self.atoms(view, pred, *goal) {
                Ok(atoms) => (!atoms.is_empty()) as Value,
                Err(_) => 0,
            },
            Feature::Empty(Expr::Concept(c)) => self.concept(c, view).is_clear() as Value,
            Feature::Empty(Expr::Role(r)) => self.role(r, view).is_clear() as Value,
            Feature::Count(Expr::Concept(c)) => self.concept(c, view).count_ones(..) as Value,
            Feature::Count(Expr::Role(r)) => self.role(r, view).count_ones(..) as Value,
            Feature::Distance(c, r, d) => {
                let (c, r, d) = (self.concept(c, view), self.role(r, view), self.concept(d, view));
                distance(self.n, &c, &d, |a, b| r.contains(a * self.n + b))
            }
        }
    }

    pub fn feature(&self, f: &Feature, state: &State) -> Value {
        self.feature_in(f, &self.view(state))
    }

    /// Values of all `features` in `state`.
    pub fn valuation(&self, features: &[Feature], state: &State) -> Vec<Value> {
        let view = self.view(state);
        features.iter().map(|f| self.feature_in(f, &view)).collect()
    }
}

/// Length of a shortest `edge`-chain from a member of `from` to a member of
/// `to`, or [`INFINITY`].
pub(crate) fn distance(n: usize, from: &FixedBitSet, to: &FixedBitSet, edge: impl Fn(usize, usize) -> bool) -> Value {
    let mut dist = vec![INFINITY; n];
    let mut queue = VecDeque::new();
    for a in from.ones() {
        if to.contains(a) {
            return 0;
        }
        dist[a] = 0;
        queue.push_back(a);
    }
    while let Some(a) = queue.pop_front() {
        for b in 0..n {
            if dist[b] == INFINITY && edge(a, b) {
                if to.contains(b) {
                    return dist[a] + 1;
                }
                dist[b] = dist[a] + 1;
                queue.push_back(b);
            }
        }
    }
    INFINITY
}

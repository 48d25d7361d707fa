//! Bounded feature-pool generation with equivalence pruning over sample states.
//!
//! Denotations are computed bottom-up over all sample states at once: a
//! concept is one `u64` object mask per state and a role is one mask per
//! object per state, so sample instances are limited to 64 objects.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::Serialize;

use super::expr::{Concept, Expr, Feature, FeatureKind, Role, MAX_DISTANCE_ROLE_COMPLEXITY};
use super::{DlError, Value, INFINITY};
use crate::task::{GroundTask, State};

pub const MAX_SAMPLE_OBJECTS: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct PoolConfig {
    pub max_complexity: usize,
    pub include_distance: bool,
    /// Hard cap on generated candidates (concepts, roles and features) before pruning.
    pub max_candidates: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig { max_complexity: 8, include_distance: false, max_candidates: 200_000 }
    }
}

/// States of one instance used to tell features apart.
#[derive(Clone, Copy)]
pub struct Sample<'a> {
    pub task: &'a GroundTask,
    pub states: &'a [State],
}

#[derive(Debug, Clone, Serialize)]
pub struct PoolFeature {
    pub feature: Feature,
    pub text: String,
    pub complexity: usize,
    pub kind: FeatureKind,
}

/// Features ordered by (complexity, text) with their values on every sample state.
#[derive(Debug, Clone)]
pub struct FeaturePool {
    pub features: Vec<PoolFeature>,
    values: Vec<Vec<Value>>,
    offsets: Vec<usize>,
}

impl FeaturePool {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Value of feature `f` on state `state` of sample `sample`.
    pub fn value(&self, f: usize, sample: usize, state: usize) -> Value {
        self.values[f][self.offsets[sample] + state]
    }

    /// Values of feature `f` on the states of sample `sample`.
    pub fn sample_values(&self, f: usize, sample: usize) -> &[Value] {
        &self.values[f][self.offsets[sample]..self.offsets[sample + 1]]
    }

    /// Values of feature `f` over all sample states, samples concatenated.
    pub fn values(&self, f: usize) -> &[Value] {
        &self.values[f]
    }

    pub fn find(&self, text: &str) -> Option<usize> {
        self.features.iter().position(|f| f.text == text)
    }

    pub fn num_samples(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Per-state layout of the concatenated sample states.
struct Layout {
    /// Object count of each global state.
    n: Vec<usize>,
    /// First role row of each global state.
    row: Vec<usize>,
    rows: usize,
}

impl Layout {
    fn full(&self, g: usize) -> u64 {
        if self.n[g] == 64 {
            u64::MAX
        } else {
            (1u64 << self.n[g]) - 1
        }
    }
}

/// How a candidate is built from already admitted entries (by index).
#[derive(Clone, Copy)]
enum Op {
    Not(usize),
    And(usize, usize),
    Some(usize, usize),
    All(usize, usize),
    Equal(usize, usize),
}

type ConceptSig = Vec<u64>;
type RoleSig = Vec<u64>;

struct Entry<E> {
    expr: E,
    text: String,
    complexity: usize,
    sig: Vec<u64>,
}

struct Vocabulary {
    /// (name, arity) of domain predicates, then types as unary predicates.
    preds: Vec<(String, usize)>,
    goal_preds: Vec<String>,
    constants: Vec<String>,
    types: Vec<String>,
}

fn vocabulary(samples: &[Sample<'_>]) -> Vocabulary {
    let task = samples[0].task;
    let preds: Vec<(String, usize)> = task.predicates.iter().map(|p| (p.name.clone(), p.arity)).collect();
    let mut goal_preds: Vec<String> = samples
        .iter()
        .flat_map(|s| s.task.goal_pos.iter().map(|a| s.task.predicates[s.task.atoms[*a as usize].predicate as usize].name.clone()))
        .collect();
    goal_preds.sort();
    goal_preds.dedup();
    let mut constants: Vec<String> = task.objects.iter().filter(|o| o.is_constant).map(|o| o.name.clone()).collect();
    constants.sort();
    let mut types: Vec<String> = samples
        .iter()
        .flat_map(|s| s.task.objects.iter().flat_map(|o| o.types.iter().cloned()))
        .filter(|t| !preds.iter().any(|(p, _)| p == t))
        .collect();
    types.sort();
    types.dedup();
    Vocabulary { preds, goal_preds, constants, types }
}

struct Generator<'a> {
    samples: &'a [Sample<'a>],
    layout: Layout,
    config: &'a PoolConfig,
    candidates: AtomicUsize,
}

impl Generator<'_> {
    fn states(&self) -> impl Iterator<Item = (usize, &GroundTask, &State)> {
        self.samples
            .iter()
            .flat_map(|s| s.states.iter().map(move |st| (s.task, st)))
            .enumerate()
            .map(|(g, (t, s))| (g, t, s))
    }

    fn count(&self, n: usize) -> Result<(), DlError> {
        let total = self.candidates.fetch_add(n, Ordering::Relaxed) + n;
        if total > self.config.max_candidates {
            return Err(DlError::PoolExplosion(self.config.max_candidates));
        }
        Ok(())
    }

    fn primitive_concept(&self, pred: &str, pos: usize, goal: bool) -> ConceptSig {
        self.states()
            .map(|(_, task, state)| {
                let mut mask = 0u64;
                let atoms: &[u32] = if goal { &task.goal_pos } else { state.atoms() };
                for a in atoms {
                    let atom = &task.atoms[*a as usize];
                    if task.predicates[atom.predicate as usize].name == pred {
                        mask |= 1 << atom.args[pos];
                    }
                }
                mask
            })
            .collect()
    }

    fn type_concept(&self, ty: &str) -> ConceptSig {
        self.states()
            .map(|(_, task, _)| {
                let mut mask = 0u64;
                for (i, o) in task.objects.iter().enumerate() {
                    if o.types.iter().any(|t| t == ty) {
                        mask |= 1 << i;
                    }
                }
                mask
            })
            .collect()
    }

    fn primitive_role(&self, pred: &str, i: usize, j: usize, goal: bool) -> RoleSig {
        let mut sig = vec![0u64; self.layout.rows];
        for (g, task, state) in self.states() {
            let atoms: &[u32] = if goal { &task.goal_pos } else { state.atoms() };
            for a in atoms {
                let atom = &task.atoms[*a as usize];
                if task.predicates[atom.predicate as usize].name == pred {
                    sig[self.layout.row[g] + atom.args[i] as usize] |= 1 << atom.args[j];
                }
            }
        }
        sig
    }

    fn concept_sig(&self, op: &Op, all_c: &[Entry<Concept>], all_r: &[Entry<Role>]) -> ConceptSig {
        let lay = &self.layout;
        let csig = |x: &usize| &all_c[*x].sig;
        let rsig = |x: &usize| &all_r[*x].sig;
        match op {
            Op::Not(x) => csig(x).iter().enumerate().map(|(g, m)| !m & lay.full(g)).collect(),
            Op::And(x, y) => csig(x).iter().zip(csig(y)).map(|(a, b)| a & b).collect(),
            Op::Some(r, x) => {
                let (r, x) = (rsig(r), csig(x));
                (0..lay.n.len())
                    .map(|g| {
                        let mut m = 0u64;
                        for a in 0..lay.n[g] {
                            if r[lay.row[g] + a] & x[g] != 0 {
                                m |= 1 << a;
                            }
                        }
                        m
                    })
                    .collect()
            }
            Op::All(r, x) => {
                let (r, x) = (rsig(r), csig(x));
                (0..lay.n.len())
                    .map(|g| {
                        let mut m = 0u64;
                        for a in 0..lay.n[g] {
                            if r[lay.row[g] + a] & !x[g] == 0 {
                                m |= 1 << a;
                            }
                        }
                        m
                    })
                    .collect()
            }
            Op::Equal(r, s) => {
                let (r, s) = (rsig(r), rsig(s));
                (0..lay.n.len())
                    .map(|g| {
                        let mut m = 0u64;
                        for a in 0..lay.n[g] {
                            if r[lay.row[g] + a] == s[lay.row[g] + a] {
                                m |= 1 << a;
                            }
                        }
                        m
                    })
                    .collect()
            }
        }
    }

    fn derived_role_sig(&self, r: &Role, base: &RoleSig, concept: Option<&ConceptSig>) -> RoleSig {
        let lay = &self.layout;
        let mut sig = vec![0u64; lay.rows];
        for g in 0..lay.n.len() {
            let (n, off) = (lay.n[g], lay.row[g]);
            let rows = &base[off..off + n];
            let out = &mut sig[off..off + n];
            match r {
                Role::Inverse(_) => {
                    for (a, row) in rows.iter().enumerate() {
                        for b in ones(*row) {
                            out[b] |= 1 << a;
                        }
                    }
                }
                Role::Restrict(..) => {
                    let c = concept.expect("restriction concept")[g];
                    for a in 0..n {
                        out[a] = rows[a] & c;
                    }
                }
                Role::TransitiveClosure(_) => {
                    out.copy_from_slice(rows);
                    for k in 0..n {
                        for a in 0..n {
                            if out[a] >> k & 1 == 1 {
                                out[a] |= out[k];
                            }
                        }
                    }
                }
                Role::Primitive { .. } => unreachable!(),
            }
        }
        sig
    }
}

fn ones(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

/// Adds the candidates of one complexity level in text order, keeping only
/// those whose denotation has not been seen before.
fn admit<E, D>(
    level: Vec<(E, String, D)>,
    complexity: usize,
    seen: &mut FxHashSet<Vec<u64>>,
    out: &mut Vec<Entry<E>>,
    sig: impl Fn(&E, &D) -> Vec<u64> + Sync,
) where
    E: Send + Sync,
    D: Send + Sync,
{
    let mut level = level;
    level.sort_by(|a, b| a.1.cmp(&b.1));
    let mut it = level.into_iter().peekable();
    while it.peek().is_some() {
        let chunk: Vec<(E, String, D)> = it.by_ref().take(2048).collect();
        let sigs: Vec<Vec<u64>> = chunk.par_iter().map(|(e, _, d)| sig(e, d)).collect();
        for ((expr, text, _), s) in chunk.into_iter().zip(sigs) {
            if seen.insert(s.clone()) {
                out.push(Entry { expr, text, complexity, sig: s });
            }
        }
    }
}

/// Generates every grammar-legal feature up to `config.max_complexity`,
/// keeping one feature per (kind, valuation vector) over the sample states.
pub fn generate_pool(samples: &[Sample<'_>], config: &PoolConfig) -> Result<FeaturePool, DlError> {
    if samples.is_empty() || samples.iter().all(|s| s.states.is_empty()) {
        return Err(DlError::NoSamples);
    }
    for s in samples {
        if s.task.objects.len() > MAX_SAMPLE_OBJECTS {
            return Err(DlError::TooManyObjects { problem: s.task.problem_name.clone(), count: s.task.objects.len() });
        }
    }
    let mut n = Vec::new();
    let mut row = Vec::new();
    let mut rows = 0;
    for s in samples {
        for _ in s.states {
            n.push(s.task.objects.len());
            row.push(rows);
            rows += s.task.objects.len();
        }
    }
    let mut offsets = vec![0];
    for s in samples {
        offsets.push(offsets.last().unwrap() + s.states.len());
    }
    let gen = Generator { samples, layout: Layout { n, row, rows }, config, candidates: Default::default() };
    let vocab = vocabulary(samples);
    let max_c = config.max_complexity;

    // Roles: primitives, then inverse/closure, then restriction.
    let mut roles: Vec<Entry<Role>> = Vec::new();
    let mut role_seen = FxHashSet::default();
    let mut level = Vec::new();
    for (p, arity) in &vocab.preds {
        for goal in [false, true] {
            if goal && !vocab.goal_preds.contains(p) {
                continue;
            }
            for i in 0..*arity {
                for j in i + 1..*arity {
                    let r = Role::Primitive { pred: p.clone(), first: i, second: j, goal };
                    let t = r.to_string();
                    level.push((r, t, ()));
                }
            }
        }
    }
    gen.count(level.len())?;
    admit(level, 1, &mut role_seen, &mut roles, |r, _| match r {
        Role::Primitive { pred, first, second, goal } => gen.primitive_role(pred, *first, *second, *goal),
        _ => unreachable!(),
    });

    // Concepts of complexity 1.
    let mut concepts: Vec<Entry<Concept>> = Vec::new();
    let mut concept_seen = FxHashSet::default();
    let mut level = Vec::new();
    for (p, arity) in &vocab.preds {
        for goal in [false, true] {
            if goal && !vocab.goal_preds.contains(p) {
                continue;
            }
            for i in 0..*arity {
                let c = Concept::Primitive { pred: p.clone(), pos: i, goal };
                let t = c.to_string();
                level.push((c, t, ()));
            }
        }
    }
    for t in &vocab.types {
        let c = Concept::primitive(t, 0);
        let text = c.to_string();
        level.push((c, text, ()));
    }
    for o in &vocab.constants {
        let c = Concept::OneOf(o.clone());
        let text = c.to_string();
        level.push((c, text, ()));
    }
    level.push((Concept::Bot, Concept::Bot.to_string(), ()));
    level.push((Concept::Top, Concept::Top.to_string(), ()));
    gen.count(level.len())?;
    admit(level, 1, &mut concept_seen, &mut concepts, |c, _| match c {
        Concept::Primitive { pred, pos, goal } => {
            if vocab.types.contains(pred) {
                gen.type_concept(pred)
            } else {
                gen.primitive_concept(pred, *pos, *goal)
            }
        }
        Concept::OneOf(o) => gen.states().map(|(_, task, _)| task.object_id(o).map_or(0, |i| 1u64 << i)).collect(),
        Concept::Top => (0..gen.layout.n.len()).map(|g| gen.layout.full(g)).collect(),
        Concept::Bot => vec![0; gen.layout.n.len()],
        _ => unreachable!(),
    });
    let primitive_concepts = concepts.len();
    let primitive_roles = roles.len();

    let mut level = Vec::new();
    for (r, role) in roles.iter().enumerate().take(primitive_roles) {
        for wrap in [Role::inverse as fn(Role) -> Role, Role::closure] {
            let e = wrap(role.expr.clone());
            let t = e.to_string();
            level.push((e, t, r));
        }
    }
    gen.count(level.len())?;
    let mut new_roles = Vec::new();
    admit(level, 2, &mut role_seen, &mut new_roles, |r, base| gen.derived_role_sig(r, &roles[*base].sig, None));
    roles.extend(new_roles);
    if max_c >= 4 {
        let mut level = Vec::new();
        for (r, role) in roles.iter().enumerate().take(primitive_roles) {
            for (c, concept) in concepts.iter().enumerate().take(primitive_concepts) {
                let e = role.expr.clone().restrict(concept.expr.clone());
                let t = e.to_string();
                level.push((e, t, (r, c)));
            }
        }
        gen.count(level.len())?;
        let mut new_roles = Vec::new();
        admit(level, 3, &mut role_seen, &mut new_roles, |r, (base, c)| {
            gen.derived_role_sig(r, &roles[*base].sig, Some(&concepts[*c].sig))
        });
        roles.extend(new_roles);
    }

    // Composite concepts, one complexity level at a time.
    for c in 2..max_c {
        let by_c = |k: usize| concepts.iter().enumerate().filter(move |(_, e)| e.complexity == k).map(|(i, _)| i);
        let roles_of = |k: usize| roles.iter().enumerate().filter(move |(_, e)| e.complexity == k).map(|(i, _)| i);
        let mut level: Vec<(Concept, String, Op)> = Vec::new();
        for i in by_c(c - 1) {
            let e = concepts[i].expr.clone().negate();
            let t = format!("c_not({})", concepts[i].text);
            level.push((e, t, Op::Not(i)));
        }
        for a in 1..c - 1 {
            let b = c - 1 - a;
            if a > b {
                break;
            }
            for i in by_c(a) {
                for j in by_c(b) {
                    if a == b && j <= i {
                        continue;
                    }
                    let e = concepts[i].expr.clone().and(concepts[j].expr.clone());
                    let t = format!("c_and({},{})", concepts[i].text, concepts[j].text);
                    level.push((e, t, Op::And(i, j)));
                }
            }
        }
        for rc in 1..c - 1 {
            for r in roles_of(rc) {
                for i in by_c(c - 1 - rc) {
                    let (re, ce) = (roles[r].expr.clone(), concepts[i].expr.clone());
                    let some = format!("c_some({},{})", roles[r].text, concepts[i].text);
                    let all = format!("c_all({},{})", roles[r].text, concepts[i].text);
                    level.push((Concept::some(re.clone(), ce.clone()), some, Op::Some(r, i)));
                    level.push((Concept::all(re, ce), all, Op::All(r, i)));
                }
            }
        }
        for a in 1..c - 1 {
            let b = c - 1 - a;
            if a > b {
                break;
            }
            for r in roles_of(a) {
                for s in roles_of(b) {
                    if a == b && s <= r {
                        continue;
                    }
                    let e = Concept::equal(roles[r].expr.clone(), roles[s].expr.clone());
                    let t = format!("c_equal({},{})", roles[r].text, roles[s].text);
                    level.push((e, t, Op::Equal(r, s)));
                }
            }
        }
        gen.count(level.len())?;
        let mut new_concepts = Vec::new();
        admit(level, c, &mut concept_seen, &mut new_concepts, |_, op| gen.concept_sig(op, &concepts, &roles));
        log::debug!("complexity {c}: {} new concepts", new_concepts.len());
        concepts.extend(new_concepts);
    }

    // Features.
    let lay = &gen.layout;
    let total = lay.n.len();
    let mut cands: Vec<(Feature, String, usize, Vec<Value>)> = Vec::new();
    for (p, arity) in &vocab.preds {
        if *arity == 0 {
            let values = gen
                .states()
                .map(|(_, task, state)| {
                    state.atoms().iter().any(|a| task.predicates[task.atoms[*a as usize].predicate as usize].name == *p)
                        as Value
                })
                .collect();
            let f = Feature::Nullary { pred: p.clone(), goal: false };
            cands.push((f.clone(), f.to_string(), 1, values));
        }
    }
    let concept_values = |sig: &[u64]| -> (Vec<Value>, Vec<Value>) {
        (sig.iter().map(|m| (*m == 0) as Value).collect(), sig.iter().map(|m| m.count_ones()).collect())
    };
    let role_values = |sig: &[u64]| -> (Vec<Value>, Vec<Value>) {
        let counts: Vec<Value> =
            (0..total).map(|g| sig[lay.row[g]..lay.row[g] + lay.n[g]].iter().map(|m| m.count_ones()).sum()).collect();
        (counts.iter().map(|c| (*c == 0) as Value).collect(), counts)
    };
    for e in concepts.iter().filter(|e| e.complexity < max_c) {
        let (empty, count) = concept_values(&e.sig);
        cands.push((Feature::Empty(Expr::Concept(e.expr.clone())), format!("b_empty({})", e.text), e.complexity + 1, empty));
        cands.push((Feature::Count(Expr::Concept(e.expr.clone())), format!("n_count({})", e.text), e.complexity + 1, count));
    }
    for e in roles.iter().filter(|e| e.complexity < max_c) {
        let (empty, count) = role_values(&e.sig);
        cands.push((Feature::Empty(Expr::Role(e.expr.clone())), format!("b_empty({})", e.text), e.complexity + 1, empty));
        cands.push((Feature::Count(Expr::Role(e.expr.clone())), format!("n_count({})", e.text), e.complexity + 1, count));
    }
    gen.count(cands.len())?;
    if config.include_distance {
        let mut triples = Vec::new();
        for r in roles.iter().filter(|r| r.complexity <= MAX_DISTANCE_ROLE_COMPLEXITY) {
            for c in concepts.iter() {
                for d in concepts.iter() {
                    if 1 + r.complexity + c.complexity + d.complexity <= max_c {
                        triples.push((c, r, d));
                    }
                }
            }
        }
        gen.count(triples.len())?;
        let dist: Vec<_> = triples
            .par_iter()
            .map(|(c, r, d)| {
                let values: Vec<Value> = (0..total)
                    .map(|g| {
                        let rows = &r.sig[lay.row[g]..lay.row[g] + lay.n[g]];
                        mask_distance(rows, c.sig[g], d.sig[g])
                    })
                    .collect();
                let f = Feature::Distance(c.expr.clone(), r.expr.clone(), d.expr.clone());
                let text = format!("n_distance({},{},{})", c.text, r.text, d.text);
                (f, text, 1 + r.complexity + c.complexity + d.complexity, values)
            })
            .collect();
        cands.extend(dist);
    }
    cands.sort_by(|a, b| (a.2, &a.1).cmp(&(b.2, &b.1)));
    let mut seen: FxHashSet<(FeatureKind, Vec<Value>)> = FxHashSet::default();
    let mut features = Vec::new();
    let mut values = Vec::new();
    for (f, text, complexity, vals) in cands {
        let kind = f.kind();
        if seen.insert((kind, vals.clone())) {
            features.push(PoolFeature { feature: f, text, complexity, kind });
            values.push(vals);
        }
    }
    log::info!(
        "feature pool: {} features from {} concepts, {} roles, {} candidates",
        features.len(),
        concepts.len(),
        roles.len(),
        gen.candidates.load(Ordering::Relaxed)
    );
    Ok(FeaturePool { features, values, offsets })
}

fn mask_distance(rows: &[u64], from: u64, to: u64) -> Value {
    if from & to != 0 {
        return 0;
    }
    let mut reached = from;
    let mut frontier = from;
    let mut d = 0;
    while frontier != 0 {
        d += 1;
        let mut next = 0u64;
        for a in ones(frontier) {
            next |= rows[a];
        }
        next &= !reached;
        if next & to != 0 {
            return d;
        }
        reached |= next;
        frontier = next;
    }
    INFINITY
}

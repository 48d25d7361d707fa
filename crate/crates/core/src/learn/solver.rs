//! Exact solver for the learning theory.
//!
//! Feature subsets are enumerated by increasing total complexity. For a fixed
//! subset every `s_distance` pair falls into a profile: per feature, the class
//! of its value change (Boolean `(v, w)`, or numerical zero/positive start
//! with decrease/equal/increase). A rule accepts a box of profiles, so rule
//! sets are searched as sets of distinct box signatures over the observed
//! profiles, pruned by acyclicity and by subgoal coverage.

use std::sync::OnceLock;
use std::time::Instant;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::dl::{FeatureKind, FeaturePool, Value};
use crate::sketch::{Change, Condition, Effect, NamedFeature, Rule, Sketch, Test};

use super::{LearnConfig, LearnError, LearnFacts};

const BOOL_CLASSES: u32 = 4;
const NUM_CLASSES: u32 = 5;
const CHOICES: usize = 12;
const CHUNK: usize = 64;

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolverStats {
    pub subsets: usize,
    pub nodes: usize,
    /// Wall-clock time; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub sketch: Sketch,
    /// Pool indices of the selected features, in sketch order.
    pub features: Vec<usize>,
    pub objective: usize,
    /// False when the budget ran out before optimality was proved.
    pub optimal: bool,
    /// Proved lower bound on the optimum.
    pub lower_bound: usize,
    pub stats: SolverStats,
}

fn class(kind: FeatureKind, v: Value, w: Value) -> u8 {
    match kind {
        FeatureKind::Boolean => (v.min(1) * 2 + w.min(1)) as u8,
        FeatureKind::Numerical => match (v == 0, w.cmp(&v)) {
            (true, std::cmp::Ordering::Equal) => 0,
            (true, _) => 1,
            (false, std::cmp::Ordering::Less) => 2,
            (false, std::cmp::Ordering::Equal) => 3,
            (false, std::cmp::Ordering::Greater) => 4,
        },
    }
}

/// Classes accepted by choice `cond * 4 + eff`. Conditions: unk, pos|eq,
/// neg|gt. Effects: bot, unk, pos|dec, neg|inc.
fn choice_mask(kind: FeatureKind, choice: usize) -> u8 {
    let (cond, eff) = (choice / 4, choice % 4);
    match kind {
        FeatureKind::Boolean => [0b1111, 0b1100, 0b0011][cond] & [0b1001, 0b1111, 0b1010, 0b0101][eff],
        FeatureKind::Numerical => [0b11111, 0b00011, 0b11100][cond] & [0b01001, 0b11111, 0b00100, 0b10010][eff],
    }
}

fn mentions(choice: usize) -> usize {
    usize::from(choice / 4 != 0) + usize::from(!choice.is_multiple_of(4))
}

fn rule_of(choices: &[usize], kinds: &[FeatureKind]) -> Rule {
    let mut rule = Rule::default();
    for (f, (&c, &kind)) in choices.iter().zip(kinds).enumerate() {
        let boolean = kind == FeatureKind::Boolean;
        let test = match c / 4 {
            1 if boolean => Some(Test::Pos),
            2 if boolean => Some(Test::Neg),
            1 => Some(Test::Eq),
            2 => Some(Test::Gt),
            _ => None,
        };
        let change = match c % 4 {
            1 if boolean => Some(Change::AnyBool),
            2 if boolean => Some(Change::SetTrue),
            3 if boolean => Some(Change::SetFalse),
            1 => Some(Change::AnyNum),
            2 => Some(Change::Dec),
            3 => Some(Change::Inc),
            _ => None,
        };
        if let Some(test) = test {
            rule.conditions.push(Condition { feature: f, test });
        }
        if let Some(change) = change {
            rule.effects.push(Effect { feature: f, change });
        }
    }
    rule
}

struct Pair {
    inst: usize,
    from: u32,
    to: u32,
    /// Global node ids for the acyclicity check.
    from_g: u32,
    to_g: u32,
    to_solvable: bool,
}

/// Pair indices an option needs accepted and must keep rejected.
struct SubgoalOption {
    need: Vec<u32>,
    forb: Vec<u32>,
}

struct Problem<'a> {
    facts: &'a LearnFacts,
    pairs: Vec<Pair>,
    /// Options per alive state over all instances.
    options: Vec<Vec<SubgoalOption>>,
    nodes: usize,
    classes: Vec<OnceLock<Vec<u8>>>,
}

impl<'a> Problem<'a> {
    fn new(facts: &'a LearnFacts, strict_c6: bool) -> Self {
        let mut pairs = Vec::new();
        let mut options = Vec::new();
        let mut offset = 0u32;
        for (i, inst) in facts.instances.iter().enumerate() {
            let mut by_source: FxHashMap<u32, FxHashMap<u32, u32>> = FxHashMap::default();
            for p in &inst.pairs {
                by_source.entry(p.from).or_default().insert(p.to, pairs.len() as u32);
                pairs.push(Pair {
                    inst: i,
                    from: p.from,
                    to: p.to,
                    from_g: offset + p.from,
                    to_g: offset + p.to,
                    to_solvable: inst.solvable[p.to as usize],
                });
            }
            for (s, tuples) in inst.alive.iter().zip(&inst.tuples) {
                let empty = FxHashMap::default();
                let index = by_source.get(s).unwrap_or(&empty);
                let own: Vec<(u32, u32)> = inst
                    .pairs
                    .iter()
                    .filter(|p| p.from == *s)
                    .map(|p| (p.distance, index[&p.to]))
                    .collect();
                let mut opts: Vec<SubgoalOption> = Vec::new();
                for t in tuples {
                    let mut need: Vec<u32> = t.contain.iter().map(|x| index[x]).collect();
                    need.sort_unstable();
                    let mut forb: Vec<u32> = own
                        .iter()
                        .filter(|(d, p)| {
                            let dead = !pairs[*p as usize].to_solvable;
                            (dead && *d <= t.distance) || (strict_c6 && *d < t.distance)
                        })
                        .map(|(_, p)| *p)
                        .collect();
                    forb.sort_unstable();
                    if !opts.iter().any(|o| o.need == need && o.forb == forb) {
                        opts.push(SubgoalOption { need, forb });
                    }
                }
                options.push(opts);
            }
            offset += inst.num_states as u32;
        }
        let classes = (0..facts.features.len()).map(|_| OnceLock::new()).collect();
        Problem { facts, pairs, options, nodes: offset as usize, classes }
    }

    fn classes(&self, f: usize) -> &[u8] {
        self.classes[f].get_or_init(|| {
            let kind = self.facts.features[f].kind;
            self.pairs
                .iter()
                .map(|p| {
                    let vals = &self.facts.instances[p.inst].valuations[f];
                    class(kind, vals[p.from as usize], vals[p.to as usize])
                })
                .collect()
        })
    }
}

/// Data of one feature subset over its observed profiles.
struct Subset {
    /// Observed profiles accepted by each candidate rule, with the rule's choices.
    candidates: Vec<(FixedBitSet, Vec<usize>)>,
    /// Edges between solvable states per profile.
    edges: Vec<Vec<(u32, u32)>>,
    options: Vec<Vec<(FixedBitSet, FixedBitSet)>>,
    nodes: usize,
}

fn bits(n: usize, items: impl IntoIterator<Item = usize>) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(n);
    for i in items {
        b.insert(i);
    }
    b
}

fn disjoint(a: &FixedBitSet, b: &FixedBitSet) -> bool {
    a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x & y == 0)
}

fn union(a: &FixedBitSet, b: &FixedBitSet) -> FixedBitSet {
    let mut u = a.clone();
    u.union_with(b);
    u
}

impl Subset {
    fn new(problem: &Problem, fs: &[usize]) -> Subset {
        let kinds: Vec<FeatureKind> = fs.iter().map(|f| problem.facts.features[*f].kind).collect();
        let radix: Vec<u32> =
            kinds.iter().map(|k| if *k == FeatureKind::Boolean { BOOL_CLASSES } else { NUM_CLASSES }).collect();
        let classes: Vec<&[u8]> = fs.iter().map(|f| problem.classes(*f)).collect();
        let total: u32 = radix.iter().product();
        let mut dense = vec![u32::MAX; total as usize];
        let mut profiles: Vec<Vec<u8>> = Vec::new();
        let mut pair_profile = Vec::with_capacity(problem.pairs.len());
        for p in 0..problem.pairs.len() {
            let mut code = 0u32;
            for (c, r) in classes.iter().zip(&radix) {
                code = code * r + c[p] as u32;
            }
            if dense[code as usize] == u32::MAX {
                dense[code as usize] = profiles.len() as u32;
                profiles.push(classes.iter().map(|c| c[p]).collect());
            }
            pair_profile.push(dense[code as usize] as usize);
        }
        let n = profiles.len();

        let mut edges = vec![Vec::new(); n];
        for (p, pair) in problem.pairs.iter().enumerate() {
            if pair.to_solvable {
                edges[pair_profile[p]].push((pair.from_g, pair.to_g));
            }
        }
        let options = problem
            .options
            .iter()
            .map(|opts| {
                let mut out: Vec<(FixedBitSet, FixedBitSet)> = Vec::new();
                for o in opts {
                    let need = bits(n, o.need.iter().map(|p| pair_profile[*p as usize]));
                    let forb = bits(n, o.forb.iter().map(|p| pair_profile[*p as usize]));
                    if disjoint(&need, &forb) && !out.iter().any(|(a, b)| *a == need && *b == forb) {
                        out.push((need, forb));
                    }
                }
                out
            })
            .collect();

        // Accepted profiles per (feature, choice).
        let per_choice: Vec<Vec<FixedBitSet>> = (0..fs.len())
            .map(|i| {
                (0..CHOICES)
                    .map(|c| {
                        let mask = choice_mask(kinds[i], c);
                        bits(n, (0..n).filter(|q| mask >> profiles[*q][i] & 1 == 1))
                    })
                    .collect()
            })
            .collect();
        let mut boxes: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..fs.len() {
            boxes = boxes.into_iter().flat_map(|b| (0..CHOICES).map(move |c| [b.clone(), vec![c]].concat())).collect();
        }
        boxes.sort_by_key(|b| (b.iter().map(|c| mentions(*c)).sum::<usize>(), b.clone()));
        let mut seen: FxHashMap<FixedBitSet, ()> = FxHashMap::default();
        let mut subset = Subset { candidates: Vec::new(), edges, options, nodes: problem.nodes };
        for b in boxes {
            let mut sig = bits(n, 0..n);
            for (i, c) in b.iter().enumerate() {
                sig.intersect_with(&per_choice[i][*c]);
            }
            if sig.count_ones(..) == 0 || seen.contains_key(&sig) {
                continue;
            }
            seen.insert(sig.clone(), ());
            if !subset.cyclic(&sig) {
                subset.candidates.push((sig, b));
            }
        }
        subset
    }

    /// Whether the edges of the accepted profiles contain a cycle.
    fn cyclic(&self, accepted: &FixedBitSet) -> bool {
        let mut indeg: FxHashMap<u32, u32> = FxHashMap::default();
        let mut adj: FxHashMap<u32, Vec<u32>> = FxHashMap::default();
        let mut count = 0usize;
        for q in accepted.ones() {
            for &(a, b) in &self.edges[q] {
                adj.entry(a).or_default().push(b);
                *indeg.entry(b).or_default() += 1;
                indeg.entry(a).or_default();
                count += 1;
            }
        }
        if count == 0 {
            return false;
        }
        debug_assert!(indeg.len() <= self.nodes);
        let mut stack: Vec<u32> = indeg.iter().filter(|(_, d)| **d == 0).map(|(v, _)| *v).collect();
        let mut removed = 0;
        while let Some(v) = stack.pop() {
            removed += 1;
            if let Some(next) = adj.get(&v) {
                for w in next {
                    let d = indeg.get_mut(w).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        stack.push(*w);
                    }
                }
            }
        }
        removed < indeg.len()
    }

    /// Every alive state has an option whose needed profiles lie in `upper`
    /// and whose forbidden profiles avoid `accepted`.
    fn coverable(&self, upper: &FixedBitSet, accepted: &FixedBitSet) -> bool {
        self.options.iter().all(|opts| opts.iter().any(|(need, forb)| need.is_subset(upper) && disjoint(forb, accepted)))
    }

    /// A set of at most `r` candidates meeting all constraints, sorted.
    ///
    /// Branches on the uncovered state with the fewest useful candidates: any
    /// completion must add a candidate that accepts a missing profile of one
    /// of the state's options without accepting a forbidden one. Candidates
    /// tried in earlier sibling branches are excluded.
    fn search(&self, r: usize, nodes: &mut usize) -> Option<Vec<usize>> {
        let n = self.candidates.len();
        let width = self.candidates.first().map_or(0, |c| c.0.len());
        let empty = FixedBitSet::with_capacity(width);
        let mut chosen = Vec::new();
        let excluded = FixedBitSet::with_capacity(n);
        if self.extend(r, &empty, &mut chosen, excluded, nodes) {
            chosen.sort_unstable();
            Some(chosen)
        } else {
            None
        }
    }

    fn extend(
        &self,
        r: usize,
        accepted: &FixedBitSet,
        chosen: &mut Vec<usize>,
        mut excluded: FixedBitSet,
        nodes: &mut usize,
    ) -> bool {
        let covered = |opts: &Vec<(FixedBitSet, FixedBitSet)>| {
            opts.iter().any(|(need, forb)| need.is_subset(accepted) && disjoint(forb, accepted))
        };
        let uncovered: Vec<usize> = (0..self.options.len()).filter(|s| !covered(&self.options[*s])).collect();
        if uncovered.is_empty() {
            return true;
        }
        if chosen.len() == r {
            return false;
        }
        let open: Vec<usize> = (0..self.candidates.len()).filter(|c| !excluded.contains(*c) && !chosen.contains(c)).collect();
        let mut upper = accepted.clone();
        for c in &open {
            upper.union_with(&self.candidates[*c].0);
        }
        let last = chosen.len() + 1 == r;
        let mut best: Option<Vec<usize>> = None;
        for s in &uncovered {
            let live: Vec<&(FixedBitSet, FixedBitSet)> =
                self.options[*s].iter().filter(|(need, forb)| need.is_subset(&upper) && disjoint(forb, accepted)).collect();
            if live.is_empty() {
                return false;
            }
            let mut list = Vec::new();
            for c in &open {
                let sig = &self.candidates[*c].0;
                let useful = live.iter().any(|(need, forb)| {
                    disjoint(forb, sig)
                        && if last {
                            need.is_subset(&union(accepted, sig))
                        } else {
                            need.difference(accepted).any(|q| sig.contains(q))
                        }
                });
                if useful {
                    list.push(*c);
                    if best.as_ref().is_some_and(|b| list.len() >= b.len()) {
                        break;
                    }
                }
            }
            if list.is_empty() {
                return false;
            }
            if best.as_ref().is_none_or(|b| list.len() < b.len()) {
                best = Some(list);
            }
        }
        for c in best.unwrap_or_default() {
            *nodes += 1;
            let next = union(accepted, &self.candidates[c].0);
            if !self.cyclic(&next) {
                chosen.push(c);
                if self.extend(r, &next, chosen, excluded.clone(), nodes) {
                    return true;
                }
                chosen.pop();
            }
            excluded.insert(c);
        }
        false
    }

    /// Whether the coverage relaxation (all candidate rules at once, no
    /// acyclicity) holds.
    fn relaxed(&self) -> bool {
        let width = self.candidates.first().map_or(0, |c| c.0.len());
        let mut all = FixedBitSet::with_capacity(width);
        for (sig, _) in &self.candidates {
            all.union_with(sig);
        }
        self.coverable(&all, &FixedBitSet::with_capacity(width))
    }
}

/// Feature subsets with total complexity exactly `sum`, at most `max_size`
/// features, in lexicographic index order. `complexity` must be sorted.
fn subsets_with_sum(complexity: &[usize], sum: usize, max_size: usize) -> Vec<Vec<usize>> {
    fn rec(c: &[usize], start: usize, left: usize, max_size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        if cur.len() == max_size {
            return;
        }
        for i in start..c.len() {
            if c[i] > left {
                break;
            }
            let rest = left - c[i];
            if rest != 0 && (i + 1 >= c.len() || c[i + 1] > rest) {
                continue;
            }
            cur.push(i);
            rec(c, i + 1, rest, max_size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(complexity, 0, sum, max_size, &mut Vec::new(), &mut out);
    out
}

struct Found {
    features: Vec<usize>,
    rules: Vec<Vec<usize>>,
    objective: usize,
}

fn build_sketch(pool: &FeaturePool, facts: &LearnFacts, found: &Found) -> Sketch {
    let kinds: Vec<FeatureKind> = found.features.iter().map(|f| facts.features[*f].kind).collect();
    Sketch {
        features: found
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| NamedFeature { name: format!("f{i}"), feature: pool.features[*f].feature.clone() })
            .collect(),
        rules: found.rules.iter().map(|c| rule_of(c, &kinds)).collect(),
    }
}

/// Cost-minimal sketch for the facts: minimizes weighted feature complexity
/// plus weighted rule count over subsets of at most `max_features` pool features.
pub fn solve(facts: &LearnFacts, pool: &FeaturePool, config: &LearnConfig) -> Result<Solution, LearnError> {
    config.validate()?;
    if facts.features.len() != pool.len() {
        return Err(LearnError::Config("facts and pool disagree on the feature count".into()));
    }
    let clock = Instant::now();
    let mut stats = SolverStats::default();
    let any_alive = facts.instances.iter().any(|i| !i.alive.is_empty());
    if !any_alive {
        stats.seconds = clock.elapsed().as_secs_f64();
        let sketch = Sketch::default();
        return Ok(Solution { sketch, features: Vec::new(), objective: 0, optimal: true, lower_bound: 0, stats });
    }
    if config.max_rules == 0 {
        return Err(LearnError::Unsatisfiable {
            max_rules: 0,
            reason: "alive states need a subgoal but no rule is allowed".into(),
        });
    }
    let problem = Problem::new(facts, config.strict_c6);
    if let Some(bad) = problem.options.iter().position(|o| o.is_empty()) {
        return Err(LearnError::Unsatisfiable {
            max_rules: config.max_rules,
            reason: format!("alive state #{bad} has no admissible subgoal tuple"),
        });
    }
    let (cw, rw) = (config.complexity_weight, config.rule_weight);
    let complexity: Vec<usize> = facts.features.iter().map(|f| f.complexity).collect();
    debug_assert!(complexity.windows(2).all(|w| w[0] <= w[1]));
    let max_sum = complexity.iter().rev().take(config.max_features).sum::<usize>();
    let mut best: Option<Found> = None;
    let mut coverage_seen = false;
    let mut sum = 0;
    while sum <= max_sum {
        let floor = cw * sum + rw;
        if best.as_ref().is_some_and(|b| floor >= b.objective) {
            break;
        }
        let subsets = subsets_with_sum(&complexity, sum, config.max_features);
        for chunk in subsets.chunks(CHUNK) {
            if let Some(limit) = config.timeout {
                if clock.elapsed().as_secs_f64() > limit {
                    stats.seconds = clock.elapsed().as_secs_f64();
                    return match best {
                        Some(b) => Ok(Solution {
                            sketch: build_sketch(pool, facts, &b),
                            features: b.features,
                            objective: b.objective,
                            optimal: false,
                            lower_bound: floor,
                            stats,
                        }),
                        None => Err(LearnError::Timeout { seconds: limit, lower_bound: floor }),
                    };
                }
            }
            let bound = best.as_ref().map(|b| b.objective);
            let results: Vec<(bool, usize, Option<Found>)> = chunk
                .par_iter()
                .map(|fs| {
                    let subset = Subset::new(&problem, fs);
                    let mut nodes = 0;
                    if !subset.relaxed() {
                        return (false, nodes, None);
                    }
                    for r in 1..=config.max_rules {
                        let objective = cw * sum + rw * r;
                        if bound.is_some_and(|b| objective >= b) {
                            break;
                        }
                        if let Some(chosen) = subset.search(r, &mut nodes) {
                            let rules = chosen.iter().map(|i| subset.candidates[*i].1.clone()).collect();
                            let objective = cw * sum + rw * chosen.len();
                            return (true, nodes, Some(Found { features: fs.clone(), rules, objective }));
                        }
                    }
                    (true, nodes, None)
                })
                .collect();
            stats.subsets += chunk.len();
            for (covered, nodes, found) in results {
                coverage_seen |= covered;
                stats.nodes += nodes;
                if let Some(f) = found {
                    if best.as_ref().is_none_or(|b| f.objective < b.objective) {
                        log::debug!("incumbent {} with features {:?}", f.objective, f.features);
                        best = Some(f);
                    }
                }
            }
        }
        sum += 1;
    }
    stats.seconds = clock.elapsed().as_secs_f64();
    match best {
        Some(b) => Ok(Solution {
            sketch: build_sketch(pool, facts, &b),
            features: b.features,
            objective: b.objective,
            optimal: true,
            lower_bound: b.objective,
            stats,
        }),
        None => Err(LearnError::Unsatisfiable {
            max_rules: config.max_rules,
            reason: if coverage_seen {
                "every feature subset that covers the subgoals needs a cyclic rule set or more rules".into()
            } else {
                format!("no subset of at most {} features separates the subgoals from the dead ends", config.max_features)
            },
        }),
    }
}

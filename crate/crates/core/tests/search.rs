mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use common::{space, task, true_atoms};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchforge::pddl::load_task;
use sketchforge::search::{
    iterated_iw, iw, novelty::combinations, siw, siwr, tuple_graph, SearchError, SiwrConfig, SpaceTransitions,
};
use sketchforge::sketch::parse_sketch;
use sketchforge::statespace::{StateId, StateSpace};
use sketchforge::task::{AtomId, GroundTask};
use sketchforge::verify::brute_force_width;
use sketchforge_domains::{self as domains, sketches, Instance};

fn small_spaces() -> Vec<(GroundTask, StateSpace)> {
    let insts: Vec<(&str, Instance)> = vec![
        (domains::GRIPPER, domains::gripper(2)),
        (domains::BLOCKS, domains::blocks_on(3, 1)),
        (domains::BLOCKS, domains::blocks_clear(4, 2)),
        (domains::DELIVERY, domains::delivery(3, 2, 1, 3)),
        (domains::MICONIC, domains::miconic(3, 2, 4)),
        (domains::VISITALL, domains::visitall(2, 3, 5)),
        (domains::SPANNER, domains::spanner(3, 2, 1, 6)),
    ];
    insts
        .iter()
        .map(|(d, i)| {
            let t = task(d, i);
            let sp = space(&t);
            (t, sp)
        })
        .collect()
}

fn bfs(sp: &StateSpace, s: StateId) -> Vec<u32> {
    let mut d = vec![u32::MAX; sp.len()];
    d[s as usize] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for (_, v) in sp.successors(u) {
            if d[*v as usize] == u32::MAX {
                d[*v as usize] = d[u as usize] + 1;
                q.push_back(*v);
            }
        }
    }
    d
}

/// Random goal: one or two fluent atoms, as a state predicate.
fn random_goal(t: &GroundTask, rng: &mut ChaCha8Rng) -> Vec<AtomId> {
    let fluent: Vec<AtomId> = (0..t.atoms.len() as AtomId).filter(|a| !t.static_atom[*a as usize]).collect();
    (0..rng.gen_range(1..=2)).map(|_| fluent[rng.gen_range(0..fluent.len())]).collect()
}

#[test]
fn start_passing_the_test_gives_empty_plan() {
    let t = task(domains::GRIPPER, &domains::gripper(1));
    let r = iw(&t, t.init.clone(), 1, |_| true);
    assert_eq!(r.plan, Some(vec![]));
    assert_eq!(r.expanded, 0);
    let r = iterated_iw(&t, t.init.clone(), 2, |_| true);
    assert_eq!(r.width, Some(0));
}

#[test]
fn iw_zero_looks_one_step_ahead() {
    let t = task(domains::GRIPPER, &domains::gripper(1));
    let sp = space(&t);
    let tr = SpaceTransitions::new(&t, &sp);
    let dist = bfs(&sp, 0);
    let one = sp.ids().find(|s| dist[*s as usize] == 1).unwrap();
    let two = sp.ids().find(|s| dist[*s as usize] == 2).unwrap();
    assert_eq!(iw(&tr, 0, 0, |s| *s == one).plan_len(), Some(1));
    assert!(!iw(&tr, 0, 0, |s| *s == two).solved());
    assert_eq!(iw(&tr, 0, 0, |s| *s == two).expanded, 1);
}

/// If the brute-force width is at most k, IW(k) finds an optimal plan.
#[test]
fn low_width_implies_optimal_iw() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for (t, sp) in small_spaces() {
        let tr = SpaceTransitions::new(&t, &sp);
        for _ in 0..40 {
            let s = rng.gen_range(0..sp.len() as StateId);
            let atoms = random_goal(&t, &mut rng);
            let goal = |x: StateId| atoms.iter().all(|a| sp.state(x).contains(*a));
            let dist = bfs(&sp, s);
            let Some(d) = sp.ids().filter(|x| goal(*x) && dist[*x as usize] != u32::MAX).map(|x| dist[x as usize]).min()
            else {
                continue;
            };
            let Some(w) = brute_force_width(&t, &sp, s, goal, 2).unwrap() else { continue };
            for k in w..=2 {
                let r = iw(&tr, s, k, |x| goal(*x));
                assert_eq!(r.plan_len(), Some(d as usize), "{} from {s}, k {k}", t.problem_name);
                let end = t.replay(sp.state(s), r.plan.as_ref().unwrap()).unwrap();
                assert!(atoms.iter().all(|a| end.contains(*a)));
            }
            checked += 1;
        }
    }
    assert!(checked > 150, "only {checked} subproblems");
}

#[test]
fn expansions_are_bounded_by_tuple_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (t, sp) in small_spaces() {
        let tr = SpaceTransitions::new(&t, &sp);
        let n = t.atoms.len();
        let fluent = t.num_fluent_atoms();
        for _ in 0..20 {
            let s = rng.gen_range(0..sp.len() as StateId);
            let atoms = random_goal(&t, &mut rng);
            let goal = |x: &StateId| atoms.iter().all(|a| sp.state(*x).contains(*a));
            let r1 = iw(&tr, s, 1, goal);
            let r2 = iw(&tr, s, 2, goal);
            assert!(r1.expanded <= n, "{}: {} > {n}", t.problem_name, r1.expanded);
            assert!(r1.expanded <= fluent + 1);
            assert!(r2.expanded <= n * n);
            assert!(r2.expanded <= 1 + fluent + fluent * fluent.saturating_sub(1) / 2);
        }
    }
}

const TOWER: &str = "(define (problem tower) (:domain blocks)
  (:objects a b c)
  (:init (clear a) (on a b) (on b c) (ontable c) (handempty))
  (:goal (and (on c a))))";

#[test]
fn placing_one_block_needs_width_two() {
    let t = load_task(domains::BLOCKS, TOWER).unwrap();
    let sp = space(&t);
    let r = iterated_iw(&t, t.init.clone(), 2, |s| t.is_goal(s));
    assert!(r.width.unwrap() <= 2);
    t.validate_plan(r.plan.as_ref().unwrap()).unwrap();
    let optimal = iw(&t, t.init.clone(), 2, |s| t.is_goal(s));
    assert_eq!(optimal.plan_len(), Some(sp.goal_distance(0) as usize));
    assert_eq!(brute_force_width(&t, &sp, 0, |s| sp.is_goal(s), 3).unwrap(), Some(2));
    let short = iterated_iw(&t, t.init.clone(), 0, |s| t.is_goal(s));
    assert!(!short.solved());
    assert_eq!(short.width, None);
}

#[test]
fn siw_solves_gripper() {
    let t = task(domains::GRIPPER, &domains::gripper(2));
    let r = siw(&t, 2).unwrap();
    t.validate_plan(&r.plan).unwrap();
    assert!(r.max_width() <= 2);
    assert_eq!(r.episodes.len(), 2);
    let sp = space(&t);
    assert!(sp.is_solvable(0));
}

const NO_WAY: &str = "(define (problem stuck) (:domain blocks)
  (:objects a b)
  (:init (clear a) (on a b) (ontable b) (handempty))
  (:goal (and (on a b) (on b a))))";

#[test]
fn siw_reports_unreachable_goal() {
    let t = load_task(domains::BLOCKS, NO_WAY).unwrap();
    assert!(matches!(siw(&t, 2), Err(SearchError::EpisodeFailure { episode: 0, .. })));
}

#[test]
fn siwr_with_empty_sketch_is_one_episode() {
    let t = task(domains::GRIPPER, &domains::gripper(1));
    let r = siwr(&t, &parse_sketch("").unwrap(), &SiwrConfig::default()).unwrap();
    assert_eq!(r.episodes.len(), 1);
    t.validate_plan(&r.plan).unwrap();
}

#[test]
fn siwr_gripper_width_one() {
    let s = parse_sketch(sketches::GRIPPER_K1).unwrap();
    for balls in [3, 6] {
        let t = task(domains::GRIPPER, &domains::gripper(balls));
        let r = siwr(&t, &s, &SiwrConfig::default()).unwrap();
        t.validate_plan(&r.plan).unwrap();
        assert!(r.max_width() <= 1);
        let strict = siwr(&t, &s, &SiwrConfig { k_max: 1, strict: true, max_episodes: None }).unwrap();
        t.validate_plan(&strict.plan).unwrap();
    }
}

/// Each episode of the visit-one-more-place sketch moves the robot to a
/// closest unvisited cell.
#[test]
fn siwr_visitall_goes_to_nearest_unvisited_cell() {
    let s = parse_sketch(sketches::VISITALL_K1).unwrap();
    let t = task(domains::VISITALL, &domains::visitall(4, 3, 2));
    let r = siwr(&t, &s, &SiwrConfig::default()).unwrap();
    t.validate_plan(&r.plan).unwrap();
    let neighbours = |c: &str| -> Vec<String> {
        let p: Vec<usize> = c.split('-').skip(1).map(|x| x.parse().unwrap()).collect();
        let mut out = Vec::new();
        if p[0] > 0 {
            out.push(format!("cell-{}-{}", p[0] - 1, p[1]));
        }
        if p[0] + 1 < 4 {
            out.push(format!("cell-{}-{}", p[0] + 1, p[1]));
        }
        if p[1] > 0 {
            out.push(format!("cell-{}-{}", p[0], p[1] - 1));
        }
        if p[1] + 1 < 3 {
            out.push(format!("cell-{}-{}", p[0], p[1] + 1));
        }
        out
    };
    let mut state = t.init.clone();
    let mut step = 0;
    for e in &r.episodes {
        let robot = true_atoms(&t, &state, "at-robot")[0][0].clone();
        let visited: BTreeSet<String> = true_atoms(&t, &state, "visited").into_iter().map(|v| v[0].clone()).collect();
        let mut dist = BTreeMap::from([(robot.clone(), 0usize)]);
        let mut q = VecDeque::from([robot]);
        let mut nearest = None;
        while let Some(c) = q.pop_front() {
            if !visited.contains(&c) {
                nearest = Some(dist[&c]);
                break;
            }
            for n in neighbours(&c) {
                if !dist.contains_key(&n) {
                    dist.insert(n.clone(), dist[&c] + 1);
                    q.push_back(n);
                }
            }
        }
        assert_eq!(Some(e.length), nearest);
        state = t.replay(&state, &r.plan[step..step + e.length]).unwrap();
        step += e.length;
        let now: BTreeSet<String> = true_atoms(&t, &state, "visited").into_iter().map(|v| v[0].clone()).collect();
        assert_eq!(now.len(), visited.len() + 1);
    }
}

#[test]
fn siwr_cycle_guard() {
    let t = task(domains::GRIPPER, &domains::gripper(4));
    let cyclic = parse_sketch(
        "feature b = b_empty(c_and(c_primitive(at-robby,0),c_not(c_primitive(at_g,1))))\nrule {} -> { unk(b) }",
    )
    .unwrap();
    let r = siwr(&t, &cyclic, &SiwrConfig { k_max: 1, strict: false, max_episodes: Some(25) });
    assert_eq!(r.unwrap_err(), SearchError::CycleGuard { limit: 25 });
}

/// Tuples reachable from the root through admissible chains, computed from the
/// definitions over all tuples of all reachable states.
fn admissible_tuples(t: &GroundTask, sp: &StateSpace, root: StateId, k: usize) -> BTreeMap<Vec<AtomId>, (u32, Vec<StateId>)> {
    let dist = bfs(sp, root);
    let tuples = |s: StateId| -> Vec<Vec<AtomId>> {
        let fluent: Vec<AtomId> = sp.state(s).atoms().iter().copied().filter(|a| !t.static_atom[*a as usize]).collect();
        (1..=k).flat_map(|n| combinations(&fluent, n)).collect()
    };
    let mut first: BTreeMap<Vec<AtomId>, (u32, Vec<StateId>)> = BTreeMap::new();
    for s in sp.ids().filter(|s| dist[*s as usize] != u32::MAX) {
        for tup in tuples(s) {
            let e = first.entry(tup).or_insert((u32::MAX, Vec::new()));
            let d = dist[s as usize];
            if d < e.0 {
                *e = (d, vec![s]);
            } else if d == e.0 {
                e.1.push(s);
            }
        }
    }
    let mut out: BTreeMap<Vec<AtomId>, (u32, Vec<StateId>)> = BTreeMap::new();
    let mut stack: Vec<Vec<AtomId>> = tuples(root);
    while let Some(tup) = stack.pop() {
        if out.contains_key(&tup) {
            continue;
        }
        let (d, mut ends) = first[&tup].clone();
        ends.sort();
        for (next, (d2, _)) in &first {
            if *d2 != d + 1 || out.contains_key(next) {
                continue;
            }
            let extends = ends.iter().all(|s| {
                sp.successors(*s).iter().any(|(_, x)| dist[*x as usize] == d + 1 && next.iter().all(|a| sp.state(*x).contains(*a)))
            });
            if extends {
                stack.push(next.clone());
            }
        }
        out.insert(tup, (d, ends));
    }
    out
}

#[test]
fn tuple_graph_matches_chain_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (t, sp) in small_spaces().into_iter().filter(|(_, sp)| sp.len() <= 200) {
        for _ in 0..3 {
            let root = rng.gen_range(0..sp.len() as StateId);
            for k in 1..=2 {
                let g = tuple_graph(&t, &sp, root, k);
                let got: BTreeMap<Vec<AtomId>, (u32, Vec<StateId>)> =
                    g.nodes.iter().map(|n| (n.tuple.clone(), (n.distance, n.contain.clone()))).collect();
                assert_eq!(got.len(), g.nodes.len());
                assert_eq!(got, admissible_tuples(&t, &sp, root, k), "{} root {root} k {k}", t.problem_name);
                for (d, layer) in g.layers.iter().enumerate() {
                    assert!(layer.iter().all(|i| g.nodes[*i].distance as usize == d));
                }
            }
        }
    }
}

#[test]
fn gripper_tuple_graph_root_layers() {
    let t = task(domains::GRIPPER, &domains::gripper(1));
    let sp = space(&t);
    let g = tuple_graph(&t, &sp, 0, 1);
    let layer0: BTreeSet<String> = g.layer(0).map(|n| t.atom_text(n.tuple[0])).collect();
    let root: BTreeSet<String> =
        sp.state(0).atoms().iter().filter(|a| !t.static_atom[**a as usize]).map(|a| t.atom_text(*a)).collect();
    assert_eq!(layer0, root);
    let carry = t.find_atom("carry", &["ball1", "left"]).unwrap();
    let node = g.layer(1).find(|n| n.tuple == vec![carry]).expect("carry at layer 1");
    let pick: Vec<StateId> =
        sp.successors(0).iter().filter(|(_, s)| sp.state(*s).contains(carry)).map(|(_, s)| *s).collect();
    assert_eq!(node.contain, pick);
    assert_eq!(pick.len(), 1);
}

/// In the three-block tower, on(c, a) is reachable but its optimal plans
/// do not all extend from one single atom: it appears only at k = 2.
#[test]
fn width_two_atom_is_missing_at_k_one() {
    let t = load_task(domains::BLOCKS, TOWER).unwrap();
    let sp = space(&t);
    let goal = t.find_atom("on", &["c", "a"]).unwrap();
    assert!(!tuple_graph(&t, &sp, 0, 1).nodes.iter().any(|n| n.tuple == vec![goal]));
    assert!(tuple_graph(&t, &sp, 0, 2).nodes.iter().any(|n| n.tuple == vec![goal]));
}

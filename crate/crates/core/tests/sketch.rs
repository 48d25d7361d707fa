mod common;

use std::collections::VecDeque;

use common::{space, task, true_atoms};
use proptest::prelude::*;
use sketchforge::dl::Value;
use sketchforge::sketch::{parse_sketch, Rule, Sketch, Subgoals};
use sketchforge::statespace::StateId;
use sketchforge_domains::{self as domains, sketches};

const DELIVERY_RULES: &str = "\
feature h = b_empty(c_primitive(empty,0))
feature p = n_count(c_primitive(package,0))
feature t = n_count(c_primitive(truck,0))
feature n = n_count(c_primitive(cell,0))
rule { neg(h), gt(p) } -> { dec(p), unk(t) }
rule {} -> {}
";

#[test]
fn delivery_rule_satisfaction() {
    let s = parse_sketch(DELIVERY_RULES).unwrap();
    let f = [0, 2, 3, 1];
    assert!(s.satisfies(0, &f, &[0, 1, 4, 1]).unwrap());
    assert!(!s.satisfies(0, &f, &[0, 1, 4, 0]).unwrap());
    assert!(!s.satisfies(0, &[1, 2, 3, 1], &[1, 1, 4, 1]).unwrap());
    assert!(s.satisfies(0, &[1, 2], &[0, 1]).is_err());
}

#[test]
fn empty_rule_only_accepts_equal_valuations() {
    let s = parse_sketch(DELIVERY_RULES).unwrap();
    assert!(s.satisfies(1, &[0, 2, 3, 1], &[0, 2, 3, 1]).unwrap());
    assert!(!s.satisfies(1, &[0, 2, 3, 1], &[0, 2, 3, 2]).unwrap());
}

fn delivery_rule() -> Rule {
    parse_sketch(DELIVERY_RULES).unwrap().rules[0].clone()
}

proptest! {
    #[test]
    fn satisfaction_decomposes_per_feature(
        f in proptest::collection::vec(0u32..4, 4),
        g in proptest::collection::vec(0u32..4, 4),
    ) {
        let mut f = f;
        let mut g = g;
        f[0] = f[0].min(1);
        g[0] = g[0].min(1);
        let rule = delivery_rule();
        let whole = rule.satisfied(&f, &g);
        let parts = (0..4).all(|i| rule.feature_satisfied(i, f[i], g[i]));
        prop_assert_eq!(whole, parts);
    }
}

/// The same sketch with one more rule.
fn with_rule(s: &Sketch, extra: &str) -> Sketch {
    parse_sketch(&format!("{s}{extra}\n")).unwrap()
}

#[test]
fn subgoals_grow_with_rules() {
    let t = task(domains::GRIPPER, &domains::gripper(2));
    let sp = space(&t);
    let base = parse_sketch(sketches::GRIPPER_K1).unwrap();
    let bigger = with_rule(&base, "rule {} -> { unk(in_a) }");
    let (vb, vg) = (base.valuations(&t, &sp), bigger.valuations(&t, &sp));
    let (sb, sg) = (Subgoals::new(&base, &sp, &vb), Subgoals::new(&bigger, &sp, &vg));
    for s in sp.ids() {
        let small = sb.subgoal_states(s);
        let large = sg.subgoal_states(s);
        assert!(small.iter().all(|x| large.contains(x)), "state {s}");
    }
}

#[test]
fn empty_sketch_subgoals_are_goals() {
    let t = task(domains::GRIPPER, &domains::gripper(2));
    let sp = space(&t);
    let empty = parse_sketch("").unwrap();
    let v = empty.valuations(&t, &sp);
    let sub = Subgoals::new(&empty, &sp, &v);
    let reach = bfs(&sp, sp.initial());
    let goals: Vec<StateId> = sp.ids().filter(|s| sp.is_goal(*s) && reach[*s as usize] != u32::MAX).collect();
    let mut got = sub.subgoal_states(sp.initial());
    got.sort();
    assert_eq!(got, goals);
    let goal = goals[0];
    assert!(sub.subgoal_states(goal).contains(&goal));
    assert_eq!(sub.closest_subgoals(goal).unwrap().0, 0);
}

fn bfs(sp: &sketchforge::statespace::StateSpace, s: StateId) -> Vec<u32> {
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

#[test]
fn gripper_k2_subgoals_are_ball_at_b() {
    let t = task(domains::GRIPPER, &domains::gripper(1));
    let sp = space(&t);
    assert_eq!(sp.len(), 8);
    let s = parse_sketch(sketches::GRIPPER_K2).unwrap();
    let v = s.valuations(&t, &sp);
    let sub = Subgoals::new(&s, &sp, &v);
    let mut got = sub.subgoal_states(sp.initial());
    got.sort();
    let expected: Vec<StateId> = sp
        .ids()
        .filter(|x| true_atoms(&t, sp.state(*x), "at").contains(&vec!["ball1".to_string(), "roomb".to_string()]))
        .collect();
    assert_eq!(expected.len(), 2);
    assert_eq!(got, expected);
}

#[test]
fn gripper_k1_closest_subgoal_from_room_b() {
    let t = task(domains::GRIPPER, &domains::gripper(1));
    let sp = space(&t);
    let start = sp
        .ids()
        .find(|x| {
            let st = sp.state(*x);
            true_atoms(&t, st, "at-robby") == vec![vec!["roomb".to_string()]]
                && true_atoms(&t, st, "at") == vec![vec!["ball1".to_string(), "rooma".to_string()]]
        })
        .unwrap();
    let s = parse_sketch(sketches::GRIPPER_K1).unwrap();
    let v = s.valuations(&t, &sp);
    let sub = Subgoals::new(&s, &sp, &v);
    let (d, closest) = sub.closest_subgoals(start).unwrap();
    let dist = bfs(&sp, start);
    let carrying: Vec<StateId> = sp.ids().filter(|x| !true_atoms(&t, sp.state(*x), "carry").is_empty()).collect();
    let oracle = carrying.iter().map(|x| dist[*x as usize]).min().unwrap();
    assert_eq!(d, oracle);
    assert_eq!(d, 2);
    let mut expected: Vec<StateId> = carrying.into_iter().filter(|x| dist[*x as usize] == 2).collect();
    expected.sort();
    let mut closest = closest;
    closest.sort();
    assert_eq!(closest, expected);
    assert_eq!(sub.rules_between(start, closest[0]), vec![0]);
}

#[test]
fn dead_end_has_no_subgoals() {
    let t = task(domains::SPANNER, &domains::spanner(3, 2, 1, 1));
    let sp = space(&t);
    let empty = parse_sketch("").unwrap();
    let v = empty.valuations(&t, &sp);
    let sub = Subgoals::new(&empty, &sp, &v);
    let dead = sp.ids().find(|x| sp.is_dead_end(*x)).expect("spanner has dead ends");
    assert_eq!(sub.closest_subgoals(dead), None);
    assert!(sub.subgoal_states(dead).is_empty());
}

#[test]
fn domain_sketches_round_trip_and_check() {
    let cases = [
        (sketches::GRIPPER_K0, domains::GRIPPER, domains::gripper(2)),
        (sketches::GRIPPER_K1, domains::GRIPPER, domains::gripper(2)),
        (sketches::GRIPPER_K2, domains::GRIPPER, domains::gripper(2)),
        (sketches::DELIVERY_K0, domains::DELIVERY, domains::delivery(3, 3, 2, 1)),
        (sketches::DELIVERY_K1, domains::DELIVERY, domains::delivery(3, 3, 2, 1)),
        (sketches::DELIVERY_K2, domains::DELIVERY, domains::delivery(3, 3, 2, 1)),
        (sketches::BLOCKS_ON_K1, domains::BLOCKS, domains::blocks_on(4, 1)),
        (sketches::CHILDSNACK_K1, domains::CHILDSNACK, domains::childsnack(2, 1, 2, 1, 1)),
        (sketches::MICONIC_K1, domains::MICONIC, domains::miconic(3, 2, 1)),
        (sketches::VISITALL_K1, domains::VISITALL, domains::visitall(3, 3, 1)),
        (sketches::SPANNER_K1, domains::SPANNER, domains::spanner(3, 2, 1, 1)),
    ];
    for (text, domain, inst) in cases {
        let s = parse_sketch(text).unwrap();
        let printed = s.to_string();
        let again = parse_sketch(&printed).unwrap();
        assert_eq!(again, s.clone().canonical(), "{}", inst.name);
        assert_eq!(again.to_string(), printed);
        let t = task(domain, &inst);
        s.check(&t).unwrap_or_else(|e| panic!("{}: {e}", inst.name));
        let vals: Vec<Value> = s.valuation(&t, &t.init);
        assert_eq!(vals.len(), s.num_features());
    }
}

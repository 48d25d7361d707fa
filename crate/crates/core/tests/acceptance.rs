//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p sketchforge --test acceptance`.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{task, training};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchforge::dl::{generate_pool, PoolConfig, Sample};
use sketchforge::learn::{build_facts, emit_asp, incremental_learn, solve, LearnConfig, LearnOutcome, TrainingInstance};
use sketchforge::search::{iw, siwr, SiwrConfig, SpaceTransitions};
use sketchforge::sketch::{parse_sketch, Subgoals};
use sketchforge::statespace::{StateSpace, StateSpaceError};
use sketchforge::verify::{brute_force_width, check_acyclicity, check_width, Scope, WidthMode};
use sketchforge_domains::{self as domains, sketches, Instance};

const MAX_STATES: usize = 10_000;
const ORACLE_STATES: usize = 500;
const MIN_SUBPROBLEMS: usize = 200;
const SEED: u64 = 7;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn expand(domain: &str, inst: &Instance, cap: usize) -> Option<(sketchforge::task::GroundTask, StateSpace)> {
    let t = task(domain, inst);
    match StateSpace::expand(&t, cap) {
        Ok(sp) => Some((t, sp)),
        Err(StateSpaceError::CapacityExceeded(_)) => None,
        Err(e) => panic!("{}: {e}", inst.name),
    }
}

/// Hand-written sketches with their width and instance families.
fn handcrafted() -> Vec<(&'static str, &'static str, &'static str, usize, Vec<Instance>)> {
    let delivery = vec![domains::delivery(3, 2, 2, 1), domains::delivery(3, 3, 2, 2), domains::delivery(4, 3, 2, 3)];
    let gripper: Vec<Instance> = (1..=4).map(domains::gripper).collect();
    vec![
        ("delivery k0", sketches::DELIVERY_K0, domains::DELIVERY, 0, delivery.clone()),
        ("delivery k1", sketches::DELIVERY_K1, domains::DELIVERY, 1, delivery.clone()),
        ("delivery k2", sketches::DELIVERY_K2, domains::DELIVERY, 2, delivery),
        ("gripper k0", sketches::GRIPPER_K0, domains::GRIPPER, 0, gripper.clone()),
        ("gripper k1", sketches::GRIPPER_K1, domains::GRIPPER, 1, gripper.clone()),
        ("gripper k2", sketches::GRIPPER_K2, domains::GRIPPER, 2, gripper),
        ("blocks-on", sketches::BLOCKS_ON_K1, domains::BLOCKS, 1, (1..=3).map(|s| domains::blocks_on(4, s)).chain([domains::blocks_on(5, 1)]).collect()),
        ("childsnack", sketches::CHILDSNACK_K1, domains::CHILDSNACK, 1, vec![domains::childsnack(2, 1, 2, 1, 1), domains::childsnack(3, 1, 2, 1, 2)]),
        ("miconic", sketches::MICONIC_K1, domains::MICONIC, 1, vec![domains::miconic(3, 2, 1), domains::miconic(4, 3, 2), domains::miconic(5, 3, 3)]),
        ("visitall", sketches::VISITALL_K1, domains::VISITALL, 1, vec![domains::visitall(3, 2, 1), domains::visitall(3, 3, 2)]),
        ("spanner", sketches::SPANNER_K1, domains::SPANNER, 1, vec![domains::spanner(3, 2, 1, 1), domains::spanner(4, 3, 2, 2)]),
    ]
}

fn criterion_1() -> Verdict {
    let mut checked = 0;
    for (name, text, domain, k, instances) in handcrafted() {
        let sketch = parse_sketch(text).unwrap();
        for inst in &instances {
            let Some((t, sp)) = expand(domain, inst, MAX_STATES) else { continue };
            let v = sketch.valuations(&t, &sp);
            if !check_acyclicity(&sketch, &sp, &v, &Scope::Closest).acyclic {
                return Verdict::Fail(format!("{name} cyclic on {}", inst.name));
            }
            let w = check_width(&t, &sketch, &sp, &v, k + 1, WidthMode::Strict);
            if !w.bounded || w.max_width != Some(k) {
                return Verdict::Fail(format!("{name} on {}: max width {:?}, expected {k}", inst.name, w.max_width));
            }
            checked += 1;
        }
    }
    Verdict::Pass(format!("{checked} (sketch, instance) pairs acyclic with exact width"))
}

/// Random (state, G_R(s)) subproblems from the hand-written sketches on small
/// spaces, with the brute-force width, the IW-optimal width, the IW(1)/IW(2)
/// expansions and the atom count N.
struct Subproblem {
    brute: Option<usize>,
    iw_optimal: Option<usize>,
    expanded: [usize; 2],
    atoms: usize,
}

fn subproblems() -> Vec<Subproblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cases: Vec<(&str, &str, Instance)> = vec![
        (domains::DELIVERY, sketches::DELIVERY_K0, domains::delivery(3, 2, 1, 1)),
        (domains::DELIVERY, sketches::DELIVERY_K1, domains::delivery(3, 2, 1, 1)),
        (domains::DELIVERY, sketches::DELIVERY_K2, domains::delivery(3, 2, 1, 1)),
        (domains::GRIPPER, sketches::GRIPPER_K0, domains::gripper(3)),
        (domains::GRIPPER, sketches::GRIPPER_K1, domains::gripper(3)),
        (domains::GRIPPER, sketches::GRIPPER_K2, domains::gripper(3)),
        (domains::BLOCKS, sketches::BLOCKS_ON_K1, domains::blocks_on(4, 2)),
        (domains::CHILDSNACK, sketches::CHILDSNACK_K1, domains::childsnack(2, 1, 2, 1, 1)),
        (domains::MICONIC, sketches::MICONIC_K1, domains::miconic(3, 2, 1)),
        (domains::VISITALL, sketches::VISITALL_K1, domains::visitall(2, 3, 1)),
        (domains::SPANNER, sketches::SPANNER_K1, domains::spanner(3, 2, 1, 1)),
    ];
    let mut out = Vec::new();
    for (domain, text, inst) in &cases {
        let (t, sp) = expand(domain, inst, ORACLE_STATES).expect("oracle spaces stay small");
        let sketch = parse_sketch(text).unwrap();
        let v = sketch.valuations(&t, &sp);
        let sub = Subgoals::new(&sketch, &sp, &v);
        let tr = SpaceTransitions::new(&t, &sp);
        let alive = sp.alive_states();
        for _ in 0..25 {
            let s = alive[rng.gen_range(0..alive.len())];
            let Some((d, _)) = sub.closest_subgoals(s) else { continue };
            let goal = |x: u32| sub.is_subgoal(s, x);
            let brute = brute_force_width(&t, &sp, s, goal, 3).unwrap();
            let iw_optimal = (0..=3).find(|k| iw(&tr, s, *k, |x| goal(*x)).plan_len() == Some(d as usize));
            let expanded = [1, 2].map(|k| iw(&tr, s, k, |x| goal(*x)).expanded);
            out.push(Subproblem { brute, iw_optimal, expanded, atoms: t.num_fluent_atoms() });
        }
    }
    out
}

fn criterion_2(subs: &[Subproblem]) -> Verdict {
    let agree = subs.iter().filter(|s| s.brute == s.iw_optimal).count();
    let msg = format!("{agree}/{} subproblems agree", subs.len());
    if subs.len() >= MIN_SUBPROBLEMS && agree == subs.len() {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn criterion_3(subs: &[Subproblem]) -> Verdict {
    let over1 = subs.iter().filter(|s| s.expanded[0] > s.atoms).count();
    let over2 = subs.iter().filter(|s| s.expanded[1] > s.atoms * s.atoms).count();
    let msg = format!("{} subproblems, {over1} above N for IW(1), {over2} above N^2 for IW(2)", subs.len());
    if over1 == 0 && over2 == 0 {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

struct Learned {
    label: &'static str,
    domain: &'static str,
    k: usize,
    instances: Vec<TrainingInstance>,
    outcome: LearnOutcome,
}

fn learn_all() -> Vec<Learned> {
    let rows: Vec<(&str, &str, usize, Vec<Instance>)> = vec![
        ("gripper w1", domains::GRIPPER, 1, (1..=3).map(domains::gripper).collect()),
        ("gripper w2", domains::GRIPPER, 2, (1..=3).map(domains::gripper).collect()),
        ("blocks-clear w1", domains::BLOCKS, 1, (3..=5).map(|n| domains::blocks_clear(n, 1)).collect()),
        ("visitall w1", domains::VISITALL, 1, vec![domains::visitall(2, 1, 1), domains::visitall(2, 2, 1), domains::visitall(3, 2, 1)]),
        ("miconic w1", domains::MICONIC, 1, vec![domains::miconic(2, 1, 1), domains::miconic(3, 1, 1), domains::miconic(3, 2, 1)]),
    ];
    rows.into_iter()
        .map(|(label, domain, k, insts)| {
            let instances = training(domain, insts);
            let outcome = incremental_learn(&instances, &LearnConfig { k, ..LearnConfig::default() })
                .unwrap_or_else(|e| panic!("{label}: {e}"));
            Learned { label, domain, k, instances, outcome }
        })
        .collect()
}

fn criterion_4(learned: &[Learned]) -> Verdict {
    let targets = [("gripper w1", 2, 2, 4), ("gripper w2", 1, 1, 4), ("blocks-clear w1", 1, 1, 4), ("visitall w1", 1, 1, 2)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, phi, rules, c) in targets {
        let l = learned.iter().find(|l| l.label == label).unwrap();
        let s = &l.outcome.sketch;
        let verified = l.instances.iter().all(|inst| {
            let v = s.valuations(&inst.task, &inst.space);
            check_acyclicity(s, &inst.space, &v, &Scope::Closest).acyclic
                && check_width(&inst.task, s, &inst.space, &v, l.k, WidthMode::Strict).bounded
        });
        let hit = s.num_features() == phi && s.rules.len() == rules && s.max_complexity() <= c && verified;
        ok &= hit;
        parts.push(format!("{label} ({}, {}) C={}", s.num_features(), s.rules.len(), s.max_complexity()));
    }
    if ok {
        Verdict::Pass(parts.join("; "))
    } else {
        Verdict::Fail(parts.join("; "))
    }
}

/// Every solver run inside the incremental loop asserts the post-condition;
/// here each final sketch is checked once more on its last training set.
fn criterion_5(learned: &[Learned]) -> Verdict {
    let runs: usize = learned.iter().map(|l| l.outcome.audit.len()).sum();
    for l in learned {
        let Some(last) = l.outcome.audit.last() else { continue };
        for inst in l.instances.iter().filter(|i| last.training.contains(&i.name)) {
            let v = l.outcome.sketch.valuations(&inst.task, &inst.space);
            let w = check_width(&inst.task, &l.outcome.sketch, &inst.space, &v, l.k, WidthMode::SWidth);
            let reach = check_acyclicity(&l.outcome.sketch, &inst.space, &v, &Scope::Closest);
            if !w.bounded || !reach.acyclic {
                return Verdict::Fail(format!("{} violates the post-condition on {}", l.label, inst.name));
            }
        }
    }
    Verdict::Pass(format!("{runs} solver runs, all post-conditions held"))
}

fn criterion_6(learned: &[Learned]) -> Verdict {
    let tests: Vec<(&str, Vec<Instance>)> = vec![
        ("gripper w1", (3..=12).map(|i| domains::gripper(2 * i)).collect()),
        (
            "visitall w1",
            [(3, 4), (4, 4), (4, 5), (5, 5), (5, 6), (6, 6), (6, 7), (7, 7), (6, 9), (6, 10)]
                .iter()
                .enumerate()
                .map(|(i, (w, h))| domains::visitall(*w, *h, i as u64 + 1))
                .collect(),
        ),
        ("miconic w1", (2..=11).map(|i| domains::miconic(i + 2, 2 * i, i as u64)).collect()),
    ];
    let mut parts = Vec::new();
    for (label, instances) in tests {
        let l = learned.iter().find(|l| l.label == label).unwrap();
        let config = SiwrConfig { k_max: 1, strict: false, max_episodes: None };
        let mut solved = 0;
        let mut max_width = 0;
        for inst in &instances {
            let t = task(l.domain, inst);
            let r = match siwr(&t, &l.outcome.sketch, &config) {
                Ok(r) => r,
                Err(e) => return Verdict::Fail(format!("{label} on {}: {e}", inst.name)),
            };
            if t.validate_plan(&r.plan).is_err() {
                return Verdict::Fail(format!("{label} on {}: plan does not replay to a goal", inst.name));
            }
            max_width = max_width.max(r.max_width());
            solved += 1;
        }
        if max_width > 1 {
            return Verdict::Fail(format!("{label}: width {max_width}"));
        }
        parts.push(format!("{label} {solved}/10"));
    }
    Verdict::Pass(format!("{} with max width <= 1", parts.join(", ")))
}

fn clingo() -> Option<Vec<String>> {
    let works = |cmd: &[&str]| {
        Command::new(cmd[0]).args(&cmd[1..]).arg("--version").output().map(|o| o.status.success()).unwrap_or(false)
    };
    if works(&["clingo"]) {
        Some(vec!["clingo".into()])
    } else if works(&["python3", "-m", "clingo"]) {
        Some(vec!["python3".into(), "-m".into(), "clingo".into()])
    } else {
        None
    }
}

fn criterion_7() -> Verdict {
    let Some(cmd) = clingo() else { return Verdict::Skip("no ASP system found".into()) };
    let inst = &training(domains::GRIPPER, vec![domains::gripper(1)])[0];
    let states = inst.space.states().to_vec();
    let pool = generate_pool(&[Sample { task: &inst.task, states: &states }], &PoolConfig::default()).unwrap();
    let facts = build_facts(&[(&inst.task, &inst.space)], &pool, 1).unwrap();
    let config = LearnConfig { k: 1, ..LearnConfig::default() };
    let internal = solve(&facts, &pool, &config).unwrap().objective;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gripper.lp");
    std::fs::write(&path, emit_asp(&facts, &config)).unwrap();
    let out = Command::new(&cmd[0]).args(&cmd[1..]).arg(&path).args(["--outf=2", "--quiet=1"]).output().unwrap();
    let Ok(json) = serde_json::from_slice::<serde_json::Value>(&out.stdout) else {
        return Verdict::Fail(format!("ASP output unreadable: {}", String::from_utf8_lossy(&out.stderr)));
    };
    let external = json["Models"]["Costs"][0].as_u64();
    let optimum = json["Result"] == "OPTIMUM FOUND";
    let msg = format!("gripper-1 k=1: internal {internal}, external {external:?}");
    if optimum && external == Some(internal as u64) {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn report(n: usize, start: Instant, v: Verdict) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (tag, msg, ok) = match v {
        Verdict::Pass(m) => ("PASS", m, true),
        Verdict::Fail(m) => ("FAIL", m, false),
        Verdict::Skip(m) => ("SKIP", m, true),
    };
    println!("criterion {n}: {tag} ({msg}; {secs:.1}s)");
    ok
}

fn main() -> ExitCode {
    let mut ok = true;
    let t = Instant::now();
    ok &= report(1, t, criterion_1());
    let t = Instant::now();
    let subs = subproblems();
    ok &= report(2, t, criterion_2(&subs));
    ok &= report(3, t, criterion_3(&subs));
    let t = Instant::now();
    let learned = learn_all();
    ok &= report(4, t, criterion_4(&learned));
    ok &= report(5, t, criterion_5(&learned));
    let t = Instant::now();
    ok &= report(6, t, criterion_6(&learned));
    let t = Instant::now();
    ok &= report(7, t, criterion_7());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sketchforge::learn::{emit_asp, training_facts, LearnConfig, TrainingInstance};
use sketchforge::pddl::load_task;
use sketchforge::sketch::parse_sketch;
use sketchforge::statespace::StateSpace;
use sketchforge_domains::{self as domains, sketches, Instance};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchforge")).args(args).output().unwrap()
}

fn text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        Files { dir: tempfile::tempdir().unwrap() }
    }

    fn put(&self, name: &str, content: &str) -> String {
        let p = self.dir.path().join(name);
        fs::write(&p, content).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn instances(&self, list: &[Instance]) -> Vec<String> {
        list.iter().map(|i| self.put(&format!("{}.pddl", i.name), &i.pddl)).collect()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn args<'a>(head: &[&'a str], tail: &'a [String]) -> Vec<&'a str> {
    head.iter().copied().chain(tail.iter().map(String::as_str)).collect()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", text(out)))
}

#[test]
fn expand_reports_space_counts() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let inst = domains::gripper(1);
    let problem = f.put("p.pddl", &inst.pddl);
    let out = run(&["--json", "expand", "--domain", &domain, "--instance", &problem]);
    assert!(out.status.success());
    let report = json(&out);
    let sp = StateSpace::expand(&load_task(domains::GRIPPER, &inst.pddl).unwrap(), 10_000).unwrap();
    assert_eq!(report["states"], sp.len());
    assert_eq!(report["states"], 8);
    assert_eq!(report["dead_ends"], 0);
}

#[test]
fn expand_dump_is_written() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let problem = f.put("p.pddl", &domains::gripper(1).pddl);
    let dump = f.path("nested/space.json");
    let out = run(&["expand", "--domain", &domain, "--instance", &problem, "--dump", dump.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dump).unwrap()).unwrap();
    assert_eq!(v["states"].as_array().unwrap().len(), 8);
}

#[test]
fn over_cap_instance_exits_with_capacity_code() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let problem = f.put("p.pddl", &domains::gripper(3).pddl);
    let out = run(&["expand", "--domain", &domain, "--instance", &problem, "--max-states", "5"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn missing_file_fails_before_compute() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let missing = f.path("absent.pddl");
    let out = run(&["expand", "--domain", &domain, "--instance", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn malformed_problem_exits_with_parse_code() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let problem = f.put("p.pddl", "(define (problem broken)");
    let out = run(&["expand", "--domain", &domain, "--instance", &problem]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn learn_gripper_width_two_writes_one_rule() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let problems = f.instances(&(1..=3).map(domains::gripper).collect::<Vec<_>>());
    let out_dir = f.path("learned");
    let out = run(&args(&["learn", "--domain", &domain, "-k", "2", "--out", out_dir.to_str().unwrap(), "--instances"], &problems));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sketch = parse_sketch(&fs::read_to_string(out_dir.join("sketch.txt")).unwrap()).unwrap();
    assert_eq!(sketch.rules.len(), 1);
    assert_eq!(sketch.num_features(), 1);
    let audit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("audit.json")).unwrap()).unwrap();
    assert!(!audit.as_array().unwrap().is_empty());
}

#[test]
fn learn_is_byte_identical_across_runs() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let problems = f.instances(&(1..=2).map(domains::gripper).collect::<Vec<_>>());
    let outputs: Vec<(String, String, String)> = ["a", "b"]
        .iter()
        .map(|d| {
            let dir = f.path(d);
            let out = run(&args(&["--json", "learn", "--domain", &domain, "--out", dir.to_str().unwrap(), "--instances"], &problems));
            assert!(out.status.success());
            (
                text(&out),
                fs::read_to_string(dir.join("sketch.txt")).unwrap(),
                fs::read_to_string(dir.join("audit.json")).unwrap(),
            )
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_file_sets_width_and_flags_override_it() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let problems = f.instances(&[domains::gripper(1), domains::gripper(2)]);
    let config = f.put("learn.toml", "k = 2\nmax_rules = 4\n");
    let dir = f.path("out");
    let base = ["--config", config.as_str(), "learn", "--domain", domain.as_str(), "--out", dir.to_str().unwrap()];
    let out = run(&args(&[&base[..], &["--instances"]].concat(), &problems));
    assert!(out.status.success());
    assert_eq!(parse_sketch(&fs::read_to_string(dir.join("sketch.txt")).unwrap()).unwrap().rules.len(), 1);
    let out = run(&args(&[&base[..], &["-k", "3", "--instances"]].concat(), &problems));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_file_is_a_parse_error() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let problems = f.instances(&[domains::gripper(1)]);
    let config = f.put("learn.toml", "k = \"two\"\n");
    let out = run(&args(&["--config", &config, "learn", "--domain", &domain, "--instances"], &problems));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn learn_rejects_width_three_and_empty_instance_list() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let problems = f.instances(&[domains::gripper(1)]);
    let out = run(&args(&["learn", "--domain", &domain, "-k", "3", "--instances"], &problems));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("width bound 3"));
    let out = run(&["learn", "--domain", &domain, "--instances"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_miconic_sketch_passes_at_one_and_fails_at_zero() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::MICONIC);
    let sketch = f.put("miconic.sketch", sketches::MICONIC_K1);
    let problems = f.instances(&[domains::miconic(2, 1, 1), domains::miconic(3, 2, 2)]);
    let out = run(&args(&["verify", "--domain", &domain, "--sketch", &sketch, "-k", "1", "--instances"], &problems));
    assert!(out.status.success(), "{}", text(&out));
    assert!(text(&out).contains("verdict: pass"));
    let out = run(&args(&["--json", "verify", "--domain", &domain, "--sketch", &sketch, "-k", "0", "--instances"], &problems));
    assert_eq!(out.status.code(), Some(7));
    let reports = json(&out);
    let states = reports[0]["width"]["states"].as_array().unwrap();
    assert!(!states.is_empty());
    assert!(states.iter().any(|s| s["width"].is_null()));
}

#[test]
fn verify_rejects_unknown_feature() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::MICONIC);
    let sketch = f.put("bad.sketch", "feature served = n_count(c_primitive(served,0))\nrule {} -> { inc(boarded) }\n");
    let problems = f.instances(&[domains::miconic(2, 1, 1)]);
    let out = run(&args(&["verify", "--domain", &domain, "--sketch", &sketch, "--instances"], &problems));
    assert_eq!(out.status.code(), Some(3));
}

fn replays(domain: &str, inst: &Instance, plan_file: &Path) -> bool {
    let task = load_task(domain, &inst.pddl).unwrap();
    let lines: Vec<String> = fs::read_to_string(plan_file).unwrap().lines().map(str::to_string).collect();
    let ids: Vec<_> = lines
        .iter()
        .map(|l| (0..task.actions.len() as u32).find(|a| task.action_text(*a) == *l).expect("known action"))
        .collect();
    task.validate_plan(&ids).is_ok()
}

#[test]
fn plan_with_width_one_sketch() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let sketch = f.put("gripper.sketch", sketches::GRIPPER_K1);
    let inst = domains::gripper(8);
    let problem = f.put("p.pddl", &inst.pddl);
    let plan = f.path("plan.txt");
    let out = run(&[
        "--json", "plan", "--domain", &domain, "--instance", &problem, "--sketch", &sketch, "--k-max", "1", "--out",
        plan.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["max_width"].as_u64().unwrap() <= 1);
    assert!(replays(domains::GRIPPER, &inst, &plan));
}

#[test]
fn plan_without_sketch_runs_siw() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let inst = domains::gripper(2);
    let problem = f.put("p.pddl", &inst.pddl);
    let plan = f.path("plan.txt");
    let out = run(&["plan", "--domain", &domain, "--instance", &problem, "--out", plan.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(replays(domains::GRIPPER, &inst, &plan));
}

#[test]
fn unsolvable_instance_exits_with_search_code() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let pddl = domains::gripper(1).pddl.replace("(free left)", "").replace("(free right)", "");
    let problem = f.put("p.pddl", &pddl);
    let out = run(&["plan", "--domain", &domain, "--instance", &problem]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn emit_asp_matches_library_and_creates_path() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let list = vec![domains::gripper(1), domains::gripper(2)];
    let problems = f.instances(&list);
    let target = f.path("deep/dir/program.lp");
    let out = run(&args(&["emit-asp", "--domain", &domain, "--out", target.to_str().unwrap(), "--instances"], &problems));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let training: Vec<TrainingInstance> = list
        .iter()
        .map(|i| {
            let task = load_task(domains::GRIPPER, &i.pddl).unwrap();
            let space = StateSpace::expand(&task, 10_000).unwrap();
            TrainingInstance { name: task.problem_name.clone(), task, space }
        })
        .collect();
    let refs: Vec<&TrainingInstance> = training.iter().collect();
    let config = LearnConfig::default();
    let (_, facts) = training_facts(&refs, &config).unwrap();
    assert_eq!(fs::read_to_string(target).unwrap(), emit_asp(&facts, &config));
}

#[test]
fn emit_asp_rejects_empty_instance_list() {
    let f = Files::new();
    let domain = f.put("domain.pddl", domains::GRIPPER);
    let out = run(&["emit-asp", "--domain", &domain, "--instances"]);
    assert_eq!(out.status.code(), Some(2));
}

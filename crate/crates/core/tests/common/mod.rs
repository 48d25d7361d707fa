#![allow(dead_code)]

use sketchforge::pddl::load_task;
use sketchforge::statespace::StateSpace;
use sketchforge::task::GroundTask;
use sketchforge_domains::Instance;

pub fn task(domain: &str, instance: &Instance) -> GroundTask {
    load_task(domain, &instance.pddl).unwrap_or_else(|e| panic!("{}: {e}", instance.name))
}

pub fn space(task: &GroundTask) -> StateSpace {
    StateSpace::expand(task, 10_000).unwrap()
}

/// Names of the objects in the true atoms of `pred` in `state`, as text tuples.
pub fn true_atoms(task: &GroundTask, state: &sketchforge::task::State, pred: &str) -> Vec<Vec<String>> {
    state
        .atoms()
        .iter()
        .map(|a| &task.atoms[*a as usize])
        .filter(|a| task.predicates[a.predicate as usize].name == pred)
        .map(|a| a.args.iter().map(|o| task.objects[*o as usize].name.clone()).collect())
        .collect()
}

pub fn training(domain: &str, instances: Vec<Instance>) -> Vec<sketchforge::learn::TrainingInstance> {
    instances
        .into_iter()
        .map(|i| {
            let t = task(domain, &i);
            let sp = space(&t);
            sketchforge::learn::TrainingInstance { name: i.name, task: t, space: sp }
        })
        .collect()
}

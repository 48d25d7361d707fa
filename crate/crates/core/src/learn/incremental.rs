//! Incremental learning: retrain on the smallest instance the current sketch
//! fails on until every instance passes.

use serde::Serialize;

use crate::dl::{generate_pool, FeaturePool, PoolConfig, Sample};
use crate::sketch::Sketch;
use crate::statespace::StateSpace;
use crate::task::GroundTask;
use crate::verify::{check_acyclicity, check_width, Scope, WidthMode};

use super::{build_facts, solve, LearnConfig, LearnError, LearnFacts, SolverStats};

pub struct TrainingInstance {
    pub name: String,
    pub task: GroundTask,
    pub space: StateSpace,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditEntry {
    pub iteration: usize,
    pub failed: String,
    pub training: Vec<String>,
    pub pool_size: usize,
    pub objective: usize,
    pub features: usize,
    pub rules: usize,
    pub strict_c6: bool,
    pub stats: SolverStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct LearnOutcome {
    pub sketch: Sketch,
    pub objective: usize,
    pub audit: Vec<AuditEntry>,
}

/// Whether `sketch` has strict width above `k` or a closest-subgoal cycle on
/// the instance. A sketch without rules fails wherever a state is alive: the
/// theory asks every alive state for a rule-satisfying subgoal.
fn fails(sketch: &Sketch, inst: &TrainingInstance, k: usize) -> bool {
    if sketch.rules.is_empty() {
        return inst.space.num_alive() > 0;
    }
    let v = sketch.valuations(&inst.task, &inst.space);
    !check_acyclicity(sketch, &inst.space, &v, &Scope::Closest).acyclic
        || !check_width(&inst.task, sketch, &inst.space, &v, k, WidthMode::Strict).bounded
}

/// Post-condition of every solver run: s-width at most `k` and acyclicity
/// within the tuple-graph horizons on each training space.
pub fn check_learned(sketch: &Sketch, training: &[&TrainingInstance], facts: &LearnFacts) -> Result<(), LearnError> {
    for (inst, f) in training.iter().zip(&facts.instances) {
        let v = sketch.valuations(&inst.task, &inst.space);
        let acyclic = check_acyclicity(sketch, &inst.space, &v, &Scope::Within(f.horizons()));
        if !acyclic.acyclic {
            return Err(LearnError::PostCondition {
                instance: inst.name.clone(),
                detail: format!("cycle through states {:?}", acyclic.witness.unwrap_or_default()),
            });
        }
        let width = check_width(&inst.task, sketch, &inst.space, &v, facts.k, WidthMode::SWidth);
        if let Some(bad) = width.states.iter().find(|e| e.width.is_none() || e.dead_end_subgoal) {
            return Err(LearnError::PostCondition {
                instance: inst.name.clone(),
                detail: format!("state {} has s-width above {} or a dead-end subgoal", bad.state, facts.k),
            });
        }
    }
    Ok(())
}

/// Feature pool over every state of the training spaces and the solver
/// facts built from it.
pub fn training_facts(
    training: &[&TrainingInstance],
    config: &LearnConfig,
) -> Result<(FeaturePool, LearnFacts), LearnError> {
    config.validate()?;
    if training.is_empty() {
        return Err(LearnError::NoInstances);
    }
    let states: Vec<Vec<_>> = training.iter().map(|t| t.space.states().to_vec()).collect();
    let samples: Vec<Sample> =
        training.iter().zip(&states).map(|(t, s)| Sample { task: &t.task, states: s }).collect();
    let pool_config = PoolConfig {
        max_complexity: config.max_complexity,
        include_distance: config.include_distance,
        ..PoolConfig::default()
    };
    let pool = generate_pool(&samples, &pool_config)?;
    let pairs: Vec<(&GroundTask, &StateSpace)> = training.iter().map(|t| (&t.task, &t.space)).collect();
    let facts = build_facts(&pairs, &pool, config.k)?;
    Ok((pool, facts))
}

/// Learns on the training subset: pool over its states, facts, solve and
/// post-condition check.
pub fn learn_on(
    training: &[&TrainingInstance],
    config: &LearnConfig,
) -> Result<(super::Solution, usize), LearnError> {
    let (pool, facts) = training_facts(training, config)?;
    let solution = solve(&facts, &pool, config)?;
    check_learned(&solution.sketch, training, &facts)?;
    Ok((solution, pool.len()))
}

/// Starting from the empty sketch, repeatedly takes the smallest instance
/// (by state count, then name) the current sketch fails on, trains on it
/// alone if it is larger than every previous training instance and adds it
/// otherwise, and re-solves.
pub fn incremental_learn(instances: &[TrainingInstance], config: &LearnConfig) -> Result<LearnOutcome, LearnError> {
    config.validate()?;
    if instances.is_empty() {
        return Err(LearnError::NoInstances);
    }
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by(|a, b| {
        let (x, y) = (&instances[*a], &instances[*b]);
        (x.space.len(), &x.name).cmp(&(y.space.len(), &y.name))
    });
    order.truncate(config.max_instances);
    let mut config = config.clone();
    let mut outcome = LearnOutcome { sketch: Sketch::default(), objective: 0, audit: Vec::new() };
    let mut training: Vec<usize> = Vec::new();
    for iteration in 0..config.max_iterations {
        let Some(failed) = order.iter().copied().find(|i| fails(&outcome.sketch, &instances[*i], config.k)) else {
            return Ok(outcome);
        };
        log::info!("iteration {iteration}: sketch fails on {}", instances[failed].name);
        if training.contains(&failed) {
            if config.strict_c6 {
                return Err(LearnError::NonTermination(iteration));
            }
            config.strict_c6 = true;
        } else if training.iter().all(|t| instances[*t].space.len() < instances[failed].space.len()) {
            training = vec![failed];
        } else {
            training.push(failed);
        }
        let chosen: Vec<&TrainingInstance> = training.iter().map(|i| &instances[*i]).collect();
        let (solution, pool_size) = learn_on(&chosen, &config)?;
        outcome.audit.push(AuditEntry {
            iteration,
            failed: instances[failed].name.clone(),
            training: chosen.iter().map(|t| t.name.clone()).collect(),
            pool_size,
            objective: solution.objective,
            features: solution.sketch.num_features(),
            rules: solution.sketch.rules.len(),
            strict_c6: config.strict_c6,
            stats: solution.stats,
        });
        outcome.sketch = solution.sketch;
        outcome.objective = solution.objective;
    }
    Err(LearnError::NonTermination(config.max_iterations))
}

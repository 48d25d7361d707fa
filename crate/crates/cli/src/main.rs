//! `sketchforge` command line: expand, learn, verify, plan and emit-asp.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sketchforge::dl::DlError;
use sketchforge::learn::{emit_asp, incremental_learn, training_facts, Backend, LearnConfig, LearnError, TrainingInstance};
use sketchforge::pddl::{load_task, PddlError};
use sketchforge::search::{siw, siwr, SearchError, SiwResult, SiwrConfig};
use sketchforge::sketch::{parse_sketch, Sketch, SketchError};
use sketchforge::statespace::{StateSpace, StateSpaceError};
use sketchforge::task::GroundTask;
use sketchforge::verify::{verify, VerificationReport, WidthMode};

/// Exit status classes.
mod code {
    pub const OTHER: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const CAPACITY: u8 = 4;
    pub const UNSAT: u8 = 5;
    pub const SEARCH: u8 = 6;
    pub const VERIFY: u8 = 7;
}

#[derive(Parser)]
#[command(name = "sketchforge", version, about = "Width-based planning with learned policy sketches")]
struct Cli {
    /// Print machine-readable JSON instead of text reports.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file with learner settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand the reachable state space of one instance.
    Expand {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        max_states: usize,
        /// Write the full space as JSON to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Learn a sketch incrementally from a set of instances.
    Learn {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        overrides: Overrides,
        /// Directory for `sketch.txt` and `audit.json`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check acyclicity and width of a sketch on each instance.
    Verify {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        sketch: PathBuf,
        #[arg(short, long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
        #[arg(long, default_value_t = 10_000)]
        max_states: usize,
    },
    /// Solve one instance with SIW_R, or plain SIW without a sketch.
    Plan {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        sketch: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        k_max: usize,
        /// Run IW(k_max) directly in every episode.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        max_episodes: Option<usize>,
        /// Write the plan, one action per line.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the ASP program (rules and training facts) for a set of instances.
    EmitAsp {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "sketch.lp")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    domain: PathBuf,
    /// Problem files.
    #[arg(long, num_args = 1.., required = true)]
    instances: Vec<PathBuf>,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(long)]
    max_rules: Option<usize>,
    #[arg(long)]
    max_complexity: Option<usize>,
    #[arg(long)]
    include_distance: bool,
    #[arg(long)]
    max_states: Option<usize>,
    #[arg(long)]
    max_features: Option<usize>,
    /// Solver budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    SWidth,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Internal,
    AspEmit,
}

impl Overrides {
    fn apply(&self, config: &mut LearnConfig) {
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(m) = self.max_rules {
            config.max_rules = m;
        }
        if let Some(c) = self.max_complexity {
            config.max_complexity = c;
        }
        if self.include_distance {
            config.include_distance = true;
        }
        if let Some(n) = self.max_states {
            config.max_states = n;
        }
        if let Some(n) = self.max_features {
            config.max_features = n;
        }
        if let Some(t) = self.timeout {
            config.timeout = Some(t);
        }
        match self.backend {
            Some(BackendArg::Internal) => config.backend = Backend::Internal,
            Some(BackendArg::AspEmit) => config.backend = Backend::AspEmit,
            None => {}
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn learn_config(file: Option<&Path>, overrides: &Overrides) -> Result<LearnConfig> {
    let mut config = match file {
        Some(p) => toml::from_str(&read(p)?).with_context(|| format!("invalid config {}", p.display()))?,
        None => LearnConfig::default(),
    };
    overrides.apply(&mut config);
    config.validate()?;
    Ok(config)
}

/// Reads and grounds every problem before any expansion starts.
fn load_all(domain: &Path, instances: &[PathBuf]) -> Result<Vec<GroundTask>> {
    if instances.is_empty() {
        bail!(LearnError::NoInstances);
    }
    let domain_text = read(domain)?;
    let texts: Vec<String> = instances.iter().map(|p| read(p)).collect::<Result<_>>()?;
    instances
        .iter()
        .zip(&texts)
        .map(|(p, t)| load_task(&domain_text, t).with_context(|| format!("in {}", p.display())))
        .collect()
}

/// Expands each task, dropping (with a warning) those above the state cap.
fn training_set(tasks: Vec<GroundTask>, max_states: usize) -> Result<Vec<TrainingInstance>> {
    let mut out = Vec::new();
    for task in tasks {
        match StateSpace::expand(&task, max_states) {
            Ok(space) => out.push(TrainingInstance { name: task.problem_name.clone(), task, space }),
            Err(StateSpaceError::CapacityExceeded(n)) => {
                log::warn!("skipping {}: more than {n} states", task.problem_name)
            }
            Err(e) => return Err(e.into()),
        }
    }
    if out.is_empty() {
        bail!(LearnError::NoInstances);
    }
    Ok(out)
}

fn load_sketch(path: &Path, tasks: &[GroundTask]) -> Result<Sketch> {
    let sketch = parse_sketch(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    for t in tasks {
        sketch.check(t).with_context(|| format!("sketch {} on {}", path.display(), t.problem_name))?;
    }
    Ok(sketch)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct ExpandReport {
    instance: String,
    states: usize,
    alive: usize,
    dead_ends: usize,
    goals: usize,
}

#[derive(Serialize)]
struct PlanReport<'a> {
    instance: String,
    plan: Vec<String>,
    max_width: usize,
    mean_width: f64,
    #[serde(flatten)]
    result: &'a SiwResult,
}

#[derive(Debug, thiserror::Error)]
#[error("verification failed")]
struct Failed;

fn run(cli: Cli) -> Result<()> {
    let json = cli.json;
    match cli.command {
        Command::Expand { domain, instance, max_states, dump } => {
            let task = load_all(&domain, &[instance])?.remove(0);
            let space = StateSpace::expand(&task, max_states)?;
            let report = ExpandReport {
                instance: task.problem_name.clone(),
                states: space.len(),
                alive: space.num_alive(),
                dead_ends: space.num_dead_ends(),
                goals: space.num_goals(),
            };
            if let Some(p) = dump {
                write(&p, &serde_json::to_string(&space.dump(&task))?)?;
            }
            if json {
                print_json(&report)?;
            } else {
                println!(
                    "{}: {} states, {} alive, {} dead ends, {} goals",
                    report.instance, report.states, report.alive, report.dead_ends, report.goals
                );
            }
        }
        Command::Learn { inputs, overrides, out } => {
            let config = learn_config(cli.config.as_deref(), &overrides)?;
            let tasks = load_all(&inputs.domain, &inputs.instances)?;
            let training = training_set(tasks, config.max_states)?;
            if config.backend == Backend::AspEmit {
                let refs: Vec<&TrainingInstance> = training.iter().collect();
                let (_, facts) = training_facts(&refs, &config)?;
                let path = out.join("sketch.lp");
                write(&path, &emit_asp(&facts, &config))?;
                println!("wrote {}", path.display());
                return Ok(());
            }
            let outcome = incremental_learn(&training, &config)?;
            write(&out.join("sketch.txt"), &outcome.sketch.to_string())?;
            write(&out.join("audit.json"), &serde_json::to_string_pretty(&outcome.audit)?)?;
            if json {
                print_json(&outcome)?;
            } else {
                print!("{}", outcome.sketch);
                println!(
                    "objective {} ({} features, {} rules, {} iterations)",
                    outcome.objective,
                    outcome.sketch.num_features(),
                    outcome.sketch.rules.len(),
                    outcome.audit.len()
                );
            }
        }
        Command::Verify { inputs, sketch, k, mode, max_states } => {
            let tasks = load_all(&inputs.domain, &inputs.instances)?;
            let sketch = load_sketch(&sketch, &tasks)?;
            let mode = match mode {
                Mode::Strict => WidthMode::Strict,
                Mode::SWidth => WidthMode::SWidth,
            };
            let mut reports: Vec<VerificationReport> = Vec::new();
            for task in &tasks {
                let space = StateSpace::expand(task, max_states)?;
                reports.push(verify(task, &sketch, &space, k, mode));
            }
            if json {
                print_json(&reports)?;
            } else {
                for r in &reports {
                    print!("{r}");
                }
            }
            if !reports.iter().all(VerificationReport::passed) {
                return Err(Failed.into());
            }
        }
        Command::Plan { domain, instance, sketch, k_max, strict, max_episodes, out } => {
            let task = load_all(&domain, &[instance])?.remove(0);
            let sketch = sketch.map(|p| load_sketch(&p, std::slice::from_ref(&task))).transpose()?;
            let result = match &sketch {
                Some(s) => siwr(&task, s, &SiwrConfig { k_max, strict, max_episodes })?,
                None => siw(&task, k_max)?,
            };
            task.validate_plan(&result.plan).context("plan does not reach the goal")?;
            let plan: Vec<String> = result.plan.iter().map(|a| task.action_text(*a)).collect();
            if let Some(p) = out {
                write(&p, &plan.iter().map(|a| format!("{a}\n")).collect::<String>())?;
            }
            let report = PlanReport {
                instance: task.problem_name.clone(),
                max_width: result.max_width(),
                mean_width: result.mean_width(),
                plan,
                result: &result,
            };
            if json {
                print_json(&report)?;
            } else {
                for a in &report.plan {
                    println!("{a}");
                }
                println!(
                    "; {}: length {}, {} episodes, max width {}, mean width {:.2}, {} expanded",
                    report.instance,
                    report.plan.len(),
                    result.episodes.len(),
                    report.max_width,
                    report.mean_width,
                    result.expanded
                );
            }
        }
        Command::EmitAsp { inputs, overrides, out } => {
            let config = learn_config(cli.config.as_deref(), &overrides)?;
            let tasks = load_all(&inputs.domain, &inputs.instances)?;
            let training = training_set(tasks, config.max_states)?;
            let refs: Vec<&TrainingInstance> = training.iter().collect();
            let (_, facts) = training_facts(&refs, &config)?;
            write(&out, &emit_asp(&facts, &config))?;
            if !json {
                println!("wrote {}", out.display());
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<PddlError>() || cause.is::<SketchError>() || cause.is::<DlError>() || cause.is::<toml::de::Error>() {
            return code::PARSE;
        }
        if cause.is::<StateSpaceError>() {
            return code::CAPACITY;
        }
        if cause.is::<SearchError>() {
            return code::SEARCH;
        }
        if cause.is::<Failed>() {
            return code::VERIFY;
        }
        if let Some(e) = cause.downcast_ref::<LearnError>() {
            return match e {
                LearnError::Config(_) | LearnError::NoInstances => code::USAGE,
                LearnError::Unsatisfiable { .. } | LearnError::Timeout { .. } => code::UNSAT,
                LearnError::PostCondition { .. } | LearnError::NonTermination(_) => code::VERIFY,
                LearnError::StateSpace(_) => code::CAPACITY,
                LearnError::Dl(_) => code::OTHER,
            };
        }
    }
    code::OTHER
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(code::USAGE);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

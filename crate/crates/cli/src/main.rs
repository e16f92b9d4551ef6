//! `gsp`: train, evaluate, generate and inspect.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use gsp_core::eval::{evaluate, summarize, write_csv, write_ndjson, EvalMode, EvalOptions};
use gsp_core::generators::{generate, Bundled, GenParams};
use gsp_core::graph::{encode, GoalMode, RelationTable};
use gsp_core::grounding::{ground, GroundTask};
use gsp_core::net::{OptimizerKind, QNetwork};
use gsp_core::orchestration::{self, PoolOrder, TrainConfig, NETWORK_FILE};
use gsp_core::par::Exec;
use gsp_core::pddl::{parse_domain, parse_instance, Domain};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "gsp", version, about = "Learned action-value search planner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a network on a directory of instances.
    Train(TrainArgs),
    /// Evaluate a checkpoint and baselines on test instances.
    Eval(EvalArgs),
    /// Write random solvable instances of a bundled domain.
    Gen(GenArgs),
    /// Print a grounded task and optionally its graph encoding.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    domain: PathBuf,
    /// Directory of training instances (*.pddl).
    #[arg(long)]
    instances: PathBuf,
    /// Validation instances; defaults to the training set.
    #[arg(long)]
    val: Option<PathBuf>,
    /// TOML file with TrainConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// One worker, sequential math, logical clock.
    #[arg(long)]
    single_thread: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    episode_seconds: Option<f64>,
    #[arg(long)]
    episode_expansions: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    buffer_batches: Option<usize>,
    #[arg(long)]
    lr_gnn: Option<f64>,
    #[arg(long)]
    lr_readout: Option<f64>,
    /// adam or sgd.
    #[arg(long, value_parser = parse_optimizer)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    refresh_passes: Option<u64>,
    #[arg(long)]
    validation_passes: Option<u64>,
    #[arg(long)]
    pool_beta: Option<f64>,
    /// informative or literal.
    #[arg(long, value_parser = parse_pool_order)]
    pool_order: Option<PoolOrder>,
    #[arg(long, allow_hyphen_values = true)]
    r_bot: Option<f64>,
    #[arg(long)]
    total_seconds: Option<f64>,
    #[arg(long)]
    max_episodes: Option<u64>,
    #[arg(long)]
    max_learner_steps: Option<u64>,
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    learner_steps_per_episode: Option<u64>,
    #[arg(long)]
    publish_steps: Option<u64>,
    #[arg(long)]
    metrics_seconds: Option<f64>,
    #[arg(long)]
    validation_max_steps: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// distinguished or literal.
    #[arg(long, value_parser = parse_goal_mode)]
    goal_mode: Option<GoalMode>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint directory or network file.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    instances: PathBuf,
    /// Comma-separated: greedy, wastar, gbfs, hmax, blind.
    #[arg(long, value_delimiter = ',', default_value = "greedy,wastar")]
    modes: Vec<EvalMode>,
    #[arg(long, default_value_t = 2.0)]
    w: f64,
    /// Frontier pops per batch.
    #[arg(long, short = 'b', default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 10_000)]
    max_expansions: u64,
    #[arg(long, default_value_t = 3600.0)]
    max_seconds: f64,
    /// Write zero wall times so results are reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    single_thread: bool,
    /// Directory for results.csv, results.ndjson, summary.csv, summary.ndjson.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// blocksworld, gripper, spanner or mini-sokoban.
    domain: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    balls: Option<usize>,
    #[arg(long)]
    nuts: Option<usize>,
    #[arg(long)]
    spanners: Option<usize>,
    #[arg(long)]
    locations: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    stones: Option<usize>,
    #[arg(long)]
    walls: Option<usize>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    instance: PathBuf,
    /// Also dump the graph of the initial state.
    #[arg(long)]
    graph: bool,
    #[arg(long, value_parser = parse_goal_mode, default_value = "distinguished")]
    goal_mode: GoalMode,
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    match s {
        "adam" => Ok(OptimizerKind::Adam),
        "sgd" => Ok(OptimizerKind::Sgd),
        _ => Err("expected adam or sgd".into()),
    }
}

fn parse_pool_order(s: &str) -> Result<PoolOrder, String> {
    match s {
        "informative" => Ok(PoolOrder::Informative),
        "literal" => Ok(PoolOrder::Literal),
        _ => Err("expected informative or literal".into()),
    }
}

fn parse_goal_mode(s: &str) -> Result<GoalMode, String> {
    match s {
        "distinguished" => Ok(GoalMode::Distinguished),
        "literal" => Ok(GoalMode::Literal),
        _ => Err("expected distinguished or literal".into()),
    }
}

/// An error carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

trait Code<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, err: e.into() })
    }
}

fn load_domain(path: &Path) -> anyhow::Result<Domain> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_domain(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_task(dom: &Domain, path: &Path) -> anyhow::Result<GroundTask> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = parse_instance(&text, dom).with_context(|| format!("parsing {}", path.display()))?;
    ground(dom, &inst).with_context(|| format!("grounding {}", path.display()))
}

/// `*.pddl` files of `dir` other than `domain.pddl`, sorted by name, keyed
/// by file stem.
fn load_dir(dom: &Domain, dir: &Path) -> anyhow::Result<Vec<(String, Arc<GroundTask>)>> {
    let mut paths = Vec::new();
    for e in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let p = e?.path();
        if p.extension().is_some_and(|x| x == "pddl") && p.file_name().is_some_and(|n| n != "domain.pddl") {
            paths.push(p);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            Ok((stem, Arc::new(load_task(dom, p)?)))
        })
        .collect()
}

fn train_config(a: &TrainArgs) -> anyhow::Result<TrainConfig> {
    let mut c = match &a.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { c.$field = v; })* };
    }
    set!(seed, w, workers, episode_seconds, batch_size, buffer_batches, lr_gnn, lr_readout, optimizer);
    set!(refresh_passes, validation_passes, pool_beta, pool_order, r_bot, total_seconds);
    set!(learner_steps_per_episode, publish_steps, metrics_seconds, validation_max_steps);
    if a.episode_expansions.is_some() {
        c.episode_expansions = a.episode_expansions;
    }
    if a.max_episodes.is_some() {
        c.max_episodes = a.max_episodes;
    }
    if a.max_learner_steps.is_some() {
        c.max_learner_steps = a.max_learner_steps;
    }
    if let Some(v) = a.dim {
        c.net.dim = v;
    }
    if let Some(v) = a.layers {
        c.net.layers = v;
    }
    if let Some(v) = a.alpha {
        c.net.alpha = v;
    }
    if let Some(v) = a.goal_mode {
        c.net.goal_mode = v;
    }
    if a.deterministic {
        c.deterministic = true;
    }
    if a.single_thread {
        c.deterministic = true;
        c.workers = 1;
        c.exec = Exec::Sequential;
    }
    c.validate()?;
    Ok(c)
}

fn cmd_train(a: TrainArgs) -> Result<(), Failure> {
    let cfg = train_config(&a).code(EXIT_USAGE)?;
    let dom = load_domain(&a.domain).code(EXIT_DATA)?;
    let train: Vec<_> = load_dir(&dom, &a.instances).code(EXIT_DATA)?.into_iter().map(|(_, t)| t).collect();
    if train.is_empty() {
        return Err(anyhow!("no instances in {}", a.instances.display())).code(EXIT_DATA);
    }
    let val = match &a.val {
        Some(dir) => load_dir(&dom, dir).code(EXIT_DATA)?.into_iter().map(|(_, t)| t).collect(),
        None => train.clone(),
    };
    std::fs::create_dir_all(&a.out).code(EXIT_DATA)?;
    std::fs::write(a.out.join("config.toml"), cfg.to_toml()).code(EXIT_DATA)?;
    let sig = Arc::clone(train[0].signature());
    let report = orchestration::train(&cfg, &sig, &train, &val, &a.out).map_err(|e| {
        let code = match e {
            orchestration::OrchError::Config(_) => EXIT_USAGE,
            orchestration::OrchError::Io { .. } | orchestration::OrchError::NoInstances => EXIT_DATA,
            orchestration::OrchError::Net(gsp_core::net::NetError::DomainMismatch { .. }) => EXIT_DATA,
            _ => EXIT_INTERNAL,
        };
        Failure { code, err: e.into() }
    })?;
    println!(
        "episodes {} learner steps {} final coverage {:.3}",
        report.episodes, report.learner_steps, report.final_score.coverage
    );
    if let Some((id, score)) = &report.best {
        println!("best checkpoint ckpt_{id} coverage {:.3}", score.coverage);
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    if a.batch == 0 || !(a.w > 0.0) || a.max_expansions == 0 || !(a.max_seconds > 0.0) {
        return Err(anyhow!("--batch, --w, --max-expansions and --max-seconds must be positive")).code(EXIT_USAGE);
    }
    let net = match &a.checkpoint {
        Some(p) => {
            let file = if p.is_dir() { p.join(NETWORK_FILE) } else { p.clone() };
            Some(QNetwork::load(&file).with_context(|| format!("loading {}", file.display())).code(EXIT_DATA)?)
        }
        None => {
            if let Some(m) = a.modes.iter().find(|m| m.needs_network()) {
                return Err(anyhow!("mode {m} needs --checkpoint")).code(EXIT_USAGE);
            }
            None
        }
    };
    let dom = load_domain(&a.domain).code(EXIT_DATA)?;
    let instances = load_dir(&dom, &a.instances).code(EXIT_DATA)?;
    if instances.is_empty() {
        eprintln!("warning: no instances in {}", a.instances.display());
    }
    let opts = EvalOptions {
        w: a.w,
        batch: a.batch,
        max_expansions: a.max_expansions,
        max_time: Duration::from_secs_f64(a.max_seconds),
        timing: !a.no_timing,
        exec: if a.single_thread { Exec::Sequential } else { Exec::Parallel },
    };
    let q = net.as_ref().map(|n| n as &dyn gsp_core::qfunc::ActionValueFn);
    let rows = evaluate(q, &instances, &a.modes, &opts).map_err(|e| anyhow!(e)).code(EXIT_DATA)?;
    let summary = summarize(&rows);
    if let Some(out) = &a.out {
        std::fs::create_dir_all(out).code(EXIT_DATA)?;
        write_csv(&out.join("results.csv"), &rows).code(EXIT_DATA)?;
        write_ndjson(&out.join("results.ndjson"), &rows).code(EXIT_DATA)?;
        write_csv(&out.join("summary.csv"), &summary).code(EXIT_DATA)?;
        write_ndjson(&out.join("summary.ndjson"), &summary).code(EXIT_DATA)?;
    }
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
    println!("mode     solved  coverage  steps   expansions");
    for s in &summary {
        println!(
            "{:<8} {:>3}/{:<3} {:>8.3}  {:>6}  {:>10}",
            s.mode.name(),
            s.solved,
            s.instances,
            s.coverage,
            fmt(s.mean_steps),
            fmt(s.mean_expansions)
        );
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    let domain: Bundled = a.domain.parse().code(EXIT_USAGE)?;
    let mut p = GenParams::default();
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { p.$field = v; })* };
    }
    set!(blocks, balls, nuts, spanners, locations, width, height, stones, walls);
    let batch = generate(domain, &p, a.seed, a.count).code(EXIT_USAGE)?;
    if batch.shortfall {
        eprintln!(
            "warning: only {} distinct solvable instances found",
            batch.instances.len()
        );
    }
    std::fs::create_dir_all(&a.out).code(EXIT_DATA)?;
    std::fs::write(a.out.join("domain.pddl"), domain.domain_pddl()).code(EXIT_DATA)?;
    for g in &batch.instances {
        std::fs::write(a.out.join(format!("{}.pddl", g.name)), &g.pddl).code(EXIT_DATA)?;
    }
    println!("wrote {} instances to {}", batch.instances.len(), a.out.display());
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> Result<(), Failure> {
    let dom = load_domain(&a.domain).code(EXIT_DATA)?;
    let task = load_task(&dom, &a.instance).code(EXIT_DATA)?;
    println!("task {}", task.name());
    println!("objects {}", task.objects().len());
    println!("atoms {}", task.atoms().len());
    println!("actions {}", task.actions().len());
    println!("init {}", task.describe_state(task.init()));
    let goal: Vec<String> = task.goal().iter().map(|&g| task.atom_name(g)).collect();
    println!("goal {}", goal.join(" "));
    let app = task.applicable_actions(task.init());
    println!("applicable");
    for &a in &app {
        println!("  {}", task.action_name(a));
    }
    if a.graph {
        let table = RelationTable::from_signature(task.signature());
        let g = encode(&task, &table, task.init(), &app, a.goal_mode);
        print!("{}", g.dump(&task, &table));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Train(a) => cmd_train(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Inspect(a) => cmd_inspect(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

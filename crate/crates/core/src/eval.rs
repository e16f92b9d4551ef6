//! Evaluation of a network and the classical baselines on test instances.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::grounding::GroundTask;
use crate::heuristics::HMaxQ;
use crate::par::Exec;
use crate::qfunc::{ActionValueFn, ZeroQ};
use crate::search::{gbfs_solve, greedy_rollout, wastar_solve, Budget, EpisodeResult, Limit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Greedy,
    Wastar,
    Gbfs,
    Hmax,
    Blind,
}

impl EvalMode {
    pub const ALL: [EvalMode; 5] = [EvalMode::Greedy, EvalMode::Wastar, EvalMode::Gbfs, EvalMode::Hmax, EvalMode::Blind];

    pub fn name(self) -> &'static str {
        match self {
            EvalMode::Greedy => "greedy",
            EvalMode::Wastar => "wastar",
            EvalMode::Gbfs => "gbfs",
            EvalMode::Hmax => "hmax",
            EvalMode::Blind => "blind",
        }
    }

    /// Whether the mode evaluates a learned network.
    pub fn needs_network(self) -> bool {
        matches!(self, EvalMode::Greedy | EvalMode::Wastar | EvalMode::Gbfs)
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        EvalMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected greedy, wastar, gbfs, hmax or blind)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetHit {
    None,
    Expansions,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub instance: String,
    pub mode: EvalMode,
    pub solved: bool,
    pub plan_length: Option<usize>,
    pub expansions: u64,
    pub wall_seconds: f64,
    pub budget_hit: BudgetHit,
}

impl EvalRow {
    fn from_result(instance: &str, mode: EvalMode, r: &EpisodeResult, timing: bool) -> Self {
        EvalRow {
            instance: instance.to_string(),
            mode,
            solved: r.solved(),
            plan_length: r.plan_len(),
            expansions: r.expansions,
            wall_seconds: if timing { r.wall.as_secs_f64() } else { 0.0 },
            budget_hit: match r.outcome.limit() {
                Some(Limit::Expansions) => BudgetHit::Expansions,
                Some(Limit::Time) => BudgetHit::Time,
                None => BudgetHit::None,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub w: f64,
    pub batch: usize,
    /// Expansion cap per instance; the step cap for greedy rollouts.
    pub max_expansions: u64,
    pub max_time: Duration,
    /// Report zero wall time so result files are reproducible.
    pub timing: bool,
    pub exec: Exec,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            w: 2.0,
            batch: 1,
            max_expansions: 10_000,
            max_time: Duration::from_secs(3600),
            timing: true,
            exec: Exec::Parallel,
        }
    }
}

/// Runs every mode on every instance. `q` is required for the network
/// modes. Rows are sorted by instance name, then mode.
pub fn evaluate(
    q: Option<&dyn ActionValueFn>,
    instances: &[(String, Arc<GroundTask>)],
    modes: &[EvalMode],
    opts: &EvalOptions,
) -> Result<Vec<EvalRow>, String> {
    if q.is_none() {
        if let Some(m) = modes.iter().find(|m| m.needs_network()) {
            return Err(format!("mode {m} needs a network"));
        }
    }
    if let Some(q) = q {
        for (name, t) in instances {
            q.check_task(t).map_err(|e| format!("{name}: {e}"))?;
        }
    }
    let budget = Budget::expansions(opts.max_expansions).with_time(opts.max_time);
    let mut rows: Vec<EvalRow> = opts
        .exec
        .map(instances, |(name, task)| {
            modes
                .iter()
                .map(|&mode| {
                    let t = task.as_ref();
                    let r = match mode {
                        EvalMode::Greedy => greedy_rollout(t, q.unwrap(), &budget),
                        EvalMode::Wastar => wastar_solve(t, q.unwrap(), opts.w, opts.batch, &budget),
                        EvalMode::Gbfs => gbfs_solve(t, q.unwrap(), opts.batch, &budget),
                        EvalMode::Hmax => wastar_solve(t, &HMaxQ, opts.w, opts.batch, &budget),
                        EvalMode::Blind => wastar_solve(t, &ZeroQ, opts.w, opts.batch, &budget),
                    };
                    if let Some(p) = &r.plan {
                        assert!(t.validate_plan(p), "invalid plan on {name}");
                    }
                    EvalRow::from_result(name, mode, &r, opts.timing)
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| a.instance.cmp(&b.instance).then(a.mode.cmp(&b.mode)));
    Ok(rows)
}

/// Per-mode aggregate; means and medians are over solved instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: EvalMode,
    pub instances: usize,
    pub solved: usize,
    pub coverage: f64,
    pub mean_steps: Option<f64>,
    pub median_steps: Option<f64>,
    pub mean_expansions: Option<f64>,
    pub mean_wall_seconds: Option<f64>,
}

pub fn summarize(rows: &[EvalRow]) -> Vec<Summary> {
    let mut modes: Vec<EvalMode> = rows.iter().map(|r| r.mode).collect();
    modes.sort();
    modes.dedup();
    modes
        .into_iter()
        .map(|mode| {
            let all: Vec<&EvalRow> = rows.iter().filter(|r| r.mode == mode).collect();
            let solved: Vec<&EvalRow> = all.iter().copied().filter(|r| r.solved).collect();
            let mean = |f: &dyn Fn(&EvalRow) -> f64| {
                (!solved.is_empty()).then(|| solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64)
            };
            let mut lens: Vec<usize> = solved.iter().filter_map(|r| r.plan_length).collect();
            lens.sort_unstable();
            let median = match lens.len() {
                0 => None,
                n if n % 2 == 1 => Some(lens[n / 2] as f64),
                n => Some((lens[n / 2 - 1] + lens[n / 2]) as f64 / 2.0),
            };
            Summary {
                mode,
                instances: all.len(),
                solved: solved.len(),
                coverage: if all.is_empty() { 0.0 } else { solved.len() as f64 / all.len() as f64 },
                mean_steps: mean(&|r| r.plan_length.unwrap_or(0) as f64),
                median_steps: median,
                mean_expansions: mean(&|r| r.expansions as f64),
                mean_wall_seconds: mean(&|r| r.wall_seconds),
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

pub fn write_ndjson<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

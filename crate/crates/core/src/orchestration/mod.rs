//! Training loop: instance pools, search workers, the learner, validation,
//! checkpoints and metrics.

mod config;
mod metrics;
mod pools;
mod validation;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, RecvTimeoutError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::TrainConfig;
pub use metrics::{quantile, MetricsRecord};
pub use pools::{classify, InstancePools, PoolLabel, PoolOrder};
pub use validation::{validate, ValidationScore};

use crate::grounding::{GroundTask, Signature};
use crate::learning::{stored_tuples, LearnError, Learner, LearnerConfig, ReplayBuffer, StoredTuple, TargetSpec};
use crate::net::{NetError, QNetwork};
use crate::qfunc::ActionValueFn;
use crate::search::{run_episode, Budget, EpisodeConfig, EpisodeResult};
use metrics::MetricsLog;

pub const METRICS_FILE: &str = "metrics.ndjson";
pub const NETWORK_FILE: &str = "network.bin";
pub const SCORE_FILE: &str = "score.json";

#[derive(Debug, Error)]
pub enum OrchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("all instance pools are empty")]
    AllEmpty,
    #[error("no training instances")]
    NoInstances,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OrchError + '_ {
    move |source| OrchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Contents of `ckpt_<n>/score.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub checkpoint_id: usize,
    pub learner_steps: u64,
    pub wall_seconds: f64,
    pub score: ValidationScore,
}

pub fn checkpoint_dir(out: &Path, id: usize) -> PathBuf {
    out.join(format!("ckpt_{id}"))
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub episodes: u64,
    pub learner_steps: u64,
    pub wall_seconds: f64,
    /// Id and score of the best checkpoint written.
    pub best: Option<(usize, ValidationScore)>,
    pub final_score: ValidationScore,
    pub checkpoints: usize,
}

impl TrainReport {
    pub fn best_network(&self, out: &Path) -> Option<PathBuf> {
        self.best.as_ref().map(|(id, _)| checkpoint_dir(out, *id).join(NETWORK_FILE))
    }
}

/// Shared bookkeeping for both training modes.
struct Run<'a> {
    cfg: &'a TrainConfig,
    train: &'a [Arc<GroundTask>],
    val: &'a [Arc<GroundTask>],
    out: &'a Path,
    pools: InstancePools,
    buffer: ReplayBuffer<StoredTuple>,
    learner: Learner<QNetwork>,
    log: MetricsLog,
    episodes: u64,
    last_loss: Option<f64>,
    best: Option<(usize, ValidationScore)>,
    checkpoints: usize,
    next_validation_pass: u64,
    next_metrics: f64,
}

impl<'a> Run<'a> {
    fn new(
        cfg: &'a TrainConfig,
        sig: &Signature,
        train: &'a [Arc<GroundTask>],
        val: &'a [Arc<GroundTask>],
        out: &'a Path,
    ) -> Result<Self, OrchError> {
        cfg.validate()?;
        if train.is_empty() {
            return Err(OrchError::NoInstances);
        }
        let net = QNetwork::init(sig, cfg.net.clone(), cfg.seed)?;
        for t in train.iter().chain(val) {
            net.check_task(t)?;
        }
        std::fs::create_dir_all(out).map_err(io_err(out))?;
        let metrics = out.join(METRICS_FILE);
        let log = MetricsLog::create(&metrics).map_err(io_err(&metrics))?;
        let lcfg = LearnerConfig {
            batch_size: cfg.batch_size,
            lrs: cfg.lrs(),
            optimizer: cfg.optimizer,
            refresh_passes: cfg.refresh_passes,
            spec: TargetSpec { r_bot: cfg.r_bot },
            exec: cfg.exec,
        };
        let cap = cfg.buffer_capacity();
        Ok(Run {
            cfg,
            train,
            val,
            out,
            pools: InstancePools::new(train.len()),
            buffer: ReplayBuffer::new(cap),
            learner: Learner::new(net, lcfg, cap),
            log,
            episodes: 0,
            last_loss: None,
            best: None,
            checkpoints: 0,
            next_validation_pass: cfg.validation_passes,
            next_metrics: 0.0,
        })
    }

    fn episode_config(&self, cancel: Option<Arc<AtomicBool>>, logical: bool) -> EpisodeConfig {
        let ms = (self.cfg.episode_seconds * 1000.0).ceil() as u64;
        let budget = if logical {
            let cap = self.cfg.episode_expansions.map_or(ms, |e| e.min(ms));
            Budget::expansions(cap)
        } else {
            Budget {
                max_expansions: self.cfg.episode_expansions,
                max_time: Some(Duration::from_secs_f64(self.cfg.episode_seconds)),
                cancel,
            }
        };
        EpisodeConfig {
            w: self.cfg.w,
            r_bot: self.cfg.r_bot,
            budget,
            trace: false,
        }
    }

    fn absorb(&mut self, id: usize, result: &EpisodeResult, tuples: Vec<StoredTuple>) {
        self.pools.record(id, result);
        self.buffer.push(tuples);
        self.episodes += 1;
    }

    fn learner_done(&self) -> bool {
        self.cfg.max_learner_steps.is_some_and(|m| self.learner.steps() >= m)
    }

    fn episodes_done(&self) -> bool {
        self.cfg.max_episodes.is_some_and(|m| self.episodes >= m)
    }

    /// One learner step if the buffer holds a full batch. Returns whether a
    /// step was taken.
    fn learn(&mut self, rng: &mut ChaCha8Rng, now: f64) -> Result<bool, OrchError> {
        if self.buffer.len() < self.cfg.batch_size || self.learner_done() {
            return Ok(false);
        }
        let loss = self.learner.step(&self.buffer, rng)?;
        self.last_loss = Some(loss).filter(|l| l.is_finite());
        if self.learner.passes() >= self.next_validation_pass {
            self.next_validation_pass = self.learner.passes() + self.cfg.validation_passes;
            self.validate_and_checkpoint(now)?;
        }
        Ok(true)
    }

    fn validate_and_checkpoint(&mut self, now: f64) -> Result<ValidationScore, OrchError> {
        let net = self.learner.online();
        let score = validate(net, self.val, self.cfg.validation_max_steps, self.cfg.exec);
        if self.best.as_ref().is_none_or(|(_, b)| score.better_than(b)) {
            let id = self.checkpoints;
            let dir = checkpoint_dir(self.out, id);
            std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            net.save(&dir.join(NETWORK_FILE))?;
            let manifest = CheckpointManifest {
                checkpoint_id: id,
                learner_steps: self.learner.steps(),
                wall_seconds: now,
                score: score.clone(),
            };
            let path = dir.join(SCORE_FILE);
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            std::fs::write(&path, text).map_err(io_err(&path))?;
            self.checkpoints += 1;
            self.best = Some((id, score.clone()));
        }
        Ok(score)
    }

    fn write_metrics(&mut self, now: f64) -> Result<(), OrchError> {
        let mut exp = self.pools.attempted_expansions();
        exp.sort_unstable();
        let rec = MetricsRecord {
            wall_seconds: now,
            episodes: self.episodes,
            solve_rate: self.pools.solve_rate(),
            expansions_p25: quantile(&exp, 0.25),
            expansions_p50: quantile(&exp, 0.5),
            expansions_p75: quantile(&exp, 0.75),
            learner_loss: self.last_loss,
            learner_steps: self.learner.steps(),
            buffer_fill: self.buffer.len() as f64 / self.buffer.capacity() as f64,
            checkpoint_id: self.best.as_ref().map(|(id, _)| *id),
        };
        let path = self.out.join(METRICS_FILE);
        self.log.write(rec).map_err(io_err(&path))
    }

    fn maybe_metrics(&mut self, now: f64) -> Result<(), OrchError> {
        if now >= self.next_metrics {
            self.write_metrics(now)?;
            while self.next_metrics <= now {
                self.next_metrics += self.cfg.metrics_seconds;
            }
        }
        Ok(())
    }

    fn finish(mut self, now: f64) -> Result<TrainReport, OrchError> {
        let final_score = self.validate_and_checkpoint(now)?;
        self.write_metrics(now)?;
        Ok(TrainReport {
            episodes: self.episodes,
            learner_steps: self.learner.steps(),
            wall_seconds: now,
            best: self.best,
            final_score,
            checkpoints: self.checkpoints,
        })
    }
}

/// Trains a fresh network for the domain of `sig` and writes checkpoints and
/// `metrics.ndjson` under `out`.
pub fn train(
    cfg: &TrainConfig,
    sig: &Signature,
    train: &[Arc<GroundTask>],
    val: &[Arc<GroundTask>],
    out: &Path,
) -> Result<TrainReport, OrchError> {
    let run = Run::new(cfg, sig, train, val, out)?;
    if cfg.deterministic {
        train_deterministic(run)
    } else {
        train_concurrent(run)
    }
}

/// One worker on a logical clock: every expansion and every learner step
/// costs one millisecond, and episodes cost at least one.
fn train_deterministic(mut run: Run<'_>) -> Result<TrainReport, OrchError> {
    let cfg = run.cfg;
    let mut pool_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_0001);
    let mut learn_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_0002);
    let total_ms = (cfg.total_seconds * 1000.0).round() as u64;
    let mut clock = 0u64;
    let secs = |ms: u64| ms as f64 / 1000.0;
    run.validate_and_checkpoint(0.0)?;
    run.maybe_metrics(0.0)?;
    let ep_cfg = run.episode_config(None, true);
    while clock < total_ms && !run.episodes_done() {
        let id = run.pools.sample(&mut pool_rng, cfg.pool_beta, cfg.pool_order)?;
        let task = Arc::clone(&run.train[id]);
        let ep = run_episode(&task, run.learner.online(), &ep_cfg);
        clock += ep.result.expansions.max(1);
        let result = ep.result.clone();
        run.absorb(id, &result, stored_tuples(task, ep));
        for _ in 0..cfg.learner_steps_per_episode {
            if !run.learn(&mut learn_rng, secs(clock))? {
                break;
            }
            clock += 1;
        }
        if run.learner_done() && cfg.max_episodes.is_none() {
            break;
        }
        run.maybe_metrics(secs(clock))?;
    }
    run.finish(secs(clock))
}

struct Shared {
    pools: Mutex<(InstancePools, ChaCha8Rng)>,
    snapshot: Mutex<Arc<QNetwork>>,
    cancel: Arc<AtomicBool>,
}

/// `workers` search threads feed the learner on the calling thread through a
/// bounded channel; snapshots go back through a shared slot.
fn train_concurrent(mut run: Run<'_>) -> Result<TrainReport, OrchError> {
    let cfg = run.cfg;
    let start = Instant::now();
    let now = || start.elapsed().as_secs_f64();
    let mut learn_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_0002);
    run.validate_and_checkpoint(0.0)?;
    run.maybe_metrics(now())?;
    let shared = Shared {
        pools: Mutex::new((run.pools.clone(), ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_0001))),
        snapshot: Mutex::new(Arc::new(run.learner.online().clone())),
        cancel: Arc::new(AtomicBool::new(false)),
    };
    let ep_cfg = run.episode_config(Some(Arc::clone(&shared.cancel)), false);
    let (tx, rx) = bounded::<(usize, EpisodeResult, Vec<StoredTuple>)>(cfg.workers * 2);
    let train = run.train;

    let outcome = std::thread::scope(|scope| {
        for _ in 0..cfg.workers {
            let tx = tx.clone();
            let shared = &shared;
            let ep_cfg = ep_cfg.clone();
            scope.spawn(move || {
                while !shared.cancel.load(Ordering::Relaxed) {
                    let id = {
                        let mut g = shared.pools.lock().unwrap();
                        let (pools, rng) = &mut *g;
                        match pools.sample(rng, cfg.pool_beta, cfg.pool_order) {
                            Ok(id) => id,
                            Err(_) => return,
                        }
                    };
                    let net = Arc::clone(&shared.snapshot.lock().unwrap());
                    let task = Arc::clone(&train[id]);
                    let ep = run_episode(&task, net.as_ref(), &ep_cfg);
                    let result = ep.result.clone();
                    if tx.send((id, result, stored_tuples(task, ep))).is_err() {
                        return;
                    }
                }
            });
        }
        drop(tx);

        let mut since_publish = 0u64;
        let body = (|| -> Result<(), OrchError> {
            loop {
                let t = now();
                if t >= cfg.total_seconds || run.episodes_done() || run.learner_done() {
                    return Ok(());
                }
                let mut got = false;
                while let Ok((id, result, tuples)) = rx.try_recv() {
                    run.absorb(id, &result, tuples);
                    got = true;
                }
                if got {
                    let mut g = shared.pools.lock().unwrap();
                    g.0 = run.pools.clone();
                }
                if run.learn(&mut learn_rng, t)? {
                    since_publish += 1;
                    if since_publish >= cfg.publish_steps {
                        since_publish = 0;
                        *shared.snapshot.lock().unwrap() = Arc::new(run.learner.online().clone());
                    }
                } else if !got {
                    match rx.recv_timeout(Duration::from_millis(20)) {
                        Ok((id, result, tuples)) => {
                            run.absorb(id, &result, tuples);
                            shared.pools.lock().unwrap().0 = run.pools.clone();
                        }
                        Err(RecvTimeoutError::Timeout) => {}
                        Err(RecvTimeoutError::Disconnected) => return Ok(()),
                    }
                }
                run.maybe_metrics(now())?;
            }
        })();
        shared.cancel.store(true, Ordering::Relaxed);
        // unblock workers waiting on a full channel until all have exited
        while rx.recv().is_ok() {}
        body
    });
    outcome?;
    run.finish(now())
}

/// Loads the network stored in checkpoint directory `dir`.
pub fn load_checkpoint(dir: &Path) -> Result<(QNetwork, Option<CheckpointManifest>), OrchError> {
    let net = QNetwork::load(&dir.join(NETWORK_FILE))?;
    let manifest = std::fs::read_to_string(dir.join(SCORE_FILE))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok());
    Ok((net, manifest))
}

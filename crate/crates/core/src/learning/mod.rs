//! Replay storage and Q-learning with search-derived lower bounds.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::grounding::{ActionId, GroundTask, State};
use crate::net::{LearningRates, NetError, OptimizerKind, OptimizerState};
use crate::par::Exec;
use crate::qfunc::{ActionValueFn, Regression, TrainableQ};
use crate::search::{Episode, ReplayTuple, StateArena, TupleKind, DEFAULT_R_BOT};

/// Reward of every step; returns are undiscounted.
pub const STEP_REWARD: f64 = -1.0;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("replay buffer holds {have} tuples, {need} requested")]
    Underfull { have: usize, need: usize },
    #[error("tuple for action {0} has no successor state")]
    MissingSuccessor(ActionId),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// FIFO ring with a fixed capacity.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: VecDeque<T>,
    capacity: usize,
    inserted: u64,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            items: VecDeque::with_capacity(capacity),
            capacity,
            inserted: 0,
        }
    }

    pub fn push(&mut self, items: impl IntoIterator<Item = T>) {
        for it in items {
            if self.items.len() == self.capacity {
                self.items.pop_front();
            }
            self.items.push_back(it);
            self.inserted += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total number of items ever pushed.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// `n` distinct items drawn uniformly, in draw order.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&T>, LearnError> {
        if n > self.items.len() {
            return Err(LearnError::Underfull {
                have: self.items.len(),
                need: n,
            });
        }
        Ok(rand::seq::index::sample(rng, self.items.len(), n)
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

/// Task and generated states of one episode, shared by its tuples.
#[derive(Debug)]
pub struct EpisodeData {
    pub task: Arc<GroundTask>,
    pub arena: StateArena,
}

#[derive(Debug, Clone)]
pub struct StoredTuple {
    pub episode: Arc<EpisodeData>,
    pub tuple: ReplayTuple,
}

impl StoredTuple {
    pub fn state(&self) -> &State {
        self.episode.arena.get(self.tuple.state)
    }

    pub fn successor(&self) -> Option<&State> {
        self.tuple.successor.map(|id| self.episode.arena.get(id))
    }

    pub fn task(&self) -> &GroundTask {
        &self.episode.task
    }
}

/// Wraps an episode's tuples for the buffer.
pub fn stored_tuples(task: Arc<GroundTask>, ep: Episode) -> Vec<StoredTuple> {
    let data = Arc::new(EpisodeData { task, arena: ep.arena });
    ep.tuples
        .into_iter()
        .map(|tuple| StoredTuple {
            episode: Arc::clone(&data),
            tuple,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub r_bot: f64,
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec { r_bot: DEFAULT_R_BOT }
    }
}

impl TargetSpec {
    pub fn clamp(&self) -> f64 {
        10.0 * self.r_bot.abs()
    }

    /// `ŷ = r + max_{a'} Q(s', a')`, with 0 for a goal successor and `R⊥`
    /// for a successor without actions.
    pub fn bootstrap<Q: ActionValueFn + ?Sized>(&self, task: &GroundTask, succ: &State, q: &Q) -> f64 {
        if task.is_goal(succ) {
            return STEP_REWARD;
        }
        let app = task.applicable_actions(succ);
        if app.is_empty() {
            return STEP_REWARD + self.r_bot;
        }
        let best = q
            .action_values(task, succ, &app)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        STEP_REWARD + best
    }

    /// Regression target for one tuple.
    pub fn target<Q: ActionValueFn + ?Sized>(&self, t: &StoredTuple, q: &Q) -> Result<f64, LearnError> {
        let y = match t.tuple.kind {
            TupleKind::DeadEnd => self.r_bot,
            kind => {
                let succ = t.successor().ok_or(LearnError::MissingSuccessor(t.tuple.action))?;
                let y_hat = self.bootstrap(t.task(), succ, q);
                if kind == TupleKind::GoalPath {
                    t.tuple.bound.max(y_hat)
                } else {
                    y_hat
                }
            }
        };
        let c = self.clamp();
        Ok(if y.is_nan() { -c } else { y.clamp(-c, c) })
    }
}

pub fn compute_targets<Q: ActionValueFn + ?Sized>(
    batch: &[&StoredTuple],
    target_net: &Q,
    spec: &TargetSpec,
    exec: Exec,
) -> Result<Vec<f64>, LearnError> {
    exec.map(batch, |t| spec.target(t, target_net)).into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub batch_size: usize,
    pub lrs: LearningRates,
    pub optimizer: OptimizerKind,
    /// Target refresh period, in passes over the buffer.
    pub refresh_passes: u64,
    pub spec: TargetSpec,
    pub exec: Exec,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            batch_size: 256,
            lrs: LearningRates {
                gnn: 1e-4,
                readout: 1e-3,
            },
            optimizer: OptimizerKind::Adam,
            refresh_passes: 10,
            spec: TargetSpec::default(),
            exec: Exec::Parallel,
        }
    }
}

/// Online network, frozen target network and optimizer state.
#[derive(Debug, Clone)]
pub struct Learner<Q: TrainableQ> {
    online: Q,
    target: Q,
    opt: OptimizerState,
    cfg: LearnerConfig,
    steps: u64,
    steps_per_pass: u64,
    refreshes: u64,
}

impl<Q: TrainableQ> Learner<Q> {
    /// One pass is `⌈buffer_capacity / batch_size⌉` steps.
    pub fn new(net: Q, cfg: LearnerConfig, buffer_capacity: usize) -> Self {
        assert!(cfg.batch_size > 0 && cfg.refresh_passes > 0);
        let steps_per_pass = buffer_capacity.div_ceil(cfg.batch_size).max(1) as u64;
        Learner {
            target: net.clone(),
            online: net,
            opt: OptimizerState::new(cfg.optimizer),
            cfg,
            steps: 0,
            steps_per_pass,
            refreshes: 0,
        }
    }

    pub fn online(&self) -> &Q {
        &self.online
    }

    pub fn target(&self) -> &Q {
        &self.target
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn passes(&self) -> u64 {
        self.steps / self.steps_per_pass
    }

    pub fn steps_per_pass(&self) -> u64 {
        self.steps_per_pass
    }

    pub fn refreshes(&self) -> u64 {
        self.refreshes
    }

    pub fn into_online(self) -> Q {
        self.online
    }

    /// Sample, compute targets on the frozen network, take one optimizer step.
    pub fn step<R: Rng + ?Sized>(&mut self, buf: &ReplayBuffer<StoredTuple>, rng: &mut R) -> Result<f64, LearnError> {
        let batch = buf.sample(self.cfg.batch_size, rng)?;
        self.step_on(&batch)
    }

    pub fn step_on(&mut self, batch: &[&StoredTuple]) -> Result<f64, LearnError> {
        let exec = self.cfg.exec;
        let targets = compute_targets(batch, &self.target, &self.cfg.spec, exec)?;
        let applicable: Vec<Vec<ActionId>> = exec.map(batch, |t| t.task().applicable_actions(t.state()));
        let regs: Vec<Regression<'_>> = batch
            .iter()
            .zip(&applicable)
            .zip(&targets)
            .map(|((t, app), &y)| Regression {
                task: t.task(),
                state: t.state(),
                applicable: app,
                action: t.tuple.action,
                target: y,
            })
            .collect();
        let loss = self.online.train_on(&regs, self.cfg.lrs, &mut self.opt, exec)?;
        self.steps += 1;
        if self.steps % (self.cfg.refresh_passes * self.steps_per_pass) == 0 {
            self.target = self.online.clone();
            self.refreshes += 1;
        }
        Ok(loss)
    }
}

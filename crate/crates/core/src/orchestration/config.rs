use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{OrchError, PoolOrder};
use crate::net::{LearningRates, NetConfig, OptimizerKind};
use crate::par::Exec;
use crate::search::DEFAULT_R_BOT;

/// Training parameters. The TOML file uses the field names below; absent
/// keys keep their defaults, unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight on Q in `g + w·Q`.
    pub w: f64,
    pub workers: usize,
    /// Per-episode wall budget. In deterministic mode each expansion counts
    /// as one millisecond.
    pub episode_seconds: f64,
    /// Optional per-episode expansion cap.
    pub episode_expansions: Option<u64>,
    pub batch_size: usize,
    /// Replay capacity in batches.
    pub buffer_batches: usize,
    pub lr_gnn: f64,
    pub lr_readout: f64,
    pub optimizer: OptimizerKind,
    pub refresh_passes: u64,
    pub validation_passes: u64,
    pub pool_beta: f64,
    pub pool_order: PoolOrder,
    pub r_bot: f64,
    /// Whole-run budget, logical in deterministic mode.
    pub total_seconds: f64,
    pub max_episodes: Option<u64>,
    pub max_learner_steps: Option<u64>,
    pub seed: u64,
    /// Single worker, logical clock, byte-reproducible metrics.
    pub deterministic: bool,
    /// Learner steps after each episode in deterministic mode.
    pub learner_steps_per_episode: u64,
    /// Learner steps between snapshot publications in concurrent mode.
    pub publish_steps: u64,
    pub metrics_seconds: f64,
    /// Step cap for greedy validation rollouts.
    pub validation_max_steps: u64,
    pub exec: Exec,
    pub net: NetConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            w: 2.0,
            workers: 5,
            episode_seconds: 60.0,
            episode_expansions: None,
            batch_size: 256,
            buffer_batches: 40,
            lr_gnn: 1e-4,
            lr_readout: 1e-3,
            optimizer: OptimizerKind::Adam,
            refresh_passes: 10,
            validation_passes: 20,
            pool_beta: 4.0,
            pool_order: PoolOrder::Informative,
            r_bot: DEFAULT_R_BOT,
            total_seconds: 600.0,
            max_episodes: None,
            max_learner_steps: None,
            seed: 0,
            deterministic: false,
            learner_steps_per_episode: 4,
            publish_steps: 10,
            metrics_seconds: 10.0,
            validation_max_steps: 1000,
            exec: Exec::Parallel,
            net: NetConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self, OrchError> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| OrchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, OrchError> {
        let text = std::fs::read_to_string(path).map_err(|e| OrchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn buffer_capacity(&self) -> usize {
        self.batch_size * self.buffer_batches
    }

    pub fn lrs(&self) -> LearningRates {
        LearningRates {
            gnn: self.lr_gnn,
            readout: self.lr_readout,
        }
    }

    pub fn validate(&self) -> Result<(), OrchError> {
        let err = |m: &str| Err(OrchError::Config(m.to_string()));
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.w) {
            return err("w must be positive");
        }
        if self.workers == 0 {
            return err("workers must be at least 1");
        }
        if !pos(self.episode_seconds) || !pos(self.total_seconds) || !pos(self.metrics_seconds) {
            return err("time budgets must be positive");
        }
        if self.batch_size == 0 || self.buffer_batches == 0 {
            return err("batch_size and buffer_batches must be positive");
        }
        if !pos(self.lr_gnn) || !pos(self.lr_readout) {
            return err("learning rates must be positive");
        }
        if self.refresh_passes == 0 || self.validation_passes == 0 || self.publish_steps == 0 {
            return err("refresh_passes, validation_passes and publish_steps must be positive");
        }
        if !pos(self.pool_beta) {
            return err("pool_beta must be positive");
        }
        if !(self.r_bot < 0.0 && self.r_bot.is_finite()) {
            return err("r_bot must be negative");
        }
        if self.episode_expansions == Some(0) || self.validation_max_steps == 0 {
            return err("expansion caps must be positive");
        }
        self.net.validate().map_err(|e| OrchError::Config(e.to_string()))
    }
}

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::OrchError;
use crate::search::EpisodeResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolLabel {
    Unsolved,
    Solved,
    Satisficed,
}

/// No plan: unsolved. A plan: satisficed, or solved if search expanded
/// exactly as many pairs as the plan has steps.
pub fn classify(result: &EpisodeResult) -> PoolLabel {
    match result.plan_len() {
        None => PoolLabel::Unsolved,
        Some(n) if result.expansions == n as u64 => PoolLabel::Solved,
        Some(_) => PoolLabel::Satisficed,
    }
}

/// Which pool gets which power of β.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolOrder {
    /// solved β⁰, unsolved β¹, satisficed β².
    #[default]
    Informative,
    /// unsolved β⁰, solved β¹, satisficed β².
    Literal,
}

impl PoolOrder {
    pub fn exponent(self, label: PoolLabel) -> i32 {
        match (self, label) {
            (_, PoolLabel::Satisficed) => 2,
            (PoolOrder::Informative, PoolLabel::Solved) | (PoolOrder::Literal, PoolLabel::Unsolved) => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstancePools {
    unsolved: BTreeSet<usize>,
    solved: BTreeSet<usize>,
    satisficed: BTreeSet<usize>,
    best_plan: Vec<Option<usize>>,
    last_expansions: Vec<Option<u64>>,
    last_solved: Vec<bool>,
}

impl InstancePools {
    /// All `n` instances start unsolved.
    pub fn new(n: usize) -> Self {
        InstancePools {
            unsolved: (0..n).collect(),
            solved: BTreeSet::new(),
            satisficed: BTreeSet::new(),
            best_plan: vec![None; n],
            last_expansions: vec![None; n],
            last_solved: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.best_plan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best_plan.is_empty()
    }

    pub fn pool(&self, label: PoolLabel) -> &BTreeSet<usize> {
        match label {
            PoolLabel::Unsolved => &self.unsolved,
            PoolLabel::Solved => &self.solved,
            PoolLabel::Satisficed => &self.satisficed,
        }
    }

    fn pool_mut(&mut self, label: PoolLabel) -> &mut BTreeSet<usize> {
        match label {
            PoolLabel::Unsolved => &mut self.unsolved,
            PoolLabel::Solved => &mut self.solved,
            PoolLabel::Satisficed => &mut self.satisficed,
        }
    }

    pub fn label_of(&self, id: usize) -> PoolLabel {
        if self.solved.contains(&id) {
            PoolLabel::Solved
        } else if self.satisficed.contains(&id) {
            PoolLabel::Satisficed
        } else {
            PoolLabel::Unsolved
        }
    }

    /// Moves `id` to the pool its latest episode earns; failures demote.
    pub fn record(&mut self, id: usize, result: &EpisodeResult) -> PoolLabel {
        let label = classify(result);
        let old = self.label_of(id);
        self.pool_mut(old).remove(&id);
        self.pool_mut(label).insert(id);
        if let Some(n) = result.plan_len() {
            self.best_plan[id] = Some(self.best_plan[id].map_or(n, |b| b.min(n)));
        }
        self.last_expansions[id] = Some(result.expansions);
        self.last_solved[id] = result.solved();
        label
    }

    pub fn best_plan(&self, id: usize) -> Option<usize> {
        self.best_plan[id]
    }

    /// Last expansion count of every attempted instance, by instance id.
    pub fn attempted_expansions(&self) -> Vec<u64> {
        self.last_expansions.iter().flatten().copied().collect()
    }

    /// Fraction of instances whose latest episode reached the goal.
    pub fn solve_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.last_solved.iter().filter(|&&b| b).count() as f64 / self.len() as f64
    }

    /// Picks a non-empty pool with weight `β^k`, then an instance uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, beta: f64, order: PoolOrder) -> Result<usize, OrchError> {
        let labels = [PoolLabel::Solved, PoolLabel::Unsolved, PoolLabel::Satisficed];
        let weights: Vec<f64> = labels
            .iter()
            .map(|&l| if self.pool(l).is_empty() { 0.0 } else { beta.powi(order.exponent(l)) })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(OrchError::AllEmpty);
        }
        let mut x = rng.gen_range(0.0..total);
        let mut chosen = labels.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 && x < *w {
                chosen = i;
                break;
            }
            x -= w;
        }
        // guard against rounding leaving `chosen` on an empty pool
        while weights[chosen] == 0.0 {
            chosen -= 1;
        }
        let pool = self.pool(labels[chosen]);
        let k = rng.gen_range(0..pool.len());
        Ok(*pool.iter().nth(k).unwrap())
    }
}

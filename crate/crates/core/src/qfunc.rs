//! Action-value evaluators shared by search and learning.

use std::collections::HashMap;

use crate::graph::encode;
use crate::grounding::{ActionId, GroundTask, State};
use crate::net::{LearningRates, NetError, OptimizerState, QNetwork, Sample};
use crate::par::Exec;

/// Anything that scores the applicable actions of a state.
pub trait ActionValueFn: Sync {
    /// One value per entry of `applicable`, in the same order.
    fn action_values(&self, task: &GroundTask, s: &State, applicable: &[ActionId]) -> Vec<f64>;

    /// Errors if this evaluator cannot score states of `task`.
    fn check_task(&self, _task: &GroundTask) -> Result<(), NetError> {
        Ok(())
    }
}

impl<T: ActionValueFn + Send> ActionValueFn for std::sync::Arc<T> {
    fn action_values(&self, task: &GroundTask, s: &State, applicable: &[ActionId]) -> Vec<f64> {
        (**self).action_values(task, s, applicable)
    }

    fn check_task(&self, task: &GroundTask) -> Result<(), NetError> {
        (**self).check_task(task)
    }
}

impl<T: ActionValueFn + ?Sized> ActionValueFn for &T {
    fn action_values(&self, task: &GroundTask, s: &State, applicable: &[ActionId]) -> Vec<f64> {
        (**self).action_values(task, s, applicable)
    }

    fn check_task(&self, task: &GroundTask) -> Result<(), NetError> {
        (**self).check_task(task)
    }
}

impl ActionValueFn for QNetwork {
    fn action_values(&self, task: &GroundTask, s: &State, applicable: &[ActionId]) -> Vec<f64> {
        let g = encode(task, self.relations(), s, applicable, self.config().goal_mode);
        self.forward(&g).expect("network vocabulary checked against the task")
    }

    fn check_task(&self, task: &GroundTask) -> Result<(), NetError> {
        self.check_signature(task.signature())
    }
}

/// `Q ≡ 0`; turns weighted A* into uniform-cost search.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroQ;

impl ActionValueFn for ZeroQ {
    fn action_values(&self, _: &GroundTask, _: &State, applicable: &[ActionId]) -> Vec<f64> {
        vec![0.0; applicable.len()]
    }
}

/// Wraps a closure `(task, state, action) -> value`.
pub struct FnQ<F>(pub F);

impl<F> ActionValueFn for FnQ<F>
where
    F: Fn(&GroundTask, &State, ActionId) -> f64 + Sync,
{
    fn action_values(&self, task: &GroundTask, s: &State, applicable: &[ActionId]) -> Vec<f64> {
        applicable.iter().map(|&a| (self.0)(task, s, a)).collect()
    }
}

/// One regression sample in task terms.
#[derive(Debug, Clone, Copy)]
pub struct Regression<'a> {
    pub task: &'a GroundTask,
    pub state: &'a State,
    pub applicable: &'a [ActionId],
    pub action: ActionId,
    pub target: f64,
}

/// An evaluator the learner can fit.
pub trait TrainableQ: ActionValueFn + Clone + Send + Sync {
    /// One optimizer step on the mean squared error; returns the loss.
    fn train_on(
        &mut self,
        batch: &[Regression<'_>],
        lrs: LearningRates,
        opt: &mut OptimizerState,
        exec: Exec,
    ) -> Result<f64, NetError>;
}

impl TrainableQ for QNetwork {
    fn train_on(
        &mut self,
        batch: &[Regression<'_>],
        lrs: LearningRates,
        opt: &mut OptimizerState,
        exec: Exec,
    ) -> Result<f64, NetError> {
        let mode = self.config().goal_mode;
        let graphs = exec.map(batch, |r| encode(r.task, self.relations(), r.state, r.applicable, mode));
        let samples: Vec<Sample<'_>> = batch
            .iter()
            .zip(&graphs)
            .map(|(r, g)| Sample {
                graph: g,
                action: r.action,
                target: r.target,
            })
            .collect();
        let grads = self.loss_and_grad_with(&samples, exec)?;
        self.apply_update(&grads, lrs, opt);
        Ok(grads.loss)
    }
}

/// Exact lookup table keyed by `(task name, state, action)`; unseen pairs
/// read as `default`.
#[derive(Debug, Clone, Default)]
pub struct TabularQ {
    table: HashMap<(String, State, ActionId), f64>,
    pub default: f64,
}

impl TabularQ {
    pub fn new(default: f64) -> Self {
        TabularQ {
            table: HashMap::new(),
            default,
        }
    }

    pub fn get(&self, task: &GroundTask, s: &State, a: ActionId) -> f64 {
        self.table
            .get(&(task.name().to_string(), s.clone(), a))
            .copied()
            .unwrap_or(self.default)
    }

    pub fn set(&mut self, task: &GroundTask, s: &State, a: ActionId, v: f64) {
        self.table.insert((task.name().to_string(), s.clone(), a), v);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl ActionValueFn for TabularQ {
    fn action_values(&self, task: &GroundTask, s: &State, applicable: &[ActionId]) -> Vec<f64> {
        applicable.iter().map(|&a| self.get(task, s, a)).collect()
    }
}

impl TrainableQ for TabularQ {
    /// Plain gradient descent on the table entries with step `lrs.readout`;
    /// `opt` only counts steps.
    fn train_on(
        &mut self,
        batch: &[Regression<'_>],
        lrs: LearningRates,
        opt: &mut OptimizerState,
        _exec: Exec,
    ) -> Result<f64, NetError> {
        if batch.is_empty() {
            return Err(NetError::EmptyBatch);
        }
        let n = batch.len() as f64;
        let mut grads: Vec<((String, State, ActionId), f64)> = Vec::with_capacity(batch.len());
        let mut sq = 0.0;
        for r in batch {
            if !r.target.is_finite() {
                return Err(NetError::NonFiniteTarget(r.target));
            }
            let err = self.get(r.task, r.state, r.action) - r.target;
            sq += err * err;
            grads.push(((r.task.name().to_string(), r.state.clone(), r.action), 2.0 * err / n));
        }
        for (key, g) in grads {
            let default = self.default;
            *self.table.entry(key).or_insert(default) -= lrs.readout * g;
        }
        opt.step(&mut [], &[], 0, lrs);
        Ok(sq / n)
    }
}

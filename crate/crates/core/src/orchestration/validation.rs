use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grounding::GroundTask;
use crate::par::Exec;
use crate::qfunc::ActionValueFn;
use crate::search::{greedy_rollout, Budget};

/// Greedy-rollout quality of a network on the validation set. `steps` and
/// `rmse` are `None` when nothing was solved and then rank as +∞.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationScore {
    pub coverage: f64,
    pub solved: usize,
    pub instances: usize,
    /// Total plan length over solved instances.
    pub steps: Option<u64>,
    /// RMSE between `Q(s0, first action)` and `-(plan length)` on solved instances.
    pub rmse: Option<f64>,
}

impl ValidationScore {
    /// Ranking order: `Greater` means `self` is the better score.
    pub fn rank(&self, other: &Self) -> Ordering {
        fn asc<T: PartialOrd>(a: Option<T>, b: Option<T>) -> Ordering {
            match (a, b) {
                (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(Ordering::Equal),
                (Some(_), None) => Ordering::Greater,
                (None, Some(_)) => Ordering::Less,
                (None, None) => Ordering::Equal,
            }
        }
        self.coverage
            .total_cmp(&other.coverage)
            .then(asc(self.steps, other.steps))
            .then(asc(self.rmse, other.rmse))
    }

    pub fn better_than(&self, other: &Self) -> bool {
        self.rank(other) == Ordering::Greater
    }
}

/// Greedy rollout on every task, at most `max_steps` steps each.
pub fn validate<Q: ActionValueFn + ?Sized>(q: &Q, tasks: &[Arc<GroundTask>], max_steps: u64, exec: Exec) -> ValidationScore {
    let budget = Budget::expansions(max_steps);
    let rows: Vec<Option<(usize, f64)>> = exec.map(tasks, |t| {
        let r = greedy_rollout(t.as_ref(), q, &budget);
        let plan = r.plan?;
        let err = match plan.first() {
            Some(&a) => q.action_values(t, t.init(), &[a])[0] + plan.len() as f64,
            None => 0.0,
        };
        Some((plan.len(), err))
    });
    let solved: Vec<(usize, f64)> = rows.into_iter().flatten().collect();
    let n = tasks.len();
    let (steps, rmse) = if solved.is_empty() {
        (None, None)
    } else {
        let steps = solved.iter().map(|&(l, _)| l as u64).sum();
        let mse = solved.iter().map(|&(_, e)| e * e).sum::<f64>() / solved.len() as f64;
        (Some(steps), Some(mse.sqrt()))
    };
    ValidationScore {
        coverage: if n == 0 { 0.0 } else { solved.len() as f64 / n as f64 },
        solved: solved.len(),
        instances: n,
        steps,
        rmse,
    }
}

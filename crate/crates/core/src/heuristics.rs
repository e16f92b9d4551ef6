//! Delete-relaxation `h_max` and its action-value adapter.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::grounding::{ActionId, GroundTask, State};
use crate::qfunc::ActionValueFn;

/// Cost of the most expensive goal atom in the delete relaxation, with unit
/// action costs; `f64::INFINITY` if some goal atom is unreachable.
pub fn h_max(task: &GroundTask, s: &State) -> f64 {
    let n_atoms = task.atoms().len();
    let mut cost = vec![u32::MAX; n_atoms];
    let mut missing: Vec<u32> = task.actions().iter().map(|a| a.pre.len() as u32).collect();
    let mut heap = BinaryHeap::new();
    for &p in s.atoms() {
        cost[p as usize] = 0;
        heap.push(Reverse((0u32, p)));
    }
    let fire = |a: ActionId, c: u32, cost: &mut Vec<u32>, heap: &mut BinaryHeap<Reverse<(u32, u32)>>| {
        for &q in &task.action(a).add {
            if c < cost[q as usize] {
                cost[q as usize] = c;
                heap.push(Reverse((c, q)));
            }
        }
    };
    for a in task.actions() {
        if a.pre.is_empty() {
            fire(a.id, 1, &mut cost, &mut heap);
        }
    }
    let mut done = vec![false; n_atoms];
    while let Some(Reverse((c, p))) = heap.pop() {
        if done[p as usize] || c > cost[p as usize] {
            continue;
        }
        done[p as usize] = true;
        for &a in task.consumers(p) {
            missing[a as usize] -= 1;
            if missing[a as usize] == 0 {
                // atoms settle in cost order, so `c` is the max over pre(a)
                fire(a, c + 1, &mut cost, &mut heap);
            }
        }
    }
    let mut h = 0u32;
    for &g in task.goal() {
        if cost[g as usize] == u32::MAX {
            return f64::INFINITY;
        }
        h = h.max(cost[g as usize]);
    }
    f64::from(h)
}

/// `Q(s, a) = −1 − h_max(a(s))`, so search on it mirrors search on `h_max`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HMaxQ;

impl ActionValueFn for HMaxQ {
    fn action_values(&self, task: &GroundTask, s: &State, applicable: &[ActionId]) -> Vec<f64> {
        applicable
            .iter()
            .map(|&a| {
                let next = task.apply_unchecked(s, a);
                -1.0 - h_max(task, &next)
            })
            .collect()
    }
}

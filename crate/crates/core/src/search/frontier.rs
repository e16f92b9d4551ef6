use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::StateId;
use crate::grounding::ActionId;

#[derive(Debug, Clone, Copy)]
pub(super) struct Entry {
    pub priority: f64,
    pub seq: u64,
    pub state: StateId,
    pub action: ActionId,
    pub q: f64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Max-heap on priority; equal priorities pop the most recent push first.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Default)]
pub(super) struct Frontier {
    heap: BinaryHeap<Entry>,
    seq: u64,
}

impl Frontier {
    pub fn push(&mut self, priority: f64, state: StateId, action: ActionId, q: f64) {
        self.seq += 1;
        self.heap.push(Entry {
            priority,
            seq: self.seq,
            state,
            action,
            q,
        });
    }

    pub fn pop(&mut self) -> Option<Entry> {
        self.heap.pop()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

//! Generalized best-first search for classical planning with a learned
//! relational action-value function.

pub mod eval;
pub mod generators;
pub mod graph;
pub mod grounding;
pub mod heuristics;
pub mod learning;
pub mod net;
pub mod orchestration;
pub mod par;
pub mod pddl;
pub mod qfunc;
pub mod search;

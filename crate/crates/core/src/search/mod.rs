//! Best-first search over state–action pairs.
//!
//! The frontier holds pairs `(s, a)` scored before `a` is applied. Popping a
//! pair generates `a(s)`; a successor seen for the first time pushes all of
//! its own pairs. States are never reopened.

mod frontier;

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::grounding::{ActionId, GroundTask, State};
use crate::qfunc::ActionValueFn;

use frontier::Frontier;

/// Default penalty return for a transition into a dead end.
pub const DEFAULT_R_BOT: f64 = -2000.0;

/// Index of a state inside an episode's [`StateArena`].
pub type StateId = u32;

#[derive(Debug, Clone, Default)]
pub struct Budget {
    pub max_expansions: Option<u64>,
    pub max_time: Option<Duration>,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Budget {
    pub fn expansions(n: u64) -> Self {
        Budget {
            max_expansions: Some(n),
            ..Budget::default()
        }
    }

    pub fn time(t: Duration) -> Self {
        Budget {
            max_time: Some(t),
            ..Budget::default()
        }
    }

    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn with_time(mut self, t: Duration) -> Self {
        self.max_time = Some(t);
        self
    }

    fn exceeded(&self, expansions: u64, start: Instant) -> Option<Outcome> {
        if let Some(c) = &self.cancel {
            if c.load(Ordering::Relaxed) {
                return Some(Outcome::Cancelled);
            }
        }
        if self.max_expansions.is_some_and(|m| expansions >= m) {
            return Some(Outcome::BudgetExhausted(Limit::Expansions));
        }
        if self.max_time.is_some_and(|t| start.elapsed() >= t) {
            return Some(Outcome::BudgetExhausted(Limit::Time));
        }
        None
    }

    fn remaining(&self, expansions: u64) -> u64 {
        self.max_expansions.map_or(u64::MAX, |m| m.saturating_sub(expansions))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Limit {
    Expansions,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Goal,
    BudgetExhausted(Limit),
    FrontierEmpty,
    /// Greedy execution reached a state without applicable actions.
    DeadEnd,
    /// Greedy execution revisited a state.
    Cycle,
    Cancelled,
}

impl Outcome {
    pub fn limit(&self) -> Option<Limit> {
        match self {
            Outcome::BudgetExhausted(l) => Some(*l),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub expansions: u64,
    pub plan: Option<Vec<ActionId>>,
    pub wall: Duration,
}

impl EpisodeResult {
    /// Panics if a goal outcome carries a plan that does not reach the goal.
    pub fn new(task: &GroundTask, outcome: Outcome, expansions: u64, plan: Option<Vec<ActionId>>, wall: Duration) -> Self {
        if outcome == Outcome::Goal {
            let p = plan.as_ref().expect("goal outcome without a plan");
            assert!(task.validate_plan(p), "search produced an invalid plan");
        } else {
            assert!(plan.is_none(), "plan reported without reaching the goal");
        }
        EpisodeResult {
            outcome,
            expansions,
            plan,
            wall,
        }
    }

    pub fn solved(&self) -> bool {
        self.outcome == Outcome::Goal
    }

    pub fn plan_len(&self) -> Option<usize> {
        self.plan.as_ref().map(Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TupleKind {
    GoalPath,
    DeadEnd,
    Bootstrap,
}

/// `(s, a, R̲)` with handles into the episode's arena.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayTuple {
    pub state: StateId,
    pub action: ActionId,
    pub bound: f64,
    pub kind: TupleKind,
    pub successor: Option<StateId>,
}

/// States generated during one episode, addressed by [`StateId`].
#[derive(Debug, Clone, Default)]
pub struct StateArena {
    states: Vec<State>,
    index: HashMap<State, StateId>,
}

impl StateArena {
    pub fn intern(&mut self, s: &State) -> StateId {
        if let Some(&id) = self.index.get(s) {
            return id;
        }
        let id = self.states.len() as StateId;
        self.states.push(s.clone());
        self.index.insert(s.clone(), id);
        id
    }

    pub fn get(&self, id: StateId) -> &State {
        &self.states[id as usize]
    }

    pub fn lookup(&self, s: &State) -> Option<StateId> {
        self.index.get(s).copied()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// One line of the optional expansion trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: u64,
    pub state_hash: u64,
    pub action: ActionId,
    pub g: i64,
    pub q: f64,
    pub priority: f64,
}

impl std::fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:016x} {} {} {} {}",
            self.iteration, self.state_hash, self.action, self.g, self.q, self.priority
        )
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub arena: StateArena,
    pub tuples: Vec<ReplayTuple>,
    pub result: EpisodeResult,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub w: f64,
    pub r_bot: f64,
    pub budget: Budget,
    pub trace: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            w: 2.0,
            r_bot: DEFAULT_R_BOT,
            budget: Budget::unlimited(),
            trace: false,
        }
    }
}

#[derive(Clone, Copy)]
enum Scoring {
    Weighted(f64),
    Greedy,
}

impl Scoring {
    fn priority(self, g: i64, q: f64) -> f64 {
        match self {
            Scoring::Weighted(w) => g as f64 + w * q,
            Scoring::Greedy => q,
        }
    }
}

struct Node {
    parent: Option<(StateId, ActionId)>,
    g: i64,
}

struct Engine<'a, Q: ActionValueFn + ?Sized> {
    task: &'a GroundTask,
    q: &'a Q,
    scoring: Scoring,
    arena: StateArena,
    nodes: Vec<Node>,
    frontier: Frontier,
    record: bool,
    tuples: Vec<Option<ReplayTuple>>,
    open_bootstrap: HashMap<(StateId, ActionId), usize>,
    trace: Option<Vec<TraceEntry>>,
    #[cfg(debug_assertions)]
    pushed: std::collections::HashSet<(StateId, ActionId)>,
}

fn sanitize(q: f64) -> f64 {
    if q.is_nan() {
        f64::NEG_INFINITY
    } else {
        q
    }
}

impl<'a, Q: ActionValueFn + ?Sized> Engine<'a, Q> {
    fn new(task: &'a GroundTask, q: &'a Q, scoring: Scoring, record: bool, trace: bool) -> Self {
        Engine {
            task,
            q,
            scoring,
            arena: StateArena::default(),
            nodes: Vec::new(),
            frontier: Frontier::default(),
            record,
            tuples: Vec::new(),
            open_bootstrap: HashMap::new(),
            trace: trace.then(Vec::new),
            #[cfg(debug_assertions)]
            pushed: Default::default(),
        }
    }

    fn node_for(&mut self, id: StateId) -> &mut Node {
        while self.nodes.len() <= id as usize {
            self.nodes.push(Node { parent: None, g: 0 });
        }
        &mut self.nodes[id as usize]
    }

    /// Marks `s` visited and pushes all of its pairs.
    fn discover(&mut self, s: &State, parent: Option<(StateId, ActionId)>, g: i64) -> StateId {
        let id = self.arena.intern(s);
        *self.node_for(id) = Node { parent, g };
        let app = self.task.applicable_actions(s);
        if app.is_empty() {
            return id;
        }
        let qs = self.q.action_values(self.task, s, &app);
        debug_assert_eq!(qs.len(), app.len());
        for (&a, &q) in app.iter().zip(&qs) {
            let q = sanitize(q);
            let priority = self.scoring.priority(g, q);
            #[cfg(debug_assertions)]
            {
                assert!(self.pushed.insert((id, a)), "pair pushed twice");
                if let Scoring::Weighted(w) = self.scoring {
                    if priority.is_finite() {
                        assert!((priority - (g as f64 + w * q)).abs() <= 1e-9);
                    }
                }
            }
            self.frontier.push(priority, id, a, q);
        }
        id
    }

    fn emit(&mut self, t: ReplayTuple) {
        if !self.record {
            return;
        }
        if t.kind == TupleKind::Bootstrap {
            self.open_bootstrap.insert((t.state, t.action), self.tuples.len());
        }
        self.tuples.push(Some(t));
    }

    fn path_to(&self, mut s: StateId) -> Vec<(StateId, ActionId)> {
        let mut path = Vec::new();
        while let Some((p, a)) = self.nodes[s as usize].parent {
            path.push((p, a));
            s = p;
        }
        path.reverse();
        path
    }

    /// Records goal-path returns deepest first and returns the plan.
    fn backtrack(&mut self, s: StateId, a: ActionId, goal: StateId) -> Vec<ActionId> {
        let mut path = self.path_to(s);
        path.push((s, a));
        if self.record {
            let mut ret = 0.0;
            let mut succ = goal;
            for &(ps, pa) in path.iter().rev() {
                ret -= 1.0;
                if let Some(i) = self.open_bootstrap.remove(&(ps, pa)) {
                    self.tuples[i] = None;
                }
                self.tuples.push(Some(ReplayTuple {
                    state: ps,
                    action: pa,
                    bound: ret,
                    kind: TupleKind::GoalPath,
                    successor: Some(succ),
                }));
                succ = ps;
            }
        }
        path.into_iter().map(|(_, a)| a).collect()
    }

    fn run(mut self, budget: &Budget, r_bot: f64, batch: usize) -> Episode {
        let start = Instant::now();
        let task = self.task;
        let s0 = task.init().clone();
        if task.is_goal(&s0) {
            self.arena.intern(&s0);
            let result = EpisodeResult::new(task, Outcome::Goal, 0, Some(Vec::new()), start.elapsed());
            return self.finish(result);
        }
        self.discover(&s0, None, 0);
        let mut expansions = 0u64;
        let mut iteration = 0u64;
        let outcome;
        let mut plan = None;
        loop {
            if self.frontier.is_empty() {
                outcome = Outcome::FrontierEmpty;
                break;
            }
            if let Some(o) = budget.exceeded(expansions, start) {
                outcome = o;
                break;
            }
            let take = (batch as u64).min(budget.remaining(expansions)).max(1) as usize;
            let mut popped = Vec::with_capacity(take);
            while popped.len() < take {
                match self.frontier.pop() {
                    Some(e) => popped.push(e),
                    None => break,
                }
            }
            let mut goal_hit = None;
            for e in popped {
                iteration += 1;
                let s = self.arena.get(e.state).clone();
                let g = self.nodes[e.state as usize].g;
                if let Some(tr) = &mut self.trace {
                    tr.push(TraceEntry {
                        iteration,
                        state_hash: s.hash64(),
                        action: e.action,
                        g,
                        q: e.q,
                        priority: e.priority,
                    });
                }
                let next = task.apply_unchecked(&s, e.action);
                expansions += 1;
                if task.is_goal(&next) {
                    if goal_hit.is_none() {
                        let gid = self.arena.intern(&next);
                        goal_hit = Some((e.state, e.action, gid));
                    }
                    continue;
                }
                if task.applicable_actions(&next).is_empty() {
                    self.emit(ReplayTuple {
                        state: e.state,
                        action: e.action,
                        bound: r_bot,
                        kind: TupleKind::DeadEnd,
                        successor: None,
                    });
                    continue;
                }
                let known = self.arena.lookup(&next);
                let nid = match known {
                    Some(id) => id,
                    None => self.discover(&next, Some((e.state, e.action)), g - 1),
                };
                self.emit(ReplayTuple {
                    state: e.state,
                    action: e.action,
                    bound: f64::NEG_INFINITY,
                    kind: TupleKind::Bootstrap,
                    successor: Some(nid),
                });
            }
            if let Some((s, a, gid)) = goal_hit {
                plan = Some(self.backtrack(s, a, gid));
                outcome = Outcome::Goal;
                break;
            }
        }
        let result = EpisodeResult::new(task, outcome, expansions, plan, start.elapsed());
        self.finish(result)
    }

    fn finish(self, result: EpisodeResult) -> Episode {
        Episode {
            arena: self.arena,
            tuples: self.tuples.into_iter().flatten().collect(),
            result,
            trace: self.trace.unwrap_or_default(),
        }
    }
}

/// One training episode: weighted best-first search with priority
/// `g(s) + w·Q(s, a)`, emitting replay tuples as it goes.
pub fn run_episode<Q: ActionValueFn + ?Sized>(task: &GroundTask, q: &Q, cfg: &EpisodeConfig) -> Episode {
    Engine::new(task, q, Scoring::Weighted(cfg.w), true, cfg.trace).run(&cfg.budget, cfg.r_bot, 1)
}

/// Weighted A* popping up to `batch` pairs per iteration.
pub fn wastar_solve<Q: ActionValueFn + ?Sized>(task: &GroundTask, q: &Q, w: f64, batch: usize, budget: &Budget) -> EpisodeResult {
    assert!(batch >= 1, "batch size must be positive");
    Engine::new(task, q, Scoring::Weighted(w), false, false)
        .run(budget, DEFAULT_R_BOT, batch)
        .result
}

/// Like [`wastar_solve`] but returns the expansion trace as well.
pub fn wastar_traced<Q: ActionValueFn + ?Sized>(task: &GroundTask, q: &Q, w: f64, batch: usize, budget: &Budget) -> (EpisodeResult, Vec<TraceEntry>) {
    let ep = Engine::new(task, q, Scoring::Weighted(w), false, true).run(budget, DEFAULT_R_BOT, batch);
    (ep.result, ep.trace)
}

/// Greedy best-first: priority is `Q(s, a)` alone.
pub fn gbfs_solve<Q: ActionValueFn + ?Sized>(task: &GroundTask, q: &Q, batch: usize, budget: &Budget) -> EpisodeResult {
    assert!(batch >= 1, "batch size must be positive");
    Engine::new(task, q, Scoring::Greedy, false, false)
        .run(budget, DEFAULT_R_BOT, batch)
        .result
}

pub fn gbfs_traced<Q: ActionValueFn + ?Sized>(task: &GroundTask, q: &Q, batch: usize, budget: &Budget) -> (EpisodeResult, Vec<TraceEntry>) {
    let ep = Engine::new(task, q, Scoring::Greedy, false, true).run(budget, DEFAULT_R_BOT, batch);
    (ep.result, ep.trace)
}

/// Follows `argmax_a Q(s, a)` from the initial state, ties to the lowest
/// action id. `budget.max_expansions` caps the number of steps.
pub fn greedy_rollout<Q: ActionValueFn + ?Sized>(task: &GroundTask, q: &Q, budget: &Budget) -> EpisodeResult {
    let start = Instant::now();
    let mut s = task.init().clone();
    let mut plan = Vec::new();
    let mut seen = std::collections::HashSet::new();
    seen.insert(s.clone());
    let mut steps = 0u64;
    let outcome = loop {
        if task.is_goal(&s) {
            break Outcome::Goal;
        }
        if let Some(o) = budget.exceeded(steps, start) {
            break o;
        }
        let app = task.applicable_actions(&s);
        if app.is_empty() {
            break Outcome::DeadEnd;
        }
        let qs = q.action_values(task, &s, &app);
        let mut best = 0;
        for (i, &v) in qs.iter().enumerate() {
            if sanitize(v) > sanitize(qs[best]) {
                best = i;
            }
        }
        s = task.apply_unchecked(&s, app[best]);
        plan.push(app[best]);
        steps += 1;
        if !task.is_goal(&s) && !seen.insert(s.clone()) {
            break Outcome::Cycle;
        }
    };
    let plan = (outcome == Outcome::Goal).then_some(plan);
    EpisodeResult::new(task, outcome, steps, plan, start.elapsed())
}

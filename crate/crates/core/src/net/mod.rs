//! Relational message-passing action-value network with a hand-written
//! reverse pass.
//!
//! Node embeddings start at zero. Each round every atom `r(o_1,..,o_k)` feeds
//! the concatenated embeddings of its arguments through the relation's
//! combiner, whose output is split into one message per argument position.
//! A node aggregates its incoming messages coordinate-wise with smoothmax and
//! is updated residually, `X ← X + U([X ‖ m])`. After the last round all node
//! embeddings are smoothmax-pooled and every action object `o_a` is read out
//! as `Q(s, a) = MLP_Q([X(o_a) ‖ pool])`.

mod checkpoint;
mod mlp;
mod optim;
mod smoothmax;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GoalMode, RelationTable, RelationalGraph};
use crate::grounding::{ActionId, Signature};
use crate::par::Exec;

pub use checkpoint::CHECKPOINT_FORMAT_VERSION;
pub use mlp::Mlp;
pub use optim::{LearningRates, OptimizerKind, OptimizerState};
pub use smoothmax::smoothmax;

/// Samples per gradient chunk. Chunks are summed in order, so the result is
/// independent of how chunks are scheduled.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("smoothmax of an empty vector")]
    EmptyInput,
    #[error("relation {0} has no combiner in this network")]
    MissingRelation(u32),
    #[error("action {0} is not an action object of the graph")]
    MissingAction(ActionId),
    #[error("non-finite regression target {0}")]
    NonFiniteTarget(f64),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("network was built for domain `{expected}`, task belongs to `{found}`")]
    DomainMismatch { expected: String, found: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub dim: usize,
    pub layers: usize,
    pub alpha: f64,
    /// Combiner hidden width; `None` uses the output width `arity * dim`.
    pub combiner_hidden: Option<usize>,
    /// Update hidden width; `None` uses `dim`.
    pub update_hidden: Option<usize>,
    /// Readout hidden width; `None` uses `dim`.
    pub readout_hidden: Option<usize>,
    pub goal_mode: GoalMode,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            dim: 32,
            layers: 30,
            alpha: 12.0,
            combiner_hidden: None,
            update_hidden: None,
            readout_hidden: None,
            goal_mode: GoalMode::Distinguished,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.dim == 0 {
            return Err(NetError::Config("dim must be at least 1".into()));
        }
        if self.layers == 0 {
            return Err(NetError::Config("layers must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(NetError::Config("alpha must be positive".into()));
        }
        for (name, w) in [
            ("combiner_hidden", self.combiner_hidden),
            ("update_hidden", self.update_hidden),
            ("readout_hidden", self.readout_hidden),
        ] {
            if w == Some(0) {
                return Err(NetError::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub combiners: Vec<Mlp>,
    pub update: Mlp,
    pub readout: Mlp,
    pub total: usize,
}

impl Layout {
    fn new(relations: &RelationTable, cfg: &NetConfig) -> Self {
        let d = cfg.dim;
        let mut off = 0;
        let mut combiners = Vec::with_capacity(relations.len());
        for r in relations.iter() {
            let width = r.arity * d;
            let hidden = if width == 0 { 0 } else { cfg.combiner_hidden.unwrap_or(width) };
            let m = Mlp::new(width, hidden, width, off);
            off = m.end();
            combiners.push(m);
        }
        let update = Mlp::new(2 * d, cfg.update_hidden.unwrap_or(d), d, off);
        off = update.end();
        let readout = Mlp::new(2 * d, cfg.readout_hidden.unwrap_or(d), 1, off);
        off = readout.end();
        Layout {
            combiners,
            update,
            readout,
            total: off,
        }
    }

    /// First index of the readout parameters; everything before belongs to
    /// the message-passing part.
    pub fn readout_start(&self) -> usize {
        self.readout.offset
    }
}

/// Flat gradient vector plus the loss it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub grad: Vec<f64>,
    pub loss: f64,
    pub count: usize,
}

/// One regression sample: the value of `action` in `graph` should be `target`.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub graph: &'a RelationalGraph,
    pub action: ActionId,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    domain: String,
    cfg: NetConfig,
    relations: RelationTable,
    layout: Layout,
    params: Vec<f64>,
    version: u64,
}

// Structural indices shared by forward and backward.
struct Prepared {
    msg_row: Vec<usize>,
    pre_off: Vec<usize>,
    msg_rows_total: usize,
    pre_total: usize,
    incoming: Vec<Vec<usize>>,
}

struct LayerTrace {
    pre: Vec<f64>,
    msgs: Vec<f64>,
    m: Vec<f64>,
    upd_pre: Vec<f64>,
}

struct Trace {
    xs: Vec<Vec<f64>>,
    layers: Vec<LayerTrace>,
}

impl QNetwork {
    /// Weights uniform in `±1/sqrt(fan_in)` from a ChaCha8 stream seeded by
    /// `seed`, biases zero.
    pub fn init(sig: &Signature, cfg: NetConfig, seed: u64) -> Result<Self, NetError> {
        cfg.validate()?;
        let relations = RelationTable::from_signature(sig);
        let layout = Layout::new(&relations, &cfg);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mlps = layout
            .combiners
            .iter()
            .chain([&layout.update, &layout.readout]);
        for m in mlps {
            for (range, fan_in) in m.weight_ranges() {
                if fan_in == 0 {
                    continue;
                }
                let bound = 1.0 / (fan_in as f64).sqrt();
                for p in &mut params[range] {
                    *p = rng.gen_range(-bound..bound);
                }
            }
        }
        Ok(QNetwork {
            domain: sig.domain.clone(),
            cfg,
            relations,
            layout,
            params,
            version: 0,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn relations(&self) -> &RelationTable {
        &self.relations
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    #[cfg(test)]
    pub(crate) fn bump_version(&mut self) {
        self.version += 1;
    }

    /// Errors unless `sig` has exactly the relation vocabulary of this network.
    pub fn check_signature(&self, sig: &Signature) -> Result<(), NetError> {
        if sig.domain != self.domain || RelationTable::from_signature(sig) != self.relations {
            return Err(NetError::DomainMismatch {
                expected: self.domain.clone(),
                found: sig.domain.clone(),
            });
        }
        Ok(())
    }

    fn prepare(&self, g: &RelationalGraph) -> Result<Prepared, NetError> {
        let mut msg_row = Vec::with_capacity(g.atoms().len());
        let mut pre_off = Vec::with_capacity(g.atoms().len());
        let mut incoming = vec![Vec::new(); g.nodes().len()];
        let (mut rows, mut pre) = (0, 0);
        for atom in g.atoms() {
            let comb = self
                .layout
                .combiners
                .get(atom.relation as usize)
                .ok_or(NetError::MissingRelation(atom.relation))?;
            if comb.input != atom.args.len() * self.cfg.dim {
                return Err(NetError::MissingRelation(atom.relation));
            }
            msg_row.push(rows);
            pre_off.push(pre);
            for (pos, &node) in atom.args.iter().enumerate() {
                incoming[node as usize].push(rows + pos);
            }
            rows += atom.args.len();
            pre += comb.hidden;
        }
        Ok(Prepared {
            msg_row,
            pre_off,
            msg_rows_total: rows,
            pre_total: pre,
            incoming,
        })
    }

    fn gather(&self, x: &[f64], args: &[u32], buf: &mut Vec<f64>) {
        let d = self.cfg.dim;
        buf.clear();
        for &o in args {
            buf.extend_from_slice(&x[o as usize * d..(o as usize + 1) * d]);
        }
    }

    fn propagate(&self, g: &RelationalGraph, prep: &Prepared, keep: bool) -> Trace {
        let d = self.cfg.dim;
        let n = g.nodes().len();
        let p = &self.params;
        let upd = &self.layout.update;
        let mut x = vec![0.0; n * d];
        let mut xs = Vec::new();
        let mut layers = Vec::new();
        let mut input = Vec::new();
        let mut u_in = vec![0.0; 2 * d];
        let mut u_out = vec![0.0; d];
        for _ in 0..self.cfg.layers {
            let mut pre = vec![0.0; prep.pre_total];
            let mut msgs = vec![0.0; prep.msg_rows_total * d];
            for (i, atom) in g.atoms().iter().enumerate() {
                let comb = &self.layout.combiners[atom.relation as usize];
                if comb.output == 0 {
                    continue;
                }
                self.gather(&x, &atom.args, &mut input);
                let r = prep.msg_row[i] * d;
                let h = prep.pre_off[i];
                comb.forward(p, &input, &mut pre[h..h + comb.hidden], &mut msgs[r..r + comb.output]);
            }
            let mut m = vec![0.0; n * d];
            for o in 0..n {
                smoothmax::smoothmax_rows(&msgs, &prep.incoming[o], d, self.cfg.alpha, &mut m[o * d..(o + 1) * d]);
            }
            let mut upd_pre = vec![0.0; n * upd.hidden];
            let mut next = x.clone();
            for o in 0..n {
                u_in[..d].copy_from_slice(&x[o * d..(o + 1) * d]);
                u_in[d..].copy_from_slice(&m[o * d..(o + 1) * d]);
                upd.forward(p, &u_in, &mut upd_pre[o * upd.hidden..(o + 1) * upd.hidden], &mut u_out);
                for c in 0..d {
                    next[o * d + c] += u_out[c];
                }
            }
            if keep {
                xs.push(x);
                layers.push(LayerTrace {
                    pre,
                    msgs,
                    m,
                    upd_pre,
                });
            }
            x = next;
        }
        xs.push(x);
        Trace { xs, layers }
    }

    fn pool(&self, x: &[f64], n: usize) -> Vec<f64> {
        let d = self.cfg.dim;
        let rows: Vec<usize> = (0..n).collect();
        let mut out = vec![0.0; d];
        smoothmax::smoothmax_rows(x, &rows, d, self.cfg.alpha, &mut out);
        out
    }

    fn readout_input(&self, x: &[f64], node: usize, pooled: &[f64]) -> Vec<f64> {
        let d = self.cfg.dim;
        let mut r = Vec::with_capacity(2 * d);
        r.extend_from_slice(&x[node * d..(node + 1) * d]);
        r.extend_from_slice(pooled);
        r
    }

    /// One value per action object, in the graph's action order.
    pub fn forward(&self, g: &RelationalGraph) -> Result<Vec<f64>, NetError> {
        if g.num_actions() == 0 {
            return Ok(Vec::new());
        }
        let prep = self.prepare(g)?;
        let trace = self.propagate(g, &prep, false);
        let x = trace.xs.last().unwrap();
        let pooled = self.pool(x, g.nodes().len());
        let ro = &self.layout.readout;
        let mut pre = vec![0.0; ro.hidden];
        let mut out = [0.0];
        Ok((0..g.num_actions())
            .map(|k| {
                let r = self.readout_input(x, g.action_node(k), &pooled);
                ro.forward(&self.params, &r, &mut pre, &mut out);
                out[0]
            })
            .collect())
    }

    /// Value of the action object `k` and the gradient of `dq * Q` into `grad`.
    fn backprop_one(&self, g: &RelationalGraph, k: usize, dq_of: impl FnOnce(f64) -> f64, grad: &mut [f64]) -> Result<f64, NetError> {
        let d = self.cfg.dim;
        let n = g.nodes().len();
        let alpha = self.cfg.alpha;
        let p = &self.params;
        let prep = self.prepare(g)?;
        let trace = self.propagate(g, &prep, true);
        let xl = trace.xs.last().unwrap();
        let pooled = self.pool(xl, n);
        let ro = &self.layout.readout;
        let node = g.action_node(k);
        let r_in = self.readout_input(xl, node, &pooled);
        let mut r_pre = vec![0.0; ro.hidden];
        let mut out = [0.0];
        ro.forward(p, &r_in, &mut r_pre, &mut out);
        let q = out[0];
        let dq = dq_of(q);
        if dq == 0.0 {
            return Ok(q);
        }

        let mut dr_in = vec![0.0; 2 * d];
        ro.backward(p, &r_in, &r_pre, &[dq], grad, &mut dr_in);
        let mut dx = vec![0.0; n * d];
        for c in 0..d {
            dx[node * d + c] += dr_in[c];
        }
        let all: Vec<usize> = (0..n).collect();
        smoothmax::smoothmax_rows_backward(xl, &all, d, alpha, &pooled, &dr_in[d..], &mut dx);

        let upd = &self.layout.update;
        let mut u_in = vec![0.0; 2 * d];
        let mut du_in = vec![0.0; 2 * d];
        let mut input = Vec::new();
        for (l, lt) in trace.layers.iter().enumerate().rev() {
            let x = &trace.xs[l];
            let mut dprev = dx.clone();
            let mut dm = vec![0.0; n * d];
            for o in 0..n {
                u_in[..d].copy_from_slice(&x[o * d..(o + 1) * d]);
                u_in[d..].copy_from_slice(&lt.m[o * d..(o + 1) * d]);
                du_in.fill(0.0);
                let h = upd.hidden;
                upd.backward(p, &u_in, &lt.upd_pre[o * h..(o + 1) * h], &dx[o * d..(o + 1) * d], grad, &mut du_in);
                for c in 0..d {
                    dprev[o * d + c] += du_in[c];
                    dm[o * d + c] = du_in[d + c];
                }
            }
            let mut dmsgs = vec![0.0; lt.msgs.len()];
            for o in 0..n {
                smoothmax::smoothmax_rows_backward(
                    &lt.msgs,
                    &prep.incoming[o],
                    d,
                    alpha,
                    &lt.m[o * d..(o + 1) * d],
                    &dm[o * d..(o + 1) * d],
                    &mut dmsgs,
                );
            }
            for (i, atom) in g.atoms().iter().enumerate() {
                let comb = &self.layout.combiners[atom.relation as usize];
                if comb.output == 0 {
                    continue;
                }
                let r = prep.msg_row[i] * d;
                let dout = &dmsgs[r..r + comb.output];
                if dout.iter().all(|&v| v == 0.0) {
                    continue;
                }
                self.gather(x, &atom.args, &mut input);
                let h = prep.pre_off[i];
                let mut din = vec![0.0; comb.input];
                comb.backward(p, &input, &lt.pre[h..h + comb.hidden], dout, grad, &mut din);
                for (pos, &o) in atom.args.iter().enumerate() {
                    let o = o as usize;
                    for c in 0..d {
                        dprev[o * d + c] += din[pos * d + c];
                    }
                }
            }
            dx = dprev;
        }
        Ok(q)
    }

    /// Gradient of `Q(s, a)` itself with respect to every parameter.
    pub fn value_grad(&self, g: &RelationalGraph, action: ActionId) -> Result<(f64, Vec<f64>), NetError> {
        let k = action_index(g, action)?;
        let mut grad = vec![0.0; self.params.len()];
        let q = self.backprop_one(g, k, |_| 1.0, &mut grad)?;
        Ok((q, grad))
    }

    /// Mean squared error over the batch and its exact gradient.
    pub fn loss_and_grad(&self, batch: &[Sample<'_>]) -> Result<Gradients, NetError> {
        self.loss_and_grad_with(batch, Exec::Parallel)
    }

    pub fn loss_and_grad_with(&self, batch: &[Sample<'_>], exec: Exec) -> Result<Gradients, NetError> {
        if batch.is_empty() {
            return Err(NetError::EmptyBatch);
        }
        for s in batch {
            if !s.target.is_finite() {
                return Err(NetError::NonFiniteTarget(s.target));
            }
        }
        let scale = 2.0 / batch.len() as f64;
        let parts = exec.map_chunks(batch, GRAD_CHUNK, |chunk| -> Result<(f64, Vec<f64>), NetError> {
            let mut grad = vec![0.0; self.params.len()];
            let mut sq = 0.0;
            for s in chunk {
                let k = action_index(s.graph, s.action)?;
                let mut err = 0.0;
                self.backprop_one(
                    s.graph,
                    k,
                    |q| {
                        err = q - s.target;
                        scale * err
                    },
                    &mut grad,
                )?;
                sq += err * err;
            }
            Ok((sq, grad))
        });
        let mut grad = vec![0.0; self.params.len()];
        let mut sq = 0.0;
        for part in parts {
            let (s, g) = part?;
            sq += s;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        Ok(Gradients {
            grad,
            loss: sq / batch.len() as f64,
            count: batch.len(),
        })
    }

    /// Applies one optimizer step and increments the version counter.
    pub fn apply_update(&mut self, grads: &Gradients, lrs: LearningRates, opt: &mut OptimizerState) {
        let split = self.layout.readout_start();
        opt.step(&mut self.params, &grads.grad, split, lrs);
        self.version += 1;
    }
}

fn action_index(g: &RelationalGraph, action: ActionId) -> Result<usize, NetError> {
    g.actions()
        .position(|a| a == action)
        .ok_or(NetError::MissingAction(action))
}

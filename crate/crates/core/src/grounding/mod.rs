//! Full typed grounding of a domain and problem into an explicit transition
//! system.
//!
//! Every type-consistent instantiation of every predicate becomes an atom and
//! every type-consistent instantiation of every schema with pairwise distinct
//! objects becomes an action. No reachability or relevance pruning is done,
//! so counts depend only on the object table.

mod state;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::pddl::{AtomTemplate, Domain, Fact, Instance, Term};

pub use state::State;

pub type ObjectId = u32;
pub type AtomId = u32;
pub type ActionId = u32;

/// Default ceiling on the number of ground actions (and atoms).
pub const DEFAULT_GROUNDING_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundError {
    #[error("grounding produced more than {limit} {what}")]
    CapacityExceeded { what: &'static str, limit: usize },
    #[error("action {action} is not applicable in the given state")]
    NotApplicable { action: String },
    #[error("instance is inconsistent with domain `{domain}`: {message}")]
    Inconsistent { domain: String, message: String },
}

/// Predicate and schema names/arities of a domain, shared by all of its tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub domain: String,
    pub predicates: Vec<(String, usize)>,
    pub schemas: Vec<(String, usize)>,
}

impl Signature {
    pub fn from_domain(dom: &Domain) -> Self {
        Signature {
            domain: dom.name.clone(),
            predicates: dom
                .predicates
                .iter()
                .map(|p| (p.name.clone(), p.arity()))
                .collect(),
            schemas: dom.schemas.iter().map(|s| (s.name.clone(), s.arity())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectInfo {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAtom {
    pub id: AtomId,
    pub predicate: u32,
    pub args: Vec<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub id: ActionId,
    pub schema: u32,
    pub args: Vec<ObjectId>,
    pub pre: Vec<AtomId>,
    pub add: Vec<AtomId>,
    /// Delete effects minus add effects (delete-then-add semantics).
    pub del: Vec<AtomId>,
}

#[derive(Debug, Clone)]
pub struct GroundTask {
    name: String,
    signature: Arc<Signature>,
    objects: Vec<ObjectInfo>,
    atoms: Vec<GroundAtom>,
    atom_lookup: HashMap<(u32, Vec<ObjectId>), AtomId>,
    actions: Vec<GroundAction>,
    init: State,
    goal: Vec<AtomId>,
    achievers: Vec<Vec<ActionId>>,
    consumers: Vec<Vec<ActionId>>,
    // successor-generator index: every action is filed under one precondition atom
    triggered: Vec<Vec<ActionId>>,
    unconditional: Vec<ActionId>,
}

/// Odometer over the cartesian product of candidate lists, lexicographic.
fn for_each_tuple(cands: &[Vec<ObjectId>], mut f: impl FnMut(&[ObjectId]) -> Result<(), GroundError>) -> Result<(), GroundError> {
    if cands.iter().any(Vec::is_empty) {
        return Ok(());
    }
    let mut idx = vec![0usize; cands.len()];
    let mut tuple: Vec<ObjectId> = cands.iter().map(|c| c[0]).collect();
    loop {
        f(&tuple)?;
        let mut k = cands.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < cands[k].len() {
                tuple[k] = cands[k][idx[k]];
                break;
            }
            idx[k] = 0;
            tuple[k] = cands[k][0];
        }
    }
}

/// Grounds with the default capacity ceiling.
pub fn ground(dom: &Domain, inst: &Instance) -> Result<GroundTask, GroundError> {
    ground_with_limit(dom, inst, DEFAULT_GROUNDING_LIMIT)
}

pub fn ground_with_limit(
    dom: &Domain,
    inst: &Instance,
    limit: usize,
) -> Result<GroundTask, GroundError> {
    let inconsistent = |message: String| GroundError::Inconsistent {
        domain: dom.name.clone(),
        message,
    };
    if inst.domain_name != dom.name {
        return Err(inconsistent(format!("problem names domain `{}`", inst.domain_name)));
    }

    let objects: Vec<ObjectInfo> = dom
        .constants
        .iter()
        .chain(&inst.objects)
        .map(|o| ObjectInfo {
            name: o.name.clone(),
            ty: o.ty.clone(),
        })
        .collect();
    let object_ids: HashMap<&str, ObjectId> = objects
        .iter()
        .enumerate()
        .map(|(i, o)| (o.name.as_str(), i as ObjectId))
        .collect();
    let of_type = |ty: &str| -> Vec<ObjectId> {
        objects
            .iter()
            .enumerate()
            .filter(|(_, o)| dom.is_subtype(&o.ty, ty))
            .map(|(i, _)| i as ObjectId)
            .collect()
    };

    let mut atoms = Vec::new();
    let mut atom_lookup = HashMap::new();
    for (pi, p) in dom.predicates.iter().enumerate() {
        let cands: Vec<Vec<ObjectId>> = p.param_types.iter().map(|t| of_type(t)).collect();
        for_each_tuple(&cands, |tuple| {
            if atoms.len() >= limit {
                return Err(GroundError::CapacityExceeded { what: "atoms", limit });
            }
            let id = atoms.len() as AtomId;
            atoms.push(GroundAtom {
                id,
                predicate: pi as u32,
                args: tuple.to_vec(),
            });
            atom_lookup.insert((pi as u32, tuple.to_vec()), id);
            Ok(())
        })?;
    }

    let pred_ids: HashMap<&str, u32> = dom
        .predicates
        .iter()
        .enumerate()
        .map(|(i, p)| (p.name.as_str(), i as u32))
        .collect();

    let resolve_fact = |f: &Fact| -> Result<AtomId, GroundError> {
        let p = *pred_ids
            .get(f.predicate.as_str())
            .ok_or_else(|| inconsistent(format!("unknown predicate `{}`", f.predicate)))?;
        let args = f
            .args
            .iter()
            .map(|a| {
                object_ids
                    .get(a.as_str())
                    .copied()
                    .ok_or_else(|| inconsistent(format!("unknown object `{a}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        atom_lookup
            .get(&(p, args))
            .copied()
            .ok_or_else(|| inconsistent(format!("atom {f} is not type-consistent")))
    };

    let init = State::new(inst.init.iter().map(resolve_fact).collect::<Result<_, _>>()?);
    let mut goal: Vec<AtomId> = inst.goal.iter().map(resolve_fact).collect::<Result<_, _>>()?;
    goal.sort_unstable();
    goal.dedup();

    let mut actions: Vec<GroundAction> = Vec::new();
    for (si, schema) in dom.schemas.iter().enumerate() {
        let cands: Vec<Vec<ObjectId>> = schema.params.iter().map(|p| of_type(&p.ty)).collect();
        let instantiate = |templates: &[AtomTemplate], tuple: &[ObjectId]| -> Result<Vec<AtomId>, GroundError> {
            let mut ids = templates
                .iter()
                .map(|t| {
                    let args: Vec<ObjectId> = t
                        .args
                        .iter()
                        .map(|a| match a {
                            Term::Param(i) => tuple[*i],
                            Term::Const(c) => object_ids[c.as_str()],
                        })
                        .collect();
                    atom_lookup
                        .get(&(pred_ids[t.predicate.as_str()], args))
                        .copied()
                        .ok_or_else(|| inconsistent(format!("schema `{}` instantiates an ill-typed atom", schema.name)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            ids.sort_unstable();
            ids.dedup();
            Ok(ids)
        };
        for_each_tuple(&cands, |tuple| {
            for (i, a) in tuple.iter().enumerate() {
                if tuple[..i].contains(a) {
                    return Ok(());
                }
            }
            if actions.len() >= limit {
                return Err(GroundError::CapacityExceeded { what: "actions", limit });
            }
            let pre = instantiate(&schema.precondition, tuple)?;
            let add = instantiate(&schema.add_effects, tuple)?;
            let mut del = instantiate(&schema.del_effects, tuple)?;
            del.retain(|d| add.binary_search(d).is_err());
            actions.push(GroundAction {
                id: actions.len() as ActionId,
                schema: si as u32,
                args: tuple.to_vec(),
                pre,
                add,
                del,
            });
            Ok(())
        })?;
    }

    let mut achievers = vec![Vec::new(); atoms.len()];
    let mut consumers = vec![Vec::new(); atoms.len()];
    for a in &actions {
        for &p in &a.add {
            achievers[p as usize].push(a.id);
        }
        for &p in &a.pre {
            consumers[p as usize].push(a.id);
        }
    }

    // Prefer filing an action under a fluent precondition: static atoms hold in
    // nearly every state and would make their buckets useless as filters.
    let mut fluent = vec![false; dom.predicates.len()];
    for s in &dom.schemas {
        for t in s.add_effects.iter().chain(&s.del_effects) {
            fluent[pred_ids[t.predicate.as_str()] as usize] = true;
        }
    }
    let mut triggered: Vec<Vec<ActionId>> = vec![Vec::new(); atoms.len()];
    let mut unconditional = Vec::new();
    for a in &actions {
        let best = a.pre.iter().copied().min_by_key(|&p| {
            let is_static = !fluent[atoms[p as usize].predicate as usize];
            (is_static, triggered[p as usize].len())
        });
        match best {
            Some(p) => triggered[p as usize].push(a.id),
            None => unconditional.push(a.id),
        }
    }

    Ok(GroundTask {
        name: inst.name.clone(),
        signature: Arc::new(Signature::from_domain(dom)),
        objects,
        atoms,
        atom_lookup,
        actions,
        init,
        goal,
        achievers,
        consumers,
        triggered,
        unconditional,
    })
}

impl GroundTask {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn objects(&self) -> &[ObjectInfo] {
        &self.objects
    }

    pub fn atoms(&self) -> &[GroundAtom] {
        &self.atoms
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id as usize]
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn goal(&self) -> &[AtomId] {
        &self.goal
    }

    pub fn achievers(&self, atom: AtomId) -> &[ActionId] {
        &self.achievers[atom as usize]
    }

    pub fn consumers(&self, atom: AtomId) -> &[ActionId] {
        &self.consumers[atom as usize]
    }

    pub fn atom_id(&self, predicate: &str, args: &[&str]) -> Option<AtomId> {
        let p = self.signature.predicates.iter().position(|(n, _)| n == predicate)? as u32;
        let args = args
            .iter()
            .map(|a| self.objects.iter().position(|o| o.name == *a).map(|i| i as ObjectId))
            .collect::<Option<Vec<_>>>()?;
        self.atom_lookup.get(&(p, args)).copied()
    }

    pub fn action_id(&self, schema: &str, args: &[&str]) -> Option<ActionId> {
        let s = self.signature.schemas.iter().position(|(n, _)| n == schema)? as u32;
        let args = args
            .iter()
            .map(|a| self.objects.iter().position(|o| o.name == *a).map(|i| i as ObjectId))
            .collect::<Option<Vec<_>>>()?;
        self.actions
            .iter()
            .find(|a| a.schema == s && a.args == args)
            .map(|a| a.id)
    }

    /// Builds a state from facts; unknown atoms are an error.
    pub fn state_from_facts<'a>(&self, facts: impl IntoIterator<Item = &'a Fact>) -> Result<State, GroundError> {
        let ids = facts
            .into_iter()
            .map(|f| {
                let args: Vec<&str> = f.args.iter().map(String::as_str).collect();
                self.atom_id(&f.predicate, &args).ok_or_else(|| GroundError::Inconsistent {
                    domain: self.signature.domain.clone(),
                    message: format!("unknown atom {f}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(State::new(ids))
    }

    pub fn atom_name(&self, id: AtomId) -> String {
        let a = &self.atoms[id as usize];
        let args: Vec<&str> = a.args.iter().map(|&o| self.objects[o as usize].name.as_str()).collect();
        format!("{}({})", self.signature.predicates[a.predicate as usize].0, args.join(","))
    }

    pub fn action_name(&self, id: ActionId) -> String {
        let a = &self.actions[id as usize];
        let args: Vec<&str> = a.args.iter().map(|&o| self.objects[o as usize].name.as_str()).collect();
        format!("{}({})", self.signature.schemas[a.schema as usize].0, args.join(","))
    }

    pub fn is_applicable(&self, s: &State, a: ActionId) -> bool {
        s.contains_all(&self.actions[a as usize].pre)
    }

    /// Actions whose preconditions hold in `s`, ascending by id.
    pub fn applicable_actions(&self, s: &State) -> Vec<ActionId> {
        let mut cands: Vec<ActionId> = self.unconditional.clone();
        for &p in s.atoms() {
            if let Some(bucket) = self.triggered.get(p as usize) {
                cands.extend_from_slice(bucket);
            }
        }
        cands.sort_unstable();
        cands.retain(|&a| self.is_applicable(s, a));
        cands
    }

    /// `(s \ del(a)) ∪ add(a)`; `s` itself is left untouched.
    pub fn apply(&self, s: &State, a: ActionId) -> Result<State, GroundError> {
        if !self.is_applicable(s, a) {
            return Err(GroundError::NotApplicable {
                action: self.action_name(a),
            });
        }
        Ok(self.apply_unchecked(s, a))
    }

    pub(crate) fn apply_unchecked(&self, s: &State, a: ActionId) -> State {
        let act = &self.actions[a as usize];
        let mut out: Vec<AtomId> = Vec::with_capacity(s.len() + act.add.len());
        let (mut i, mut j) = (0, 0);
        let kept: Vec<AtomId> = s
            .atoms()
            .iter()
            .copied()
            .filter(|x| act.del.binary_search(x).is_err())
            .collect();
        while i < kept.len() || j < act.add.len() {
            let next = match (kept.get(i), act.add.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        State::from_sorted(out)
    }

    pub fn is_goal(&self, s: &State) -> bool {
        s.contains_all(&self.goal)
    }

    pub fn is_dead_end(&self, s: &State) -> bool {
        self.applicable_actions(s).is_empty()
    }

    /// Replays `plan` from the initial state and reports whether it ends in a goal.
    pub fn validate_plan(&self, plan: &[ActionId]) -> bool {
        let mut s = self.init.clone();
        for &a in plan {
            match self.apply(&s, a) {
                Ok(n) => s = n,
                Err(_) => return false,
            }
        }
        self.is_goal(&s)
    }

    pub fn describe_state(&self, s: &State) -> StateDisplay<'_> {
        StateDisplay { task: self, state: s.clone() }
    }
}

pub struct StateDisplay<'a> {
    task: &'a GroundTask,
    state: State,
}

impl fmt::Display for StateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.state.atoms().iter().map(|&a| self.task.atom_name(a)).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_instance};

    pub(crate) const BW4: &str = r#"
    (define (domain blocksworld)
      (:requirements :strips :typing)
      (:types block)
      (:predicates (on ?x - block ?y - block) (ontable ?x - block)
                   (clear ?x - block) (holding ?x - block))
      (:action pickup :parameters (?x - block)
        :precondition (and (clear ?x) (ontable ?x))
        :effect (and (holding ?x) (not (ontable ?x)) (not (clear ?x))))
      (:action putdown :parameters (?x - block)
        :precondition (holding ?x)
        :effect (and (ontable ?x) (clear ?x) (not (holding ?x))))
      (:action stack :parameters (?x - block ?y - block)
        :precondition (and (holding ?x) (clear ?y))
        :effect (and (on ?x ?y) (clear ?x) (not (holding ?x)) (not (clear ?y))))
      (:action unstack :parameters (?x - block ?y - block)
        :precondition (and (on ?x ?y) (clear ?x))
        :effect (and (holding ?x) (clear ?y) (not (on ?x ?y)) (not (clear ?x)))))
    "#;

    fn tower() -> GroundTask {
        let d = parse_domain(BW4).unwrap();
        let p = parse_instance(
            "(define (problem t) (:domain blocksworld) (:objects b1 b2 b3 - block)
               (:init (on b3 b2) (on b2 b1) (clear b3) (ontable b1))
               (:goal (on b1 b2)))",
            &d,
        )
        .unwrap();
        ground(&d, &p).unwrap()
    }

    #[test]
    fn three_blocks_ground_to_eighteen_actions() {
        let t = tower();
        assert_eq!(t.actions().len(), 3 + 3 + 6 + 6);
        // on/2 over 3 blocks plus three unary predicates
        assert_eq!(t.atoms().len(), 9 + 3 * 3);
    }

    #[test]
    fn only_unstack_applies_in_the_tower() {
        let t = tower();
        let s0 = t.init().clone();
        let stack13 = t.action_id("stack", &["b1", "b3"]).unwrap();
        let unstack32 = t.action_id("unstack", &["b3", "b2"]).unwrap();
        let app = t.applicable_actions(&s0);
        assert!(!app.contains(&stack13));
        assert!(app.contains(&unstack32));
        assert_eq!(app, vec![unstack32]);
        assert!(!t.is_goal(&s0));
    }

    #[test]
    fn apply_unstack_and_inverse() {
        let t = tower();
        let s0 = t.init().clone();
        let un = t.action_id("unstack", &["b3", "b2"]).unwrap();
        let s1 = t.apply(&s0, un).unwrap();
        let expected = t
            .state_from_facts(&[
                Fact::new("holding", &["b3"]),
                Fact::new("clear", &["b2"]),
                Fact::new("on", &["b2", "b1"]),
                Fact::new("ontable", &["b1"]),
            ])
            .unwrap();
        assert_eq!(s1, expected);
        assert_eq!(s0, t.init().clone());
        let st = t.action_id("stack", &["b3", "b2"]).unwrap();
        assert_eq!(t.apply(&s1, st).unwrap(), s0);
        assert!(matches!(t.apply(&s0, st), Err(GroundError::NotApplicable { .. })));
    }

    #[test]
    fn empty_goal_and_identity_effects() {
        let d = parse_domain(
            "(define (domain n) (:predicates (p) (q))
               (:action noop :parameters () :precondition (p) :effect (and))
               (:action flip :parameters () :precondition (p) :effect (and (q) (not (q)))))",
        )
        .unwrap();
        let p = parse_instance("(define (problem z) (:domain n) (:objects) (:init (p)) (:goal (and)))", &d).unwrap();
        let t = ground(&d, &p).unwrap();
        assert_eq!(t.actions().len(), 2);
        let s = t.init().clone();
        assert!(t.is_goal(&s));
        assert_eq!(t.apply(&s, 0).unwrap(), s);
        // delete-then-add: q survives
        let s2 = t.apply(&s, 1).unwrap();
        assert!(s2.contains(t.atom_id("q", &[]).unwrap()));
        assert!(t.action(1).del.is_empty());
    }

    #[test]
    fn unachievable_goal_still_grounds() {
        let d = parse_domain(
            "(define (domain n) (:predicates (p) (q)) (:action a :parameters () :precondition (p) :effect (p)))",
        )
        .unwrap();
        let p = parse_instance("(define (problem z) (:domain n) (:init (p)) (:goal (q)))", &d).unwrap();
        let t = ground(&d, &p).unwrap();
        assert!(t.achievers(t.atom_id("q", &[]).unwrap()).is_empty());
        assert!(!t.is_goal(t.init()));
    }

    #[test]
    fn capacity_limit() {
        let d = parse_domain(BW4).unwrap();
        let p = parse_instance(
            "(define (problem t) (:domain blocksworld) (:objects a b c d e - block) (:init) (:goal (and)))",
            &d,
        )
        .unwrap();
        assert!(matches!(
            ground_with_limit(&d, &p, 20),
            Err(GroundError::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn goal_state_without_actions_is_dead_end() {
        let d = parse_domain(
            "(define (domain n) (:predicates (p) (q)) (:action a :parameters () :precondition (q) :effect (p)))",
        )
        .unwrap();
        let p = parse_instance("(define (problem z) (:domain n) (:init (p)) (:goal (p)))", &d).unwrap();
        let t = ground(&d, &p).unwrap();
        assert!(t.is_goal(t.init()));
        assert!(t.applicable_actions(t.init()).is_empty());
        assert!(t.is_dead_end(t.init()));
    }
}

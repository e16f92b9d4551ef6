#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

use gsp_core::grounding::{ground, ActionId, GroundTask, State};
use gsp_core::pddl::{parse_domain, parse_instance, Domain, Fact, Instance, Term};

pub const BLOCKS4: &str = "(define (domain blocksworld) (:requirements :strips :typing) (:types block)
  (:predicates (on ?x - block ?y - block) (ontable ?x - block) (clear ?x - block) (holding ?x - block))
  (:action pickup :parameters (?x - block) :precondition (and (clear ?x) (ontable ?x))
    :effect (and (holding ?x) (not (ontable ?x)) (not (clear ?x))))
  (:action putdown :parameters (?x - block) :precondition (holding ?x)
    :effect (and (ontable ?x) (clear ?x) (not (holding ?x))))
  (:action stack :parameters (?x - block ?y - block) :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (not (holding ?x)) (not (clear ?y))))
  (:action unstack :parameters (?x - block ?y - block) :precondition (and (on ?x ?y) (clear ?x))
    :effect (and (holding ?x) (clear ?y) (not (on ?x ?y)) (not (clear ?x)))))";

/// Moves along directed edges between nodes.
pub const GO: &str = "(define (domain go) (:requirements :strips :typing) (:types node)
  (:predicates (at ?n - node) (edge ?a - node ?b - node))
  (:action go :parameters (?from - node ?to - node)
    :precondition (and (at ?from) (edge ?from ?to))
    :effect (and (at ?to) (not (at ?from)))))";

pub fn task(domain: &str, problem: &str) -> GroundTask {
    let d = parse_domain(domain).unwrap();
    let p = parse_instance(problem, &d).unwrap();
    ground(&d, &p).unwrap()
}

/// Graph task over `n` nodes with the given directed edges, start and goal node.
pub fn go_task(name: &str, n: usize, edges: &[(usize, usize)], start: usize, goal: usize) -> GroundTask {
    let objs: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut init = format!("(at n{start})");
    for (a, b) in edges {
        init.push_str(&format!(" (edge n{a} n{b})"));
    }
    let p = format!(
        "(define (problem {name}) (:domain go) (:objects {} - node) (:init {init}) (:goal (at n{goal})))",
        objs.join(" ")
    );
    task(GO, &p)
}

/// Breadth-first optimal plan length from `s`, or None if no goal is reachable.
pub fn bfs_distance(t: &GroundTask, s: &State) -> Option<usize> {
    let mut seen = HashMap::new();
    let mut q = VecDeque::new();
    seen.insert(s.clone(), 0usize);
    q.push_back(s.clone());
    while let Some(u) = q.pop_front() {
        let du = seen[&u];
        if t.is_goal(&u) {
            return Some(du);
        }
        for a in t.applicable_actions(&u) {
            let v = t.apply(&u, a).unwrap();
            if !seen.contains_key(&v) {
                seen.insert(v.clone(), du + 1);
                q.push_back(v);
            }
        }
    }
    None
}

/// All states reachable from the initial state, up to `cap`.
pub fn reachable(t: &GroundTask, cap: usize) -> Option<Vec<State>> {
    let mut seen = std::collections::HashSet::new();
    let mut order = Vec::new();
    let mut q = VecDeque::new();
    seen.insert(t.init().clone());
    q.push_back(t.init().clone());
    while let Some(u) = q.pop_front() {
        order.push(u.clone());
        if order.len() > cap {
            return None;
        }
        for a in t.applicable_actions(&u) {
            let v = t.apply(&u, a).unwrap();
            if seen.insert(v.clone()) {
                q.push_back(v);
            }
        }
    }
    Some(order)
}

/// Optimal return-to-go `V*(s)` for every reachable state (`-inf` if the
/// goal is unreachable), by value iteration with unit costs.
pub fn value_iteration(t: &GroundTask, states: &[State]) -> HashMap<State, f64> {
    let mut v: HashMap<State, f64> = states.iter().map(|s| (s.clone(), f64::NEG_INFINITY)).collect();
    let succ: Vec<Vec<State>> = states
        .iter()
        .map(|s| t.applicable_actions(s).into_iter().map(|a| t.apply(s, a).unwrap()).collect())
        .collect();
    loop {
        let mut changed = false;
        for (i, s) in states.iter().enumerate() {
            let nv = if t.is_goal(s) {
                0.0
            } else {
                succ[i].iter().map(|n| -1.0 + v[n]).fold(f64::NEG_INFINITY, f64::max)
            };
            if nv != v[s] {
                v.insert(s.clone(), nv);
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

/// `Q*(s, a) = -1 + V*(a(s))` with `V*` of a goal state equal to 0.
pub fn oracle_q(t: &GroundTask, v: &HashMap<State, f64>, s: &State, a: ActionId) -> f64 {
    let n = t.apply(s, a).unwrap();
    -1.0 + v.get(&n).copied().unwrap_or(f64::NEG_INFINITY)
}

/// Successors computed directly from the lifted schemas by recursive
/// matching of preconditions against the state's facts.
pub fn lifted_successors(dom: &Domain, inst: &Instance, s: &std::collections::BTreeSet<Fact>) -> Vec<std::collections::BTreeSet<Fact>> {
    let objects: Vec<(String, String)> = dom
        .constants
        .iter()
        .chain(&inst.objects)
        .map(|o| (o.name.clone(), o.ty.clone()))
        .collect();
    let mut out = Vec::new();
    for schema in &dom.schemas {
        let mut binding: Vec<Option<String>> = vec![None; schema.params.len()];
        fn rec(
            dom: &Domain,
            objects: &[(String, String)],
            schema: &gsp_core::pddl::ActionSchema,
            s: &std::collections::BTreeSet<Fact>,
            i: usize,
            binding: &mut Vec<Option<String>>,
            out: &mut Vec<std::collections::BTreeSet<Fact>>,
        ) {
            if i == schema.params.len() {
                let inst_atom = |t: &gsp_core::pddl::AtomTemplate| Fact {
                    predicate: t.predicate.clone(),
                    args: t
                        .args
                        .iter()
                        .map(|a| match a {
                            Term::Param(k) => binding[*k].clone().unwrap(),
                            Term::Const(c) => c.clone(),
                        })
                        .collect(),
                };
                if !schema.precondition.iter().all(|p| s.contains(&inst_atom(p))) {
                    return;
                }
                let mut n = s.clone();
                for d in &schema.del_effects {
                    n.remove(&inst_atom(d));
                }
                for a in &schema.add_effects {
                    n.insert(inst_atom(a));
                }
                out.push(n);
                return;
            }
            for (name, ty) in objects {
                if !dom.is_subtype(ty, &schema.params[i].ty) {
                    continue;
                }
                if binding[..i].iter().any(|b| b.as_deref() == Some(name.as_str())) {
                    continue;
                }
                binding[i] = Some(name.clone());
                rec(dom, objects, schema, s, i + 1, binding, out);
                binding[i] = None;
            }
        }
        rec(dom, &objects, schema, s, 0, &mut binding, &mut out);
    }
    out
}

/// Facts of a ground state, for comparison against the lifted explorer.
pub fn facts_of(t: &GroundTask, s: &State) -> std::collections::BTreeSet<Fact> {
    s.atoms()
        .iter()
        .map(|&a| {
            let atom = &t.atoms()[a as usize];
            Fact {
                predicate: t.signature().predicates[atom.predicate as usize].0.clone(),
                args: atom.args.iter().map(|&o| t.objects()[o as usize].name.clone()).collect(),
            }
        })
        .collect()
}

pub fn counts<T: Ord + Clone>(xs: &[T]) -> BTreeMap<T, usize> {
    let mut m = BTreeMap::new();
    for x in xs {
        *m.entry(x.clone()).or_insert(0) += 1;
    }
    m
}

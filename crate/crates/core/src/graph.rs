//! Relational input encoding: state and goal atoms plus one action object per
//! applicable ground action.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::grounding::{ActionId, GroundTask, ObjectId, Signature, State};

/// How goal atoms enter the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalMode {
    /// Goal atoms use their own `p_goal` relation.
    #[default]
    Distinguished,
    /// Goal atoms are merged into the state atoms under `p`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationSource {
    State(u32),
    Goal(u32),
    Action(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub source: RelationSource,
    pub arity: usize,
}

/// Relation vocabulary of a domain: predicates, then goal predicates, then
/// one action relation per schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTable {
    relations: Vec<Relation>,
    num_predicates: usize,
}

impl RelationTable {
    pub fn from_signature(sig: &Signature) -> Self {
        let mut relations = Vec::new();
        for (i, (name, arity)) in sig.predicates.iter().enumerate() {
            relations.push(Relation {
                name: name.clone(),
                source: RelationSource::State(i as u32),
                arity: *arity,
            });
        }
        for (i, (name, arity)) in sig.predicates.iter().enumerate() {
            relations.push(Relation {
                name: format!("{name}_goal"),
                source: RelationSource::Goal(i as u32),
                arity: *arity,
            });
        }
        for (i, (name, arity)) in sig.schemas.iter().enumerate() {
            relations.push(Relation {
                name: name.clone(),
                source: RelationSource::Action(i as u32),
                arity: arity + 1,
            });
        }
        RelationTable {
            relations,
            num_predicates: sig.predicates.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&Relation> {
        self.relations.get(id as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter()
    }

    pub fn state_relation(&self, predicate: u32) -> u32 {
        predicate
    }

    pub fn goal_relation(&self, predicate: u32) -> u32 {
        (self.num_predicates as u32) + predicate
    }

    pub fn action_relation(&self, schema: u32) -> u32 {
        2 * (self.num_predicates as u32) + schema
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Object(ObjectId),
    Action(ActionId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphAtom {
    pub relation: u32,
    pub args: Box<[u32]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationalGraph {
    nodes: Vec<NodeKind>,
    atoms: Vec<GraphAtom>,
    num_objects: usize,
}

impl RelationalGraph {
    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn atoms(&self) -> &[GraphAtom] {
        &self.atoms
    }

    pub fn num_objects(&self) -> usize {
        self.num_objects
    }

    /// Node index of the `k`-th action object.
    pub fn action_node(&self, k: usize) -> usize {
        self.num_objects + k
    }

    pub fn num_actions(&self) -> usize {
        self.nodes.len() - self.num_objects
    }

    /// Ground-action ids of the action objects, in node order.
    pub fn actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        self.nodes[self.num_objects..].iter().map(|n| match n {
            NodeKind::Action(a) => *a,
            NodeKind::Object(_) => unreachable!("object node after action nodes"),
        })
    }

    /// One `relation(node,...)` line per atom. Objects print by name, action
    /// objects as `@` followed by the ground action.
    pub fn dump(&self, task: &GroundTask, table: &RelationTable) -> String {
        let mut out = String::new();
        let node_name = |i: u32| match self.nodes[i as usize] {
            NodeKind::Object(o) => task.objects()[o as usize].name.clone(),
            NodeKind::Action(a) => format!("@{}", task.action_name(a)),
        };
        for atom in &self.atoms {
            let args: Vec<String> = atom.args.iter().map(|&n| node_name(n)).collect();
            let name = table.get(atom.relation).map_or("?", |r| r.name.as_str());
            let _ = writeln!(out, "{}({})", name, args.join(","));
        }
        out
    }
}

/// Builds the graph for `s`; `applicable` must be the applicable actions of `s`.
pub fn encode(
    task: &GroundTask,
    table: &RelationTable,
    s: &State,
    applicable: &[ActionId],
    mode: GoalMode,
) -> RelationalGraph {
    let n = task.objects().len();
    let mut nodes: Vec<NodeKind> = (0..n as u32).map(NodeKind::Object).collect();
    nodes.extend(applicable.iter().map(|&a| NodeKind::Action(a)));

    let ground_atom = |id: u32, relation: u32| {
        let a = &task.atoms()[id as usize];
        GraphAtom {
            relation,
            args: a.args.clone().into_boxed_slice(),
        }
    };

    let mut atoms = Vec::with_capacity(s.len() + task.goal().len() + applicable.len());
    match mode {
        GoalMode::Distinguished => {
            for &p in s.atoms() {
                atoms.push(ground_atom(p, table.state_relation(task.atoms()[p as usize].predicate)));
            }
            for &p in task.goal() {
                atoms.push(ground_atom(p, table.goal_relation(task.atoms()[p as usize].predicate)));
            }
        }
        GoalMode::Literal => {
            let mut union: Vec<u32> = s.atoms().iter().chain(task.goal()).copied().collect();
            union.sort_unstable();
            union.dedup();
            for p in union {
                atoms.push(ground_atom(p, table.state_relation(task.atoms()[p as usize].predicate)));
            }
        }
    }
    for (k, &a) in applicable.iter().enumerate() {
        let act = task.action(a);
        let mut args = Vec::with_capacity(act.args.len() + 1);
        args.push((n + k) as u32);
        args.extend_from_slice(&act.args);
        atoms.push(GraphAtom {
            relation: table.action_relation(act.schema),
            args: args.into_boxed_slice(),
        });
    }

    RelationalGraph {
        nodes,
        atoms,
        num_objects: n,
    }
}

//! The STRIPS + typing subset of PDDL.
//!
//! Domains carry a type forest rooted at `object`, predicate declarations and
//! action schemas with conjunctive positive preconditions and add/delete
//! effects. Problems carry typed objects, an initial state and a conjunctive
//! positive goal. Everything outside that subset is rejected with
//! [`PddlError::Unsupported`] naming the offending construct.

mod display;
mod parse;
mod sexpr;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use parse::{parse_domain, parse_instance};

/// The implicit root of every type hierarchy.
pub const ROOT_TYPE: &str = "object";

/// 1-based line/column of a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PddlError {
    #[error("{pos}: syntax error: expected {expected}, found {found}")]
    Syntax {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("{pos}: unsupported PDDL feature {feature}")]
    Unsupported { pos: Pos, feature: String },
    #[error("{pos}: {message}")]
    Semantic { pos: Pos, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub param_types: Vec<String>,
}

impl PredicateDecl {
    pub fn arity(&self) -> usize {
        self.param_types.len()
    }
}

/// An argument inside a schema: a parameter (by index) or a domain constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Param(usize),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    /// Parameter names are stored without the leading `?`.
    pub params: Vec<TypedName>,
    pub precondition: Vec<AtomTemplate>,
    pub add_effects: Vec<AtomTemplate>,
    pub del_effects: Vec<AtomTemplate>,
}

impl ActionSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    /// Declared types other than the root, in declaration order.
    pub types: Vec<TypeDecl>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub schemas: Vec<ActionSchema>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<(usize, &PredicateDecl)> {
        self.predicates.iter().enumerate().find(|(_, p)| p.name == name)
    }

    pub fn schema(&self, name: &str) -> Option<(usize, &ActionSchema)> {
        self.schemas.iter().enumerate().find(|(_, s)| s.name == name)
    }

    pub fn has_type(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.types.iter().any(|t| t.name == name)
    }

    fn parent_of(&self, name: &str) -> Option<&str> {
        self.types
            .iter()
            .find(|t| t.name == name)
            .map(|t| t.parent.as_str())
    }

    /// True if `ty` equals `ancestor` or lies below it in the type forest.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == ROOT_TYPE {
            return self.has_type(ty);
        }
        let mut cur = ty;
        // bounded walk: parse rejects cycles, this guards hand-built domains
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.parent_of(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    pub fn constant(&self, name: &str) -> Option<&TypedName> {
        self.constants.iter().find(|c| c.name == name)
    }
}

/// A ground atom as written in a problem file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        Fact {
            predicate: predicate.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: BTreeSet<Fact>,
    pub goal: BTreeSet<Fact>,
}

impl Instance {
    pub fn object(&self, name: &str) -> Option<&TypedName> {
        self.objects.iter().find(|o| o.name == name)
    }
}

//! Canonical PDDL rendering. Re-parsing the output yields an equal value.

use std::fmt::{self, Write};

use super::{ActionSchema, AtomTemplate, Domain, Fact, Instance, Term, TypedName, ROOT_TYPE};

fn typed(out: &mut String, items: &[TypedName], var: bool) {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if var {
            out.push('?');
        }
        out.push_str(&t.name);
        if t.ty != ROOT_TYPE {
            let _ = write!(out, " - {}", t.ty);
        }
    }
}

fn template(out: &mut String, a: &AtomTemplate, params: &[TypedName]) {
    out.push('(');
    out.push_str(&a.predicate);
    for t in &a.args {
        out.push(' ');
        match t {
            Term::Param(i) => {
                out.push('?');
                out.push_str(&params[*i].name);
            }
            Term::Const(c) => out.push_str(c),
        }
    }
    out.push(')');
}

fn fact(out: &mut String, f: &Fact) {
    out.push('(');
    out.push_str(&f.predicate);
    for a in &f.args {
        out.push(' ');
        out.push_str(a);
    }
    out.push(')');
}

fn schema(out: &mut String, s: &ActionSchema) {
    let _ = write!(out, "  (:action {}\n    :parameters (", s.name);
    typed(out, &s.params, true);
    out.push_str(")\n    :precondition (and");
    for a in &s.precondition {
        out.push(' ');
        template(out, a, &s.params);
    }
    out.push_str(")\n    :effect (and");
    for a in &s.add_effects {
        out.push(' ');
        template(out, a, &s.params);
    }
    for a in &s.del_effects {
        out.push_str(" (not ");
        template(out, a, &s.params);
        out.push(')');
    }
    out.push_str("))\n");
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "(define (domain {})", self.name);
        if !self.requirements.is_empty() {
            let _ = writeln!(out, "  (:requirements {})", self.requirements.join(" "));
        }
        if !self.types.is_empty() {
            out.push_str("  (:types");
            for t in &self.types {
                let _ = write!(out, " {} - {}", t.name, t.parent);
            }
            out.push_str(")\n");
        }
        if !self.constants.is_empty() {
            out.push_str("  (:constants ");
            typed(&mut out, &self.constants, false);
            out.push_str(")\n");
        }
        out.push_str("  (:predicates");
        for p in &self.predicates {
            let _ = write!(out, " ({}", p.name);
            for (i, ty) in p.param_types.iter().enumerate() {
                let _ = write!(out, " ?a{i}");
                if ty != ROOT_TYPE {
                    let _ = write!(out, " - {ty}");
                }
            }
            out.push(')');
        }
        out.push_str(")\n");
        for s in &self.schemas {
            schema(&mut out, s);
        }
        out.push_str(")\n");
        f.write_str(&out)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "(define (problem {})", self.name);
        let _ = writeln!(out, "  (:domain {})", self.domain_name);
        out.push_str("  (:objects ");
        typed(&mut out, &self.objects, false);
        out.push_str(")\n  (:init");
        for a in &self.init {
            out.push_str("\n    ");
            fact(&mut out, a);
        }
        out.push_str(")\n  (:goal (and");
        for a in &self.goal {
            out.push_str("\n    ");
            fact(&mut out, a);
        }
        out.push_str(")))\n");
        f.write_str(&out)
    }
}

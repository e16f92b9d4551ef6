use std::collections::{BTreeSet, HashSet};

use super::sexpr::{self, SExpr};
use super::{
    ActionSchema, AtomTemplate, Domain, Fact, Instance, PddlError, Pos, PredicateDecl, Term,
    TypeDecl, TypedName, ROOT_TYPE,
};

type Result<T> = std::result::Result<T, PddlError>;

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing"];

fn syntax(at: &SExpr, expected: &str) -> PddlError {
    PddlError::Syntax {
        pos: at.pos(),
        expected: expected.to_string(),
        found: at.describe(),
    }
}

fn missing(pos: Pos, expected: &str) -> PddlError {
    PddlError::Syntax {
        pos,
        expected: expected.to_string(),
        found: "`)`".into(),
    }
}

fn unsupported(pos: Pos, feature: &str) -> PddlError {
    PddlError::Unsupported {
        pos,
        feature: feature.to_string(),
    }
}

fn semantic(pos: Pos, message: impl Into<String>) -> PddlError {
    PddlError::Semantic {
        pos,
        message: message.into(),
    }
}

/// Maps a formula head that falls outside the subset to the requirement it needs.
fn unsupported_head(head: &str) -> Option<&'static str> {
    Some(match head {
        "not" => ":negative-preconditions",
        "or" | "imply" => ":disjunctive-preconditions",
        "exists" | "forall" => ":quantified-preconditions",
        "=" => ":equality",
        "when" => ":conditional-effects",
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" | "<" | ">" | "<="
        | ">=" => ":numeric-fluents",
        "preference" => ":preferences",
        _ => return None,
    })
}

fn unsupported_section(key: &str) -> Option<&'static str> {
    Some(match key {
        ":functions" => ":numeric-fluents",
        ":derived" => ":derived-predicates",
        ":axioms" | ":axiom" => ":axioms",
        ":durative-action" => ":durative-actions",
        ":constraints" => ":constraints",
        ":metric" => ":numeric-fluents",
        ":timeless" => ":timeless",
        ":process" | ":event" => ":time",
        _ => return None,
    })
}

fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr]> {
    e.as_list().ok_or_else(|| syntax(e, what))
}

fn expect_sym<'a>(e: &'a SExpr, what: &str) -> Result<&'a str> {
    e.as_sym().ok_or_else(|| syntax(e, what))
}

fn expect_name(e: &SExpr, what: &str) -> Result<String> {
    let s = expect_sym(e, what)?;
    if s.starts_with('?') || s.starts_with(':') || s == "-" {
        return Err(syntax(e, what));
    }
    Ok(s.to_string())
}

/// Splits `(define (KIND NAME) rest...)` into its name and remaining sections.
fn split_define<'a>(top: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr])> {
    let items = expect_list(top, "`(define ...)`")?;
    let first = items
        .first()
        .ok_or_else(|| missing(top.pos(), "`define`"))?;
    if first.as_sym() != Some("define") {
        return Err(syntax(first, "`define`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| missing(top.pos(), &format!("`({kind} NAME)`")))?;
    let h = expect_list(header, &format!("`({kind} NAME)`"))?;
    match h {
        [k, name] if k.as_sym() == Some(kind) => {
            Ok((expect_name(name, &format!("{kind} name"))?, &items[2..]))
        }
        [k, ..] => Err(syntax(k, &format!("`{kind}`"))),
        [] => Err(missing(header.pos(), &format!("`{kind}`"))),
    }
}

/// Parses `a b - t c - u d` into (name, type) pairs; untyped names get `object`.
fn typed_list(items: &[SExpr], what: &str) -> Result<Vec<(String, String, Pos)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let e = &items[i];
        if e.as_sym() == Some("-") {
            let ty_expr = items
                .get(i + 1)
                .ok_or_else(|| missing(e.pos(), "type name after `-`"))?;
            if ty_expr.head() == Some("either") {
                return Err(unsupported(ty_expr.pos(), ":either-types"));
            }
            let ty = expect_name(ty_expr, "type name")?;
            if pending.is_empty() {
                return Err(syntax(e, what));
            }
            for (n, p) in pending.drain(..) {
                out.push((n, ty.clone(), p));
            }
            i += 2;
            continue;
        }
        let name = expect_sym(e, what)?;
        pending.push((name.to_string(), e.pos()));
        i += 1;
    }
    for (n, p) in pending {
        out.push((n, ROOT_TYPE.to_string(), p));
    }
    Ok(out)
}

fn check_requirements(items: &[SExpr]) -> Result<Vec<String>> {
    let mut reqs = Vec::new();
    for r in items {
        let s = expect_sym(r, "requirement keyword")?;
        if !s.starts_with(':') {
            return Err(syntax(r, "requirement keyword"));
        }
        if !SUPPORTED_REQUIREMENTS.contains(&s) {
            return Err(unsupported(r.pos(), s));
        }
        if !reqs.iter().any(|x: &String| x == s) {
            reqs.push(s.to_string());
        }
    }
    Ok(reqs)
}

/// Parses a domain definition in the supported subset.
pub fn parse_domain(text: &str) -> Result<Domain> {
    let top = sexpr::read(text)?;
    let (name, sections) = split_define(&top, "domain")?;

    let mut requirements = Vec::new();
    let mut types_sec: Option<&SExpr> = None;
    let mut consts_sec: Option<&SExpr> = None;
    let mut preds_sec: Option<&SExpr> = None;
    let mut actions: Vec<&SExpr> = Vec::new();

    for sec in sections {
        let items = expect_list(sec, "domain section")?;
        let key_expr = items.first().ok_or_else(|| syntax(sec, "section keyword"))?;
        let key = expect_sym(key_expr, "section keyword")?;
        match key {
            ":requirements" => requirements = check_requirements(&items[1..])?,
            ":types" => types_sec = Some(sec),
            ":constants" => consts_sec = Some(sec),
            ":predicates" => preds_sec = Some(sec),
            ":action" => actions.push(sec),
            k => {
                return Err(match unsupported_section(k) {
                    Some(f) => unsupported(key_expr.pos(), f),
                    None => syntax(key_expr, "domain section keyword"),
                })
            }
        }
    }

    let mut dom = Domain {
        name,
        requirements,
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        schemas: Vec::new(),
    };

    if let Some(sec) = types_sec {
        let list = typed_list(&sec.as_list().unwrap()[1..], "type name")?;
        for (n, parent, p) in &list {
            if n == ROOT_TYPE {
                if parent != ROOT_TYPE {
                    return Err(semantic(*p, "the root type `object` cannot have a parent"));
                }
                continue;
            }
            if dom.types.iter().any(|t| &t.name == n) {
                return Err(semantic(*p, format!("type `{n}` declared twice")));
            }
            dom.types.push(TypeDecl {
                name: n.clone(),
                parent: parent.clone(),
            });
        }
        for (n, parent, p) in &list {
            if !dom.has_type(parent) {
                return Err(semantic(*p, format!("undeclared type `{parent}`")));
            }
            // cycle check: walking parents from n must reach the root
            let mut cur = n.as_str();
            let mut steps = 0;
            while cur != ROOT_TYPE {
                cur = dom.parent_of(cur).unwrap_or(ROOT_TYPE);
                steps += 1;
                if steps > dom.types.len() + 1 {
                    return Err(semantic(*p, format!("type `{n}` is part of a cycle")));
                }
            }
        }
    }

    if let Some(sec) = consts_sec {
        for (n, ty, p) in typed_list(&sec.as_list().unwrap()[1..], "constant name")? {
            if !dom.has_type(&ty) {
                return Err(semantic(p, format!("undeclared type `{ty}`")));
            }
            if dom.constant(&n).is_some() {
                return Err(semantic(p, format!("constant `{n}` declared twice")));
            }
            dom.constants.push(TypedName { name: n, ty });
        }
    }

    if let Some(sec) = preds_sec {
        for pe in &sec.as_list().unwrap()[1..] {
            let items = expect_list(pe, "predicate declaration")?;
            let head = items
                .first()
                .ok_or_else(|| syntax(pe, "predicate name"))?;
            let pname = expect_name(head, "predicate name")?;
            let params = typed_list(&items[1..], "predicate parameter")?;
            let mut param_types = Vec::new();
            for (v, ty, p) in params {
                if !v.starts_with('?') {
                    return Err(PddlError::Syntax {
                        pos: p,
                        expected: "variable".into(),
                        found: format!("`{v}`"),
                    });
                }
                if !dom.has_type(&ty) {
                    return Err(semantic(p, format!("undeclared type `{ty}`")));
                }
                param_types.push(ty);
            }
            if dom.predicate(&pname).is_some() {
                return Err(semantic(head.pos(), format!("predicate `{pname}` declared twice")));
            }
            dom.predicates.push(PredicateDecl {
                name: pname,
                param_types,
            });
        }
    }

    for a in actions {
        let schema = parse_action(&dom, a)?;
        if dom.schema(&schema.name).is_some() {
            return Err(semantic(a.pos(), format!("action `{}` declared twice", schema.name)));
        }
        if dom.predicate(&schema.name).is_some() {
            return Err(semantic(
                a.pos(),
                format!("action `{}` shares its name with a predicate", schema.name),
            ));
        }
        dom.schemas.push(schema);
    }
    Ok(dom)
}

fn parse_action(dom: &Domain, sec: &SExpr) -> Result<ActionSchema> {
    let items = sec.as_list().unwrap();
    let name_expr = items.get(1).ok_or_else(|| missing(sec.pos(), "action name"))?;
    let name = expect_name(name_expr, "action name")?;
    let mut params: Vec<TypedName> = Vec::new();
    let mut pre_expr: Option<&SExpr> = None;
    let mut eff_expr: Option<&SExpr> = None;

    let mut i = 2;
    while i < items.len() {
        let key_expr = &items[i];
        let key = expect_sym(key_expr, "`:parameters`, `:precondition` or `:effect`")?;
        let val = items
            .get(i + 1)
            .ok_or_else(|| missing(key_expr.pos(), &format!("value for `{key}`")))?;
        match key {
            ":parameters" => {
                let l = expect_list(val, "parameter list")?;
                for (v, ty, p) in typed_list(l, "parameter")? {
                    let Some(stripped) = v.strip_prefix('?') else {
                        return Err(PddlError::Syntax {
                            pos: p,
                            expected: "variable".into(),
                            found: format!("`{v}`"),
                        });
                    };
                    if !dom.has_type(&ty) {
                        return Err(semantic(p, format!("undeclared type `{ty}`")));
                    }
                    if params.iter().any(|q| q.name == stripped) {
                        return Err(semantic(p, format!("parameter `{v}` declared twice")));
                    }
                    params.push(TypedName {
                        name: stripped.to_string(),
                        ty,
                    });
                }
            }
            ":precondition" => pre_expr = Some(val),
            ":effect" => eff_expr = Some(val),
            _ => return Err(syntax(key_expr, "`:parameters`, `:precondition` or `:effect`")),
        }
        i += 2;
    }

    let scope = Scope::Schema(&params);
    let mut precondition = Vec::new();
    if let Some(e) = pre_expr {
        conjunction(dom, &scope, e, &mut precondition)?;
    }
    let mut add_effects = Vec::new();
    let mut del_effects = Vec::new();
    if let Some(e) = eff_expr {
        effects(dom, &scope, e, &mut add_effects, &mut del_effects)?;
    }
    Ok(ActionSchema {
        name,
        params,
        precondition: dedup(precondition),
        add_effects: dedup(add_effects),
        del_effects: dedup(del_effects),
    })
}

fn dedup<T: Eq + std::hash::Hash + Clone>(v: Vec<T>) -> Vec<T> {
    let mut seen = HashSet::new();
    v.into_iter().filter(|x| seen.insert(x.clone())).collect()
}

enum Scope<'a> {
    Schema(&'a [TypedName]),
    Problem(&'a [TypedName]),
}

fn conjunction(dom: &Domain, scope: &Scope, e: &SExpr, out: &mut Vec<AtomTemplate>) -> Result<()> {
    let items = expect_list(e, "formula")?;
    let Some(head) = items.first() else {
        return Ok(());
    };
    let h = expect_sym(head, "formula head")?;
    if h == "and" {
        for c in &items[1..] {
            conjunction(dom, scope, c, out)?;
        }
        return Ok(());
    }
    if let Some(f) = unsupported_head(h) {
        return Err(unsupported(e.pos(), f));
    }
    out.push(atom(dom, scope, e)?);
    Ok(())
}

fn effects(
    dom: &Domain,
    scope: &Scope,
    e: &SExpr,
    add: &mut Vec<AtomTemplate>,
    del: &mut Vec<AtomTemplate>,
) -> Result<()> {
    let items = expect_list(e, "effect")?;
    let Some(head) = items.first() else {
        return Ok(());
    };
    let h = expect_sym(head, "effect head")?;
    match h {
        "and" => {
            for c in &items[1..] {
                effects(dom, scope, c, add, del)?;
            }
            Ok(())
        }
        "not" => {
            let [_, inner] = items else {
                return Err(syntax(e, "`(not ATOM)`"));
            };
            if let Some(ih) = inner.head() {
                if let Some(f) = unsupported_head(ih) {
                    return Err(unsupported(inner.pos(), f));
                }
            }
            del.push(atom(dom, scope, inner)?);
            Ok(())
        }
        "forall" => Err(unsupported(e.pos(), ":conditional-effects")),
        h => {
            if let Some(f) = unsupported_head(h) {
                return Err(unsupported(e.pos(), f));
            }
            add.push(atom(dom, scope, e)?);
            Ok(())
        }
    }
}

fn atom(dom: &Domain, scope: &Scope, e: &SExpr) -> Result<AtomTemplate> {
    let items = expect_list(e, "atom")?;
    let head = items.first().ok_or_else(|| syntax(e, "atom"))?;
    let pname = expect_name(head, "predicate name")?;
    let (_, decl) = dom
        .predicate(&pname)
        .ok_or_else(|| semantic(head.pos(), format!("undeclared predicate `{pname}`")))?;
    let args = &items[1..];
    if args.len() != decl.arity() {
        return Err(semantic(
            e.pos(),
            format!(
                "predicate `{pname}` expects {} arguments, got {}",
                decl.arity(),
                args.len()
            ),
        ));
    }
    let mut terms = Vec::with_capacity(args.len());
    for (a, want) in args.iter().zip(&decl.param_types) {
        let s = expect_sym(a, "argument")?;
        let (term, ty) = if let Some(var) = s.strip_prefix('?') {
            let Scope::Schema(params) = scope else {
                return Err(semantic(a.pos(), format!("variable `{s}` in a ground formula")));
            };
            let idx = params
                .iter()
                .position(|p| p.name == var)
                .ok_or_else(|| semantic(a.pos(), format!("undeclared variable `{s}`")))?;
            (Term::Param(idx), params[idx].ty.clone())
        } else {
            let obj = match scope {
                Scope::Problem(objs) => objs.iter().find(|o| o.name == s),
                Scope::Schema(_) => None,
            }
            .or_else(|| dom.constant(s))
            .ok_or_else(|| semantic(a.pos(), format!("unknown object `{s}`")))?;
            (Term::Const(s.to_string()), obj.ty.clone())
        };
        if !dom.is_subtype(&ty, want) {
            return Err(semantic(
                a.pos(),
                format!("argument `{s}` of type `{ty}` does not fit parameter type `{want}` of `{pname}`"),
            ));
        }
        terms.push(term);
    }
    Ok(AtomTemplate {
        predicate: pname,
        args: terms,
    })
}

fn to_fact(t: AtomTemplate) -> Fact {
    Fact {
        predicate: t.predicate,
        args: t
            .args
            .into_iter()
            .map(|a| match a {
                Term::Const(c) => c,
                Term::Param(_) => unreachable!("problem scope has no parameters"),
            })
            .collect(),
    }
}

/// Parses a problem definition against `dom`, checking every atom.
pub fn parse_instance(text: &str, dom: &Domain) -> Result<Instance> {
    let top = sexpr::read(text)?;
    let (name, sections) = split_define(&top, "problem")?;

    let mut domain_name: Option<String> = None;
    let mut objects: Vec<TypedName> = Vec::new();
    let mut init_sec: Option<&SExpr> = None;
    let mut goal_sec: Option<&SExpr> = None;

    for sec in sections {
        let items = expect_list(sec, "problem section")?;
        let key_expr = items.first().ok_or_else(|| syntax(sec, "section keyword"))?;
        let key = expect_sym(key_expr, "section keyword")?;
        match key {
            ":domain" => {
                let [_, n] = items else {
                    return Err(syntax(sec, "`(:domain NAME)`"));
                };
                let n = expect_name(n, "domain name")?;
                if n != dom.name {
                    return Err(semantic(
                        sec.pos(),
                        format!("problem refers to domain `{n}`, loaded domain is `{}`", dom.name),
                    ));
                }
                domain_name = Some(n);
            }
            ":requirements" => {
                check_requirements(&items[1..])?;
            }
            ":objects" => {
                for (n, ty, p) in typed_list(&items[1..], "object name")? {
                    if n.starts_with('?') {
                        return Err(PddlError::Syntax {
                            pos: p,
                            expected: "object name".into(),
                            found: format!("`{n}`"),
                        });
                    }
                    if !dom.has_type(&ty) {
                        return Err(semantic(p, format!("undeclared type `{ty}`")));
                    }
                    if objects.iter().any(|o| o.name == n) || dom.constant(&n).is_some() {
                        return Err(semantic(p, format!("object `{n}` declared twice")));
                    }
                    objects.push(TypedName { name: n, ty });
                }
            }
            ":init" => init_sec = Some(sec),
            ":goal" => goal_sec = Some(sec),
            k => {
                return Err(match unsupported_section(k) {
                    Some(f) => unsupported(key_expr.pos(), f),
                    None => syntax(key_expr, "problem section keyword"),
                })
            }
        }
    }

    let domain_name = domain_name.ok_or_else(|| missing(top.pos(), "`(:domain NAME)`"))?;
    let scope = Scope::Problem(&objects);

    let mut init = BTreeSet::new();
    if let Some(sec) = init_sec {
        for a in &sec.as_list().unwrap()[1..] {
            if let Some(h) = a.head() {
                if let Some(f) = unsupported_head(h) {
                    return Err(unsupported(a.pos(), f));
                }
            }
            init.insert(to_fact(atom(dom, &scope, a)?));
        }
    }

    let mut goal = BTreeSet::new();
    if let Some(sec) = goal_sec {
        let items = sec.as_list().unwrap();
        if items.len() != 2 {
            return Err(syntax(sec, "`(:goal FORMULA)`"));
        }
        let mut atoms = Vec::new();
        conjunction(dom, &scope, &items[1], &mut atoms)?;
        goal.extend(atoms.into_iter().map(to_fact));
    }

    Ok(Instance {
        name,
        domain_name,
        objects,
        init,
        goal,
    })
}

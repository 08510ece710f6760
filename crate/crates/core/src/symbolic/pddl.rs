use std::collections::{BTreeMap, BTreeSet};

use super::sexpr::{self, Pos, Sexpr};
use super::*;

const SUPPORTED_REQUIREMENTS: [&str; 3] = [":strips", ":typing", ":negative-preconditions"];

fn perr(pos: Pos, message: impl Into<String>) -> SymbolicError {
    SymbolicError::Parse { pos, message: message.into() }
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], SymbolicError> {
    e.as_list().ok_or_else(|| perr(e.pos(), format!("expected {what}")))
}

fn expect_atom<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, SymbolicError> {
    e.as_atom().ok_or_else(|| perr(e.pos(), format!("expected {what}")))
}

/// Parses `a b - t c - u d` into [(a,t),(b,t),(c,u),(d,object)].
fn typed_list(items: &[Sexpr]) -> Result<Vec<(String, String, Pos)>, SymbolicError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let name = expect_atom(&items[i], "name")?;
        if name == "-" {
            let ty = items.get(i + 1).ok_or_else(|| perr(items[i].pos(), "missing type after '-'"))?;
            let ty = expect_atom(ty, "type name")?;
            if pending.is_empty() {
                return Err(perr(items[i].pos(), "type without names"));
            }
            out.extend(pending.drain(..).map(|(n, p)| (n, ty.to_string(), p)));
            i += 2;
        } else {
            pending.push((name.to_string(), items[i].pos()));
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|(n, p)| (n, "object".to_string(), p)));
    Ok(out)
}

fn header<'a>(root: &'a Sexpr, kind: &str) -> Result<(&'a [Sexpr], String), SymbolicError> {
    let items = expect_list(root, "(define ...)")?;
    if !items.first().is_some_and(|e| e.is_keyword("define")) {
        return Err(perr(root.pos(), "expected (define ...)"));
    }
    let head = items.get(1).ok_or_else(|| perr(root.pos(), format!("missing ({kind} <name>)")))?;
    let h = expect_list(head, &format!("({kind} <name>)"))?;
    if h.len() != 2 || !h[0].is_keyword(kind) {
        return Err(perr(head.pos(), format!("expected ({kind} <name>)")));
    }
    Ok((&items[2..], expect_atom(&h[1], "name")?.to_string()))
}

pub fn parse_domain(text: &str) -> Result<Domain, SymbolicError> {
    let root = sexpr::parse(text)?;
    let (sections, name) = header(&root, "domain")?;
    let mut types: BTreeMap<String, String> = BTreeMap::new();
    let mut predicates: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut raw_actions = Vec::new();
    for sec in sections {
        let items = expect_list(sec, "domain section")?;
        let key = items.first().and_then(Sexpr::as_atom).unwrap_or("").to_ascii_lowercase();
        match key.as_str() {
            ":requirements" => {
                for r in &items[1..] {
                    let r = expect_atom(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.iter().any(|s| s.eq_ignore_ascii_case(r)) {
                        return Err(perr(sec.pos(), format!("unsupported requirement {r}")));
                    }
                }
            }
            ":types" => {
                for (t, parent, _) in typed_list(&items[1..])? {
                    types.insert(t, parent);
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let pl = expect_list(p, "predicate declaration")?;
                    let pname = expect_atom(pl.first().ok_or_else(|| perr(p.pos(), "empty predicate"))?, "name")?;
                    let args = typed_list(&pl[1..])?.into_iter().map(|(_, t, _)| t).collect();
                    predicates.insert(pname.to_string(), args);
                }
            }
            ":action" => raw_actions.push(sec),
            _ => return Err(perr(sec.pos(), format!("unknown domain section {key}"))),
        }
    }
    let mut domain = Domain { name, types, predicates, actions: Vec::new() };
    for t in domain.types.values().chain(domain.predicates.values().flatten()) {
        if t != "object" && !domain.types.contains_key(t) {
            return Err(SymbolicError::UnknownType { name: t.clone(), pos: root.pos() });
        }
    }
    for a in raw_actions {
        let action = parse_action(&domain, a)?;
        domain.actions.push(action);
    }
    Ok(domain)
}

fn parse_action(domain: &Domain, sec: &Sexpr) -> Result<ActionSchema, SymbolicError> {
    let items = expect_list(sec, "action")?;
    let name = expect_atom(items.get(1).ok_or_else(|| perr(sec.pos(), "action needs a name"))?, "action name")?;
    let mut params = Vec::new();
    let mut controller = None;
    let mut success = None;
    let mut pre = Vec::new();
    let mut add = Vec::new();
    let mut del = Vec::new();
    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(&items[i], "action keyword")?.to_ascii_lowercase();
        let val = items.get(i + 1).ok_or_else(|| perr(items[i].pos(), format!("missing value for {key}")))?;
        match key.as_str() {
            ":parameters" => {
                for (v, t, p) in typed_list(expect_list(val, "parameter list")?)? {
                    if !v.starts_with('?') {
                        return Err(perr(p, format!("parameter {v} must start with '?'")));
                    }
                    if t != "object" && !domain.types.contains_key(&t) {
                        return Err(SymbolicError::UnknownType { name: t, pos: p });
                    }
                    params.push((v, t));
                }
            }
            ":controller" => {
                let l = expect_list(val, "(<controller> ?param)")?;
                if l.len() != 2 {
                    return Err(perr(val.pos(), "expected (<controller> ?param)"));
                }
                let id = expect_atom(&l[0], "controller id")?;
                let id = ControllerId::parse(id).ok_or_else(|| perr(l[0].pos(), format!("unknown controller {id}")))?;
                let var = expect_atom(&l[1], "controller parameter")?;
                controller = Some((id, var.to_string(), l[1].pos()));
            }
            ":cost" => {
                let c = expect_atom(val, "cost id")?;
                if c != "time" {
                    return Err(perr(val.pos(), format!("unknown cost {c}")));
                }
            }
            ":success" => {
                let s = expect_atom(val, "success id")?;
                success = Some(SuccessId::parse(s).ok_or_else(|| perr(val.pos(), format!("unknown success {s}")))?);
            }
            ":precondition" => {
                for lit in conjunction(val)? {
                    pre.push(literal(domain, &params, lit)?);
                }
            }
            ":effect" => {
                for lit in conjunction(val)? {
                    let l = literal(domain, &params, lit)?;
                    if l.positive {
                        add.push(l);
                    } else {
                        del.push(Literal { positive: true, ..l });
                    }
                }
            }
            _ => return Err(perr(items[i].pos(), format!("unknown action key {key}"))),
        }
        i += 2;
    }
    let (controller, var, pos) =
        controller.ok_or_else(|| SymbolicError::InvalidAction { action: name.into(), message: "missing :controller".into() })?;
    let controller_param = params
        .iter()
        .position(|(v, _)| *v == var)
        .ok_or(SymbolicError::UnknownTerm { name: var.clone(), pos })?;
    for a in &add {
        if del.iter().any(|d| d.predicate == a.predicate && d.args == a.args) {
            return Err(SymbolicError::InvalidAction {
                action: name.into(),
                message: format!("effect both adds and deletes {}", a.predicate),
            });
        }
    }
    Ok(ActionSchema {
        name: name.to_string(),
        params,
        controller,
        controller_param,
        cost: CostId::Time,
        success: success.unwrap_or(controller.default_success()),
        pre,
        add,
        del,
    })
}

/// Flattens `(and l1 l2 ...)` or a single literal.
fn conjunction(e: &Sexpr) -> Result<Vec<&Sexpr>, SymbolicError> {
    let items = expect_list(e, "formula")?;
    if items.first().is_some_and(|h| h.is_keyword("and")) {
        Ok(items[1..].iter().collect())
    } else if items.is_empty() {
        Ok(Vec::new())
    } else {
        Ok(vec![e])
    }
}

fn literal(domain: &Domain, params: &[(String, String)], e: &Sexpr) -> Result<Literal, SymbolicError> {
    let items = expect_list(e, "literal")?;
    if items.first().is_some_and(|h| h.is_keyword("not")) {
        if items.len() != 2 {
            return Err(perr(e.pos(), "(not ...) takes one literal"));
        }
        let inner = literal(domain, params, &items[1])?;
        return Ok(Literal { positive: !inner.positive, ..inner });
    }
    let pname = expect_atom(items.first().ok_or_else(|| perr(e.pos(), "empty literal"))?, "predicate")?;
    let sig = domain
        .predicates
        .get(pname)
        .ok_or_else(|| SymbolicError::UnknownPredicate { name: pname.to_string(), pos: e.pos() })?;
    if sig.len() != items.len() - 1 {
        return Err(SymbolicError::Arity {
            name: pname.to_string(),
            expected: sig.len(),
            found: items.len() - 1,
            pos: e.pos(),
        });
    }
    let mut args = Vec::new();
    for a in &items[1..] {
        let s = expect_atom(a, "term")?;
        if s.starts_with('?') {
            if !params.iter().any(|(v, _)| v == s) {
                return Err(SymbolicError::UnknownTerm { name: s.to_string(), pos: a.pos() });
            }
            args.push(Term::Var(s.to_string()));
        } else {
            args.push(Term::Const(s.to_string()));
        }
    }
    Ok(Literal { positive: true, predicate: pname.to_string(), args })
}

fn ground_literal(
    domain: &Domain,
    objects: &BTreeSet<&str>,
    e: &Sexpr,
) -> Result<GroundLiteral, SymbolicError> {
    let l = literal(domain, &[], e)?;
    let mut args = Vec::new();
    for (t, a) in l.args.into_iter().zip(&expect_list(e, "literal")?[1..]) {
        match t {
            Term::Const(c) if objects.contains(c.as_str()) => args.push(c),
            Term::Const(c) | Term::Var(c) => return Err(SymbolicError::UnknownTerm { name: c, pos: a.pos() }),
        }
    }
    Ok(GroundLiteral { positive: l.positive, atom: Atom { predicate: l.predicate, args } })
}

pub fn parse_problem(domain: &Domain, text: &str) -> Result<Problem, SymbolicError> {
    let root = sexpr::parse(text)?;
    let (sections, name) = header(&root, "problem")?;
    let mut dom_name = String::new();
    let mut objects = Vec::new();
    let mut init_raw = Vec::new();
    let mut goal_raw = None;
    let mut params_raw = Vec::new();
    for sec in sections {
        let items = expect_list(sec, "problem section")?;
        let key = items.first().and_then(Sexpr::as_atom).unwrap_or("").to_ascii_lowercase();
        match key.as_str() {
            ":domain" => dom_name = expect_atom(items.get(1).ok_or_else(|| perr(sec.pos(), "missing domain"))?, "domain")?.into(),
            ":objects" => {
                for (o, t, p) in typed_list(&items[1..])? {
                    if t != "object" && !domain.types.contains_key(&t) {
                        return Err(SymbolicError::UnknownType { name: t, pos: p });
                    }
                    objects.push((o, t));
                }
            }
            ":init" => init_raw.extend(items[1..].iter()),
            ":goal" => goal_raw = items.get(1),
            ":params" => params_raw.extend(items[1..].iter()),
            _ => return Err(perr(sec.pos(), format!("unknown problem section {key}"))),
        }
    }
    if dom_name != domain.name {
        return Err(SymbolicError::InvalidProblem(format!(
            "problem is for domain {dom_name:?}, not {:?}",
            domain.name
        )));
    }
    let names: BTreeSet<&str> = objects.iter().map(|(o, _)| o.as_str()).collect();
    if names.len() != objects.len() {
        return Err(SymbolicError::InvalidProblem("duplicate object names".into()));
    }
    let mut init = Vec::new();
    for e in init_raw {
        let g = ground_literal(domain, &names, e)?;
        if !g.positive {
            return Err(perr(e.pos(), "negative literal in :init"));
        }
        init.push(g.atom);
    }
    init.sort();
    init.dedup();
    let mut goal = Vec::new();
    if let Some(g) = goal_raw {
        for lit in conjunction(g)? {
            // negative goal literals use closed-world semantics
            goal.push(ground_literal(domain, &names, lit)?);
        }
    }
    let mut params = BTreeMap::new();
    for p in params_raw {
        let l = expect_list(p, "(<object> <spec-id>)")?;
        if l.len() != 2 {
            return Err(perr(p.pos(), "expected (<object> <spec-id>)"));
        }
        let obj = expect_atom(&l[0], "object")?;
        if !names.contains(obj) {
            return Err(SymbolicError::UnknownTerm { name: obj.into(), pos: l[0].pos() });
        }
        params.insert(obj.to_string(), expect_atom(&l[1], "spec id")?.to_string());
    }
    Ok(Problem { name, domain: dom_name, objects, init, goal, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOMAIN: &str = r#"
    (define (domain tiny)
      (:requirements :strips :typing :negative-preconditions)
      (:types location)
      (:predicates (robot_at ?l - location))
      (:action moveTo
        :parameters (?to - location)
        :controller (AStarTrack ?to)
        :precondition (not (robot_at ?to))
        :effect (robot_at ?to)))"#;

    #[test]
    fn parses_tiny_domain() {
        let d = parse_domain(DOMAIN).unwrap();
        assert_eq!(d.actions.len(), 1);
        let a = &d.actions[0];
        assert_eq!(a.controller, ControllerId::AStarTrack);
        assert_eq!(a.success, SuccessId::BaseIn);
        assert!(!a.pre[0].positive);
    }

    #[test]
    fn undeclared_predicate_named_in_error() {
        let text = DOMAIN.replace(":effect (robot_at ?to)", ":effect (flying ?to)");
        match parse_domain(&text) {
            Err(SymbolicError::UnknownPredicate { name, .. }) => assert_eq!(name, "flying"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch() {
        let text = DOMAIN.replace(":effect (robot_at ?to)", ":effect (robot_at ?to ?to)");
        assert!(matches!(parse_domain(&text), Err(SymbolicError::Arity { expected: 1, found: 2, .. })));
    }

    #[test]
    fn contradictory_effect_rejected() {
        let text = DOMAIN.replace(":effect (robot_at ?to)", ":effect (and (robot_at ?to) (not (robot_at ?to)))");
        assert!(matches!(parse_domain(&text), Err(SymbolicError::InvalidAction { .. })));
    }

    #[test]
    fn unsupported_requirement_rejected() {
        let text = DOMAIN.replace(":negative-preconditions", ":conditional-effects");
        assert!(parse_domain(&text).is_err());
    }

    #[test]
    fn empty_goal_and_params_block() {
        let d = parse_domain(DOMAIN).unwrap();
        let p = parse_problem(
            &d,
            "(define (problem p) (:domain tiny) (:objects A B - location)
               (:init (robot_at A)) (:goal (and)) (:params (B ringB)))",
        )
        .unwrap();
        assert!(p.goal.is_empty());
        assert_eq!(p.params.get("B").map(String::as_str), Some("ringB"));
    }

    #[test]
    fn unknown_object_in_init() {
        let d = parse_domain(DOMAIN).unwrap();
        let err = parse_problem(&d, "(define (problem p) (:domain tiny) (:objects A - location) (:init (robot_at Z)) (:goal (and)))")
            .unwrap_err();
        assert!(matches!(err, SymbolicError::UnknownTerm { ref name, .. } if name == "Z"));
    }
}

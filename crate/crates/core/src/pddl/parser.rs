use std::collections::HashSet;

use super::sexpr::{read_one, Sexpr};
use super::*;

fn kw_eq(s: &str, kw: &str) -> bool {
    s.eq_ignore_ascii_case(kw)
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], ParseError> {
    e.as_list().ok_or_else(|| ParseError::syntax(e.pos(), format!("expected a list for {what}")))
}

fn expect_atom<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, ParseError> {
    e.as_atom().ok_or_else(|| ParseError::syntax(e.pos(), format!("expected a name for {what}")))
}

/// Parses `(define (<kind> NAME) sections...)`, returning the name and the
/// section expressions.
fn parse_define<'a>(root: &'a Sexpr, kind: &str) -> Result<(String, &'a [Sexpr]), ParseError> {
    let items = expect_list(root, "define")?;
    match items.first().and_then(Sexpr::as_atom) {
        Some(h) if kw_eq(h, "define") => {}
        _ => return Err(ParseError::syntax(root.pos(), "expected (define ...)")),
    }
    let header = items
        .get(1)
        .ok_or_else(|| ParseError::syntax(root.pos(), format!("missing ({kind} NAME)")))?;
    let hl = expect_list(header, kind)?;
    match (hl.first().and_then(Sexpr::as_atom), hl.get(1).and_then(Sexpr::as_atom), hl.len()) {
        (Some(h), Some(name), 2) if kw_eq(h, kind) => Ok((name.to_string(), &items[2..])),
        _ => Err(ParseError::syntax(header.pos(), format!("expected ({kind} NAME)"))),
    }
}

/// Parses `a b - t c - u d` into typed names. Untyped trailing names get
/// `object`. A `-` is only legal when typing is enabled, except `- object`.
fn parse_typed_list(items: &[Sexpr], typing: bool, strip_var: bool) -> Result<Vec<TypedName>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let e = &items[i];
        let tok = match e {
            Sexpr::Atom(s, _) => s.as_str(),
            Sexpr::List(..) => {
                return Err(ParseError::UnsupportedFeature("either-types and nested type expressions".into()))
            }
        };
        if tok == "-" {
            let ty_expr = items
                .get(i + 1)
                .ok_or_else(|| ParseError::syntax(e.pos(), "missing type after '-'"))?;
            let ty = match ty_expr {
                Sexpr::Atom(s, _) => s.clone(),
                Sexpr::List(..) => return Err(ParseError::UnsupportedFeature("either-types".into())),
            };
            if !typing && ty != OBJECT_TYPE {
                return Err(ParseError::UnsupportedFeature(format!("type `{ty}` used without :typing")));
            }
            if pending.is_empty() {
                return Err(ParseError::syntax(e.pos(), "type annotation without names"));
            }
            for name in pending.drain(..) {
                out.push(TypedName { name, ty: ty.clone() });
            }
            i += 2;
            continue;
        }
        let name = if strip_var {
            tok.strip_prefix('?')
                .ok_or_else(|| ParseError::syntax(e.pos(), format!("expected variable, found `{tok}`")))?
                .to_string()
        } else {
            tok.to_string()
        };
        pending.push(name);
        i += 1;
    }
    out.extend(pending.into_iter().map(|name| TypedName { name, ty: OBJECT_TYPE.to_string() }));
    Ok(out)
}

fn check_arity(domain_preds: &[PredicateSchema], name: &str, found: usize) -> Result<(), ParseError> {
    let p = domain_preds
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| ParseError::UnknownPredicate(name.to_string()))?;
    if p.arity() != found {
        return Err(ParseError::ArityMismatch { predicate: name.to_string(), expected: p.arity(), found });
    }
    Ok(())
}

struct ActionCtx<'a> {
    action: &'a str,
    params: &'a [TypedName],
    constants: &'a [TypedName],
    predicates: &'a [PredicateSchema],
}

impl ActionCtx<'_> {
    fn term(&self, e: &Sexpr) -> Result<Term, ParseError> {
        let tok = expect_atom(e, "term")?;
        if let Some(v) = tok.strip_prefix('?') {
            if !self.params.iter().any(|p| p.name == v) {
                return Err(ParseError::UnknownVariable { action: self.action.to_string(), variable: tok.to_string() });
            }
            Ok(Term::Var(v.to_string()))
        } else if self.constants.iter().any(|c| c.name == tok) {
            Ok(Term::Const(tok.to_string()))
        } else {
            Err(ParseError::UnknownObject(tok.to_string()))
        }
    }

    fn atom(&self, e: &Sexpr) -> Result<Atom, ParseError> {
        let items = expect_list(e, "atom")?;
        let pred = items
            .first()
            .ok_or_else(|| ParseError::syntax(e.pos(), "empty atom"))
            .and_then(|h| expect_atom(h, "predicate"))?;
        if pred == "=" {
            return Err(ParseError::UnsupportedFeature("equality (:equality)".into()));
        }
        let args = items[1..].iter().map(|t| self.term(t)).collect::<Result<Vec<_>, _>>()?;
        check_arity(self.predicates, pred, args.len())?;
        Ok(Atom { predicate: pred.to_string(), args })
    }

    fn precondition(&self, e: &Sexpr, out: &mut Vec<Literal>) -> Result<(), ParseError> {
        let items = expect_list(e, "precondition")?;
        let Some(head) = items.first() else { return Ok(()) };
        let head = expect_atom(head, "precondition head")?;
        if kw_eq(head, "and") {
            for sub in &items[1..] {
                self.precondition(sub, out)?;
            }
            Ok(())
        } else if kw_eq(head, "not") {
            if items.len() != 2 {
                return Err(ParseError::syntax(e.pos(), "(not ...) takes exactly one atom"));
            }
            out.push(Literal { atom: self.atom(&items[1])?, positive: false });
            Ok(())
        } else if ["or", "imply", "exists", "forall", "when"].iter().any(|k| kw_eq(head, k)) {
            Err(ParseError::UnsupportedFeature(format!("`{head}` in preconditions")))
        } else {
            out.push(Literal { atom: self.atom(e)?, positive: true });
            Ok(())
        }
    }

    fn effect(&self, e: &Sexpr, eff: &mut Effects) -> Result<(), ParseError> {
        let items = expect_list(e, "effect")?;
        let Some(head) = items.first() else { return Ok(()) };
        let head = expect_atom(head, "effect head")?;
        if kw_eq(head, "and") {
            for sub in &items[1..] {
                self.effect(sub, eff)?;
            }
            Ok(())
        } else if kw_eq(head, "not") {
            if items.len() != 2 {
                return Err(ParseError::syntax(e.pos(), "(not ...) takes exactly one atom"));
            }
            eff.del.push(self.atom(&items[1])?);
            Ok(())
        } else if kw_eq(head, "increase") {
            let ok_target = items.get(1).and_then(Sexpr::head).is_some_and(|h| kw_eq(h, "total-cost"))
                && items.get(1).and_then(Sexpr::as_list).is_some_and(|l| l.len() == 1);
            if items.len() != 3 || !ok_target {
                return Err(ParseError::UnsupportedFeature("numeric effects other than (increase (total-cost) N)".into()));
            }
            let amount = match &items[2] {
                Sexpr::Atom(s, _) => s.as_str(),
                Sexpr::List(..) => {
                    return Err(ParseError::UnsupportedFeature("function-valued action costs".into()))
                }
            };
            eff.cost = Some(eff.cost.unwrap_or(0) + parse_cost(amount)?);
            Ok(())
        } else if ["when", "forall"].iter().any(|k| kw_eq(head, k)) {
            Err(ParseError::UnsupportedFeature(format!("`{head}` effects")))
        } else if ["decrease", "assign", "scale-up", "scale-down"].iter().any(|k| kw_eq(head, k)) {
            Err(ParseError::UnsupportedFeature(format!("numeric effect `{head}`")))
        } else {
            eff.add.push(self.atom(e)?);
            Ok(())
        }
    }
}

fn parse_cost(s: &str) -> Result<u64, ParseError> {
    if s.starts_with('-') {
        return Err(ParseError::InvalidCost(format!("negative cost `{s}`")));
    }
    if s.contains('.') || s.contains('/') || s.contains('e') || s.contains('E') {
        return Err(ParseError::InvalidCost(format!("non-integer cost `{s}`")));
    }
    s.parse::<u64>().map_err(|_| ParseError::InvalidCost(format!("`{s}` is not a non-negative integer")))
}

#[derive(Default)]
struct Effects {
    add: Vec<Atom>,
    del: Vec<Atom>,
    cost: Option<u64>,
}

fn dedup_keep_order<T: Clone + Eq + std::hash::Hash>(items: &mut Vec<T>) {
    let mut seen = HashSet::new();
    items.retain(|x| seen.insert(x.clone()));
}

/// Parses a domain file in the supported PDDL subset.
pub fn parse_domain(text: &str) -> Result<DomainModel, ParseError> {
    let root = read_one(text)?;
    let (name, sections) = parse_define(&root, "domain")?;

    let mut requirements = Vec::new();
    let mut types_expr = None;
    let mut constants_expr = None;
    let mut predicates_expr = None;
    let mut action_exprs = Vec::new();

    for sec in sections {
        let items = expect_list(sec, "domain section")?;
        let head = items
            .first()
            .and_then(Sexpr::as_atom)
            .ok_or_else(|| ParseError::syntax(sec.pos(), "expected a section keyword"))?
            .to_ascii_lowercase();
        match head.as_str() {
            ":requirements" => {
                for r in &items[1..] {
                    let kw = expect_atom(r, "requirement")?;
                    let req = Requirement::from_keyword(kw)
                        .ok_or_else(|| ParseError::UnsupportedFeature(format!("requirement {kw}")))?;
                    if !requirements.contains(&req) {
                        requirements.push(req);
                    }
                }
            }
            ":types" => types_expr = Some(&items[1..]),
            ":constants" => constants_expr = Some(&items[1..]),
            ":predicates" => predicates_expr = Some(&items[1..]),
            ":functions" => {
                let fs = &items[1..];
                let ok = match fs {
                    [] => true,
                    [f] => f.head().is_some_and(|h| kw_eq(h, "total-cost")),
                    [f, dash, ty] => {
                        f.head().is_some_and(|h| kw_eq(h, "total-cost"))
                            && dash.as_atom() == Some("-")
                            && ty.as_atom().is_some_and(|t| kw_eq(t, "number"))
                    }
                    _ => false,
                };
                if !ok {
                    return Err(ParseError::UnsupportedFeature("numeric fluents other than total-cost".into()));
                }
            }
            ":action" => action_exprs.push(sec),
            other => return Err(ParseError::UnsupportedFeature(format!("domain section {other}"))),
        }
    }

    let typing = requirements.contains(&Requirement::Typing);
    let types: Vec<TypeDecl> = match types_expr {
        None => Vec::new(),
        Some(_) if !typing => return Err(ParseError::UnsupportedFeature(":types without :typing".into())),
        Some(items) => parse_typed_list(items, true, false)?
            .into_iter()
            .map(|t| TypeDecl { name: t.name, parent: t.ty })
            .collect(),
    };
    let mut seen = HashSet::new();
    for t in &types {
        if t.name == OBJECT_TYPE {
            continue;
        }
        if !seen.insert(t.name.clone()) {
            return Err(ParseError::Duplicate(t.name.clone()));
        }
    }
    let types: Vec<TypeDecl> = types.into_iter().filter(|t| t.name != OBJECT_TYPE).collect();

    let mut domain = DomainModel {
        name,
        requirements,
        types,
        constants: Vec::new(),
        predicates: Vec::new(),
        action_schemas: Vec::new(),
    };
    for t in &domain.types {
        if !domain.has_type(&t.parent) {
            return Err(ParseError::UnknownType(t.parent.clone()));
        }
        if !domain.is_subtype(&t.name, OBJECT_TYPE) {
            return Err(ParseError::UnsupportedFeature(format!("cyclic type hierarchy at `{}`", t.name)));
        }
    }

    if let Some(items) = constants_expr {
        domain.constants = parse_typed_list(items, typing, false)?;
        let mut seen = HashSet::new();
        for c in &domain.constants {
            if !domain.has_type(&c.ty) {
                return Err(ParseError::UnknownType(c.ty.clone()));
            }
            if !seen.insert(c.name.clone()) {
                return Err(ParseError::Duplicate(c.name.clone()));
            }
        }
    }

    for p in predicates_expr.unwrap_or(&[]) {
        let items = expect_list(p, "predicate declaration")?;
        let pname = items
            .first()
            .ok_or_else(|| ParseError::syntax(p.pos(), "empty predicate declaration"))
            .and_then(|h| expect_atom(h, "predicate name"))?;
        let params = parse_typed_list(&items[1..], typing, true)?;
        for prm in &params {
            if !domain.has_type(&prm.ty) {
                return Err(ParseError::UnknownType(prm.ty.clone()));
            }
        }
        if domain.predicate(pname).is_some() {
            return Err(ParseError::Duplicate(pname.to_string()));
        }
        domain.predicates.push(PredicateSchema { name: pname.to_string(), params });
    }

    for a in action_exprs {
        let schema = parse_action(a, &domain)?;
        if domain.action_schemas.iter().any(|s| s.name == schema.name) {
            return Err(ParseError::Duplicate(schema.name));
        }
        domain.action_schemas.push(schema);
    }
    Ok(domain)
}

fn parse_action(e: &Sexpr, domain: &DomainModel) -> Result<ActionSchema, ParseError> {
    let items = expect_list(e, "action")?;
    let name = items
        .get(1)
        .ok_or_else(|| ParseError::syntax(e.pos(), "action without a name"))
        .and_then(|n| expect_atom(n, "action name"))?
        .to_string();
    let typing = domain.has_requirement(Requirement::Typing);

    let mut params = Vec::new();
    let mut pre_expr = None;
    let mut eff_expr = None;
    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(&items[i], "action keyword")?.to_ascii_lowercase();
        let value = items
            .get(i + 1)
            .ok_or_else(|| ParseError::syntax(items[i].pos(), format!("missing value for {key}")))?;
        match key.as_str() {
            ":parameters" => params = parse_typed_list(expect_list(value, "parameters")?, typing, true)?,
            ":precondition" => pre_expr = Some(value),
            ":effect" => eff_expr = Some(value),
            other => return Err(ParseError::UnsupportedFeature(format!("action field {other}"))),
        }
        i += 2;
    }
    let mut seen = HashSet::new();
    for p in &params {
        if !domain.has_type(&p.ty) {
            return Err(ParseError::UnknownType(p.ty.clone()));
        }
        if !seen.insert(p.name.clone()) {
            return Err(ParseError::Duplicate(format!("?{}", p.name)));
        }
    }

    let ctx = ActionCtx { action: &name, params: &params, constants: &domain.constants, predicates: &domain.predicates };
    let mut precondition = Vec::new();
    if let Some(p) = pre_expr {
        ctx.precondition(p, &mut precondition)?;
    }
    if precondition.iter().any(|l| !l.positive) && !domain.has_requirement(Requirement::NegativePreconditions) {
        return Err(ParseError::UnsupportedFeature(format!(
            "negative precondition in `{name}` without :negative-preconditions"
        )));
    }
    dedup_keep_order_literals(&mut precondition);

    let mut eff = Effects::default();
    if let Some(x) = eff_expr {
        ctx.effect(x, &mut eff)?;
    }
    dedup_keep_order(&mut eff.add);
    dedup_keep_order(&mut eff.del);
    if let Some(atom) = eff.add.iter().find(|a| eff.del.contains(a)) {
        return Err(ParseError::ConflictingEffect { action: name, atom: atom.to_string() });
    }
    let costs = domain.has_requirement(Requirement::ActionCosts);
    let cost = match eff.cost {
        Some(_) if !costs => {
            return Err(ParseError::UnsupportedFeature(format!("cost effect in `{name}` without :action-costs")))
        }
        Some(c) => c,
        // unit costs without :action-costs, zero for unannotated actions with it
        None if costs => 0,
        None => 1,
    };
    Ok(ActionSchema { name, params, precondition, add: eff.add, del: eff.del, cost })
}

fn dedup_keep_order_literals(lits: &mut Vec<Literal>) {
    let mut seen: Vec<(Atom, bool)> = Vec::new();
    lits.retain(|l| {
        let key = (l.atom.clone(), l.positive);
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });
}

/// Parses a problem file against an already parsed domain.
pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemInstance, ParseError> {
    let root = read_one(text)?;
    let (name, sections) = parse_define(&root, "problem")?;
    let typing = domain.has_requirement(Requirement::Typing);

    let mut domain_name = None;
    let mut objects = Vec::new();
    let mut init_expr = None;
    let mut goal_expr = None;

    for sec in sections {
        let items = expect_list(sec, "problem section")?;
        let head = items
            .first()
            .and_then(Sexpr::as_atom)
            .ok_or_else(|| ParseError::syntax(sec.pos(), "expected a section keyword"))?
            .to_ascii_lowercase();
        match head.as_str() {
            ":domain" => {
                let d = items
                    .get(1)
                    .ok_or_else(|| ParseError::syntax(sec.pos(), "missing domain name"))
                    .and_then(|d| expect_atom(d, "domain name"))?;
                domain_name = Some(d.to_string());
            }
            ":requirements" => {
                for r in &items[1..] {
                    let kw = expect_atom(r, "requirement")?;
                    Requirement::from_keyword(kw)
                        .ok_or_else(|| ParseError::UnsupportedFeature(format!("requirement {kw}")))?;
                }
            }
            ":objects" => objects = parse_typed_list(&items[1..], typing, false)?,
            ":init" => init_expr = Some(&items[1..]),
            ":goal" => goal_expr = Some(sec),
            ":metric" => {
                let ok = items.len() == 3
                    && items[1].as_atom().is_some_and(|m| kw_eq(m, "minimize"))
                    && items[2].head().is_some_and(|h| kw_eq(h, "total-cost"));
                if !ok {
                    return Err(ParseError::UnsupportedFeature("metrics other than (minimize (total-cost))".into()));
                }
            }
            other => return Err(ParseError::UnsupportedFeature(format!("problem section {other}"))),
        }
    }

    let domain_name = domain_name.ok_or_else(|| ParseError::syntax(root.pos(), "missing (:domain NAME)"))?;
    if !domain_name.eq_ignore_ascii_case(&domain.name) {
        return Err(ParseError::DomainMismatch { expected: domain.name.clone(), found: domain_name });
    }

    let mut seen = HashSet::new();
    for o in &objects {
        if !domain.has_type(&o.ty) {
            return Err(ParseError::UnknownType(o.ty.clone()));
        }
        if !seen.insert(o.name.clone()) || domain.constants.iter().any(|c| c.name == o.name) {
            return Err(ParseError::Duplicate(o.name.clone()));
        }
    }
    let known = |n: &str| objects.iter().any(|o| o.name == n) || domain.constants.iter().any(|c| c.name == n);
    let ground_atom = |e: &Sexpr| -> Result<GroundAtom, ParseError> {
        let items = expect_list(e, "ground atom")?;
        let pred = items
            .first()
            .ok_or_else(|| ParseError::syntax(e.pos(), "empty atom"))
            .and_then(|h| expect_atom(h, "predicate"))?;
        let args = items[1..]
            .iter()
            .map(|a| {
                let tok = expect_atom(a, "object")?;
                if tok.starts_with('?') {
                    return Err(ParseError::syntax(a.pos(), format!("variable `{tok}` in a ground atom")));
                }
                if !known(tok) {
                    return Err(ParseError::UnknownObject(tok.to_string()));
                }
                Ok(tok.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?;
        check_arity(&domain.predicates, pred, args.len())?;
        Ok(GroundAtom { predicate: pred.to_string(), args })
    };

    let mut init = Vec::new();
    for e in init_expr.unwrap_or(&[]) {
        match e.head() {
            Some("=") => {
                // (= (total-cost) 0) is the only numeric initialisation allowed
                let items = e.as_list().unwrap_or(&[]);
                let ok = items.len() == 3
                    && items[1].head().is_some_and(|h| kw_eq(h, "total-cost"))
                    && items[2].as_atom() == Some("0");
                if !ok {
                    return Err(ParseError::UnsupportedFeature("numeric initial values".into()));
                }
            }
            Some(h) if kw_eq(h, "not") => {
                return Err(ParseError::syntax(e.pos(), "negative literal in :init"));
            }
            _ => init.push(ground_atom(e)?),
        }
    }
    dedup_keep_order(&mut init);

    let mut goal = Vec::new();
    if let Some(sec) = goal_expr {
        let items = sec.as_list().unwrap_or(&[]);
        if items.len() > 2 {
            return Err(ParseError::syntax(sec.pos(), ":goal takes a single formula"));
        }
        if let Some(formula) = items.get(1) {
            collect_goal(formula, &ground_atom, &mut goal)?;
        }
    }
    dedup_keep_order(&mut goal);

    Ok(ProblemInstance { name, domain: domain.name.clone(), objects, init, goal })
}

fn collect_goal(
    e: &Sexpr,
    ground_atom: &dyn Fn(&Sexpr) -> Result<GroundAtom, ParseError>,
    out: &mut Vec<GroundAtom>,
) -> Result<(), ParseError> {
    let items = expect_list(e, "goal")?;
    match items.first().map(|h| expect_atom(h, "goal head")).transpose()? {
        None => Ok(()),
        Some(h) if kw_eq(h, "and") => {
            for sub in &items[1..] {
                collect_goal(sub, ground_atom, out)?;
            }
            Ok(())
        }
        Some(h) if ["not", "or", "imply", "exists", "forall"].iter().any(|k| kw_eq(h, k)) => {
            Err(ParseError::UnsupportedFeature(format!("`{h}` in goals")))
        }
        Some(_) => {
            out.push(ground_atom(e)?);
            Ok(())
        }
    }
}

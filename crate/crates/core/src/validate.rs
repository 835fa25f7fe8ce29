//! Static checks on parsed models and properties.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::ast::*;
use crate::expr::{BinOp, Expr, Sort};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

struct Checker<'a> {
    p: &'a Program,
    sorts: BTreeMap<String, Sort>,
    events: BTreeSet<&'a str>,
    states: BTreeSet<StatePath>,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, message: String) {
        if !self.diags.iter().any(|d| d.message == message) {
            self.diags.push(Diagnostic { message });
        }
    }
}

/// Type of an expression, or a description of the first problem found.
pub fn type_of(
    e: &Expr<String>,
    sorts: &BTreeMap<String, Sort>,
    states: Option<&BTreeSet<StatePath>>,
) -> Result<Sort, String> {
    match e {
        Expr::Int(_) => Ok(Sort::Int),
        Expr::Bool(_) => Ok(Sort::Bool),
        Expr::Var(v) => sorts.get(v).copied().ok_or_else(|| format!("undeclared variable {v}")),
        Expr::InState(p) => match states {
            None => Err(format!("state predicate in({p}) is only allowed in properties")),
            Some(s) if s.contains(p) => Ok(Sort::Bool),
            Some(_) => Err(format!("unknown state {p} in property")),
        },
        Expr::Neg(x) => match type_of(x, sorts, states)? {
            Sort::Int => Ok(Sort::Int),
            Sort::Bool => Err(format!("type mismatch: cannot negate boolean {x}")),
        },
        Expr::Not(x) => match type_of(x, sorts, states)? {
            Sort::Bool => Ok(Sort::Bool),
            Sort::Int => Err(format!("type mismatch: '!' applied to integer {x}")),
        },
        Expr::Binary(op, l, r) => {
            let ls = type_of(l, sorts, states)?;
            let rs = type_of(r, sorts, states)?;
            let mismatch = || format!("type mismatch in {e}");
            match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul => {
                    (ls == Sort::Int && rs == Sort::Int).then_some(Sort::Int).ok_or_else(mismatch)
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    (ls == Sort::Int && rs == Sort::Int).then_some(Sort::Bool).ok_or_else(mismatch)
                }
                BinOp::Eq | BinOp::Ne => (ls == rs).then_some(Sort::Bool).ok_or_else(mismatch),
                BinOp::And | BinOp::Or | BinOp::Implies => {
                    (ls == Sort::Bool && rs == Sort::Bool).then_some(Sort::Bool).ok_or_else(mismatch)
                }
            }
        }
    }
}

/// Runs all static checks. An empty result means the model is well-formed.
pub fn validate_model(p: &Program) -> Vec<Diagnostic> {
    let mut c = Checker {
        p,
        sorts: BTreeMap::new(),
        events: BTreeSet::new(),
        states: p.states().into_iter().map(|s| s.path.clone()).collect(),
        diags: Vec::new(),
    };
    for v in &p.vars {
        if c.sorts.insert(v.name.clone(), v.sort).is_some() {
            c.report(format!("duplicate variable {}", v.name));
        }
        if v.init.sort() != v.sort {
            c.report(format!("type mismatch: initial value of {} is not {}", v.name, v.sort));
        }
    }
    for e in &p.events {
        if !c.events.insert(e.as_str()) {
            c.report(format!("duplicate event {e}"));
        }
    }
    if p.root.states().is_empty() {
        c.report("root composition has no states".to_string());
    }
    check_comp(&mut c, &p.root, None);
    check_junction_names(&mut c, &p.junctions, "the root");
    for (scope, kind, list, what) in p.transition_lists() {
        for t in list {
            check_transition(&mut c, &scope, kind, t, &what);
        }
    }
    check_junction_cycles(&mut c);
    c.diags
}

fn check_junction_names(c: &mut Checker, js: &[Junction], owner: &str) {
    let mut seen = BTreeSet::new();
    for j in js {
        if !seen.insert(j.name.as_str()) {
            c.report(format!("duplicate junction {} in {owner}", j.name));
        }
    }
}

/// `and_sub` is the innermost enclosing parallel substate, if any.
fn check_comp(c: &mut Checker, comp: &Composition, and_sub: Option<&StatePath>) {
    let mut names = BTreeSet::new();
    for sd in comp.states() {
        if !names.insert(sd.name()) {
            c.report(format!("duplicate state {}", sd.path));
        }
    }
    if let Composition::Or(o) = comp {
        if o.states.len() > 1 && o.defaults.is_empty() {
            let at = if o.path.is_empty() { "the root".to_string() } else { o.path.to_string() };
            c.report(format!("missing default transition in {at}"));
        }
        if !o.defaults.is_empty() && o.states.is_empty() {
            c.report(format!("default transitions in {} have no state to enter", o.path));
        }
        for d in reachable_dests(c.p, &o.path, &o.defaults) {
            if !o.path.strictly_contains(&d) {
                c.report(format!("default transition of {} leaves its composition ({d})", display_scope(&o.path)));
            }
        }
    }
    for sd in comp.states() {
        let here = if comp.is_and() { Some(&sd.path) } else { and_sub };
        if comp.is_and() && !sd.outer.is_empty() {
            c.report(format!("parallel state {} cannot have outer transitions", sd.path));
        }
        if sd.comp.is_and() && !sd.inner.is_empty() {
            c.report(format!("state {} has a parallel composition and cannot have inner transitions", sd.path));
        }
        if let Some(sub) = here {
            // Flows that start inside a parallel substate must stay inside it.
            let mut lists: Vec<(&[Transition], StatePath)> = vec![(&sd.inner, sd.path.clone())];
            if !comp.is_and() {
                lists.push((&sd.outer, sd.path.parent().unwrap_or_default()));
            }
            for (list, scope) in lists {
                for d in reachable_dests(c.p, &scope, list) {
                    if !sub.strictly_contains(&d) {
                        c.report(format!("transition from {} leaves parallel state {sub} ({d})", sd.path));
                    }
                }
            }
        }
        check_junction_names(c, &sd.junctions, &sd.path.to_string());
        check_comp(c, &sd.comp, here);
    }
}

fn display_scope(p: &StatePath) -> String {
    if p.is_empty() { "the root".to_string() } else { p.to_string() }
}

fn check_transition(c: &mut Checker, scope: &StatePath, _kind: ListKind, t: &Transition, what: &str) {
    if let Some(e) = &t.event {
        if !c.events.contains(e.as_str()) {
            c.report(format!("undeclared event {e} in {what}"));
        }
    }
    match type_of(&t.cond, &c.sorts, None) {
        Ok(Sort::Bool) => {}
        Ok(Sort::Int) => c.report(format!("type mismatch: condition {} is not boolean", t.cond)),
        Err(m) => c.report(m),
    }
    for a in [&t.cond_action, &t.trans_action] {
        check_action(c, a);
    }
    match &t.dest {
        Destination::State(p) => {
            if !c.states.contains(p) {
                c.report(format!("unresolved destination {p} in {what}"));
            }
        }
        Destination::Junction(j) => {
            if !c.p.own_junctions(scope).iter().any(|x| &x.name == j) {
                c.report(format!("unresolved destination {j} in {what}"));
            }
        }
        Destination::End => {}
    }
}

fn check_action(c: &mut Checker, a: &Action) {
    for asg in &a.0 {
        let Some(&vs) = c.sorts.get(&asg.var) else {
            c.report(format!("undeclared variable {}", asg.var));
            continue;
        };
        match type_of(&asg.value, &c.sorts, None) {
            Ok(s) if s == vs => {}
            Ok(_) => c.report(format!("type mismatch: {} := {}", asg.var, asg.value)),
            Err(m) => c.report(m),
        }
    }
}

fn check_actions_of_states(c: &mut Checker) {
    let states: Vec<&StateDef> = c.p.states();
    for sd in states {
        for a in [&sd.entry, &sd.during, &sd.exit] {
            check_action(c, a);
        }
    }
}

fn check_junction_cycles(c: &mut Checker) {
    check_actions_of_states(c);
    let mut scopes: Vec<StatePath> = vec![StatePath::root()];
    scopes.extend(c.p.states().iter().map(|s| s.path.clone()));
    for scope in scopes {
        let js = c.p.own_junctions(&scope);
        let index: BTreeMap<&str, usize> = js.iter().enumerate().map(|(i, j)| (j.name.as_str(), i)).collect();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; js.len()];
        fn dfs(i: usize, js: &[Junction], index: &BTreeMap<&str, usize>, mark: &mut [u8]) -> bool {
            mark[i] = 1;
            for t in &js[i].transitions {
                if let Destination::Junction(n) = &t.dest {
                    if let Some(&k) = index.get(n.as_str()) {
                        if mark[k] == 1 || (mark[k] == 0 && dfs(k, js, index, mark)) {
                            return true;
                        }
                    }
                }
            }
            mark[i] = 2;
            false
        }
        for i in 0..js.len() {
            if mark[i] == 0 && dfs(i, js, &index, &mut mark) {
                c.report(format!("cyclic junction network in {}", display_scope(&scope)));
                break;
            }
        }
    }
}

/// State destinations reachable from a transition list through junction chains.
pub fn reachable_dests(p: &Program, scope: &StatePath, list: &[Transition]) -> BTreeSet<StatePath> {
    let js = p.own_junctions(scope);
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack: Vec<&Transition> = list.iter().collect();
    while let Some(t) = stack.pop() {
        match &t.dest {
            Destination::State(d) => {
                out.insert(d.clone());
            }
            Destination::Junction(n) => {
                if seen.insert(n.clone()) {
                    if let Some(j) = js.iter().find(|j| &j.name == n) {
                        stack.extend(j.transitions.iter());
                    }
                }
            }
            Destination::End => {}
        }
    }
    out
}

/// Checks an invariant property against a model's variables and states.
pub fn validate_property(p: &Program, prop: &Expr<String>) -> Vec<Diagnostic> {
    let states: BTreeSet<StatePath> = p.states().into_iter().map(|s| s.path.clone()).collect();
    match type_of(prop, &p.sorts(), Some(&states)) {
        Ok(Sort::Bool) => Vec::new(),
        Ok(Sort::Int) => vec![Diagnostic { message: format!("property {prop} is not boolean") }],
        Err(m) => vec![Diagnostic { message: m }],
    }
}

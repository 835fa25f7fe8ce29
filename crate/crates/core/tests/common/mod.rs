//! Random generator of validated, junction-acyclic models and their inputs.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfbmc_core::ast::*;
use sfbmc_core::{parse_model, BinOp, Env, Expr, Program, Sort, Value};

pub fn fixture(name: &str) -> Program {
    let path = format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_model(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn fixture_prop(name: &str) -> Expr<String> {
    let path = format!("{}/examples/props/{name}", env!("CARGO_MANIFEST_DIR"));
    sfbmc_core::parse_expr(std::fs::read_to_string(path).unwrap().trim()).unwrap()
}

pub fn strings(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

struct Gen {
    rng: ChaCha8Rng,
    ints: Vec<String>,
    /// Read by conditions and right-hand sides, never assigned.
    frozen: String,
    bools: Vec<String>,
    events: Vec<String>,
}

/// Name of the generated variable that no action assigns.
pub const FROZEN: &str = "k";

/// Where a transition list may lead: every state strictly inside the
/// innermost enclosing parallel substate, or anywhere without one.
#[derive(Clone)]
struct Region(Option<StatePath>);

impl Gen {
    fn int_atom(&mut self) -> Expr<String> {
        if self.rng.gen_bool(0.15) {
            Expr::Var(self.frozen.clone())
        } else if self.rng.gen_bool(0.7) {
            Expr::Var(self.ints.choose(&mut self.rng).unwrap().clone())
        } else {
            Expr::int(self.rng.gen_range(-2..=3))
        }
    }

    fn int_expr(&mut self) -> Expr<String> {
        let a = self.int_atom();
        match self.rng.gen_range(0..5) {
            0 => Expr::bin(BinOp::Add, a, Expr::int(self.rng.gen_range(1..=2))),
            1 => Expr::bin(BinOp::Sub, a, self.int_atom()),
            2 => Expr::bin(BinOp::Mul, a, Expr::int(self.rng.gen_range(-1..=2))),
            3 => match a {
                // The parser reads `-<literal>` as one literal.
                Expr::Int(n) => Expr::Int(-n),
                a => Expr::Neg(Box::new(a)),
            },
            _ => a,
        }
    }

    fn atom_cond(&mut self) -> Expr<String> {
        if !self.bools.is_empty() && self.rng.gen_bool(0.25) {
            let b = Expr::Var(self.bools.choose(&mut self.rng).unwrap().clone());
            return if self.rng.gen_bool(0.5) { b } else { Expr::not(b) };
        }
        let op = *[BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne].choose(&mut self.rng).unwrap();
        let l = if self.rng.gen_bool(0.15) {
            Expr::Var(self.frozen.clone())
        } else {
            Expr::Var(self.ints.choose(&mut self.rng).unwrap().clone())
        };
        let r = if self.rng.gen_bool(0.7) { Expr::int(self.rng.gen_range(-1..=2)) } else { self.int_atom() };
        Expr::bin(op, l, r)
    }

    fn cond(&mut self) -> Expr<String> {
        match self.rng.gen_range(0..10) {
            0..=3 => Expr::Bool(true),
            4..=7 => self.atom_cond(),
            8 => Expr::bin(BinOp::And, self.atom_cond(), self.atom_cond()),
            _ => Expr::bin(BinOp::Or, self.atom_cond(), self.atom_cond()),
        }
    }

    fn action(&mut self, max: usize) -> Action {
        let n = self.rng.gen_range(0..=max);
        let mut v = Vec::new();
        for _ in 0..n {
            if !self.bools.is_empty() && self.rng.gen_bool(0.2) {
                let var = self.bools.choose(&mut self.rng).unwrap().clone();
                let value = if self.rng.gen_bool(0.5) { Expr::not(Expr::Var(var.clone())) } else { self.atom_cond() };
                v.push(Assignment { var, value });
            } else {
                let var = self.ints.choose(&mut self.rng).unwrap().clone();
                let value = self.int_expr();
                v.push(Assignment { var, value });
            }
        }
        Action(v)
    }

    fn transition(&mut self, dest: Destination) -> Transition {
        let event = if self.rng.gen_bool(0.6) { Some(self.events.choose(&mut self.rng).unwrap().clone()) } else { None };
        Transition { event, cond: self.cond(), cond_action: self.action(1), dest, trans_action: self.action(1) }
    }

    fn comp(&mut self, path: &StatePath, depth: usize, and: bool, region: &Region) -> Composition {
        let n = if and { 2 } else { self.rng.gen_range(1..=3) };
        let mut states = Vec::new();
        for i in 0..n {
            let name = format!("{}{i}", (b'A' + depth as u8) as char);
            let child = path.child(&name);
            let region = if and { Region(Some(child.clone())) } else { region.clone() };
            states.push(self.state(child, depth + 1, region));
        }
        if and {
            return Composition::And(AndComp { path: path.clone(), states });
        }
        let mut defaults = Vec::new();
        if self.rng.gen_bool(0.3) && states.len() > 1 {
            let s = states.choose(&mut self.rng).unwrap().path.clone();
            let mut t = Transition::to(Destination::State(s));
            t.cond = self.atom_cond();
            t.trans_action = self.action(1);
            defaults.push(t);
        }
        let s = states.choose(&mut self.rng).unwrap().path.clone();
        let mut t = Transition::to(Destination::State(s));
        t.trans_action = self.action(1);
        defaults.push(t);
        Composition::Or(OrComp { path: path.clone(), defaults, states })
    }

    fn state(&mut self, path: StatePath, depth: usize, region: Region) -> StateDef {
        let comp = if depth < 3 && self.rng.gen_bool(0.45) {
            let and = self.rng.gen_bool(0.3);
            self.comp(&path, depth, and, &region)
        } else {
            Composition::leaf(path.clone())
        };
        StateDef {
            path: path.clone(),
            entry: self.action(1),
            during: self.action(2),
            exit: self.action(1),
            inner: Vec::new(),
            outer: Vec::new(),
            junctions: Vec::new(),
            comp,
        }
    }

    /// Junctions of one scope, each leading only to later ones.
    fn junctions(&mut self, targets: &[StatePath]) -> Vec<Junction> {
        let n = self.rng.gen_range(0..=2);
        let mut out = Vec::new();
        for i in 0..n {
            let mut ts = Vec::new();
            for _ in 0..self.rng.gen_range(1..=2) {
                let dest = self.dest(targets, &(i + 1..n).map(|k| format!("J{k}")).collect::<Vec<_>>(), true);
                let mut t = self.transition(dest);
                t.event = None;
                ts.push(t);
            }
            out.push(Junction { name: format!("J{i}"), transitions: ts });
        }
        out
    }

    fn dest(&mut self, targets: &[StatePath], junctions: &[String], allow_end: bool) -> Destination {
        let r = self.rng.gen_range(0..10);
        if r == 0 && allow_end {
            Destination::End
        } else if r < 4 && !junctions.is_empty() {
            Destination::Junction(junctions.choose(&mut self.rng).unwrap().clone())
        } else if targets.is_empty() {
            Destination::End
        } else {
            Destination::State(targets.choose(&mut self.rng).unwrap().clone())
        }
    }
}

fn region_targets(all: &[StatePath], region: &Option<StatePath>) -> Vec<StatePath> {
    all.iter().filter(|s| region.as_ref().is_none_or(|r| r.strictly_contains(s))).cloned().collect()
}

/// Innermost parallel substate containing `path` (or equal to it).
fn and_region(p: &Program, path: &StatePath) -> Option<StatePath> {
    let mut best = None;
    let mut cur = StatePath::root();
    for name in &path.0 {
        let comp = p.composition(&cur).unwrap();
        cur = cur.child(name);
        if comp.is_and() {
            best = Some(cur.clone());
        }
    }
    best
}

fn state_mut<'a>(comp: &'a mut Composition, path: &StatePath, depth: usize) -> &'a mut StateDef {
    let states = match comp {
        Composition::Or(o) => &mut o.states,
        Composition::And(a) => &mut a.states,
    };
    let sd = states.iter_mut().find(|s| s.path.0[depth] == path.0[depth]).unwrap();
    if depth + 1 == path.len() {
        sd
    } else {
        state_mut(&mut sd.comp, path, depth + 1)
    }
}

pub fn gen_program(seed: u64) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_int = rng.gen_range(1..=3);
    let n_bool = rng.gen_range(0..=1);
    let n_ev = rng.gen_range(1..=3);
    let mut g = Gen {
        rng,
        ints: (0..n_int).map(|i| format!("x{i}")).collect(),
        frozen: FROZEN.to_string(),
        bools: (0..n_bool).map(|i| format!("b{i}")).collect(),
        events: (0..n_ev).map(|i| format!("E{i}")).collect(),
    };
    let root_and = g.rng.gen_bool(0.15);
    let root = g.comp(&StatePath::root(), 0, root_and, &Region(None));
    let mut vars: Vec<VarDecl> = g
        .ints
        .clone()
        .into_iter()
        .map(|name| VarDecl { name, sort: Sort::Int, init: Value::int(0) })
        .collect();
    vars.push(VarDecl { name: FROZEN.to_string(), sort: Sort::Int, init: Value::int(1) });
    vars.extend(g.bools.clone().into_iter().map(|name| VarDecl { name, sort: Sort::Bool, init: Value::Bool(false) }));
    let mut p = Program { name: format!("R{seed}"), events: g.events.clone(), vars, junctions: Vec::new(), root };

    let all: Vec<StatePath> = p.states().iter().map(|s| s.path.clone()).collect();
    // Junctions per scope, then inner and outer transitions that may use them.
    let mut scope_junctions: Vec<(StatePath, Vec<Junction>)> = Vec::new();
    for scope in std::iter::once(StatePath::root()).chain(all.iter().cloned()) {
        if !scope.is_empty() && p.composition(&scope).unwrap().is_and() {
            continue;
        }
        let targets = region_targets(&all, &and_region(&p, &scope));
        let js = g.junctions(&targets);
        scope_junctions.push((scope, js));
    }
    for (scope, js) in &scope_junctions {
        if scope.is_empty() {
            p.junctions = js.clone();
        } else {
            state_mut(&mut p.root, scope, 0).junctions = js.clone();
        }
    }
    let names = |scope: &StatePath| -> Vec<String> {
        scope_junctions.iter().find(|(s, _)| s == scope).map(|(_, js)| js.iter().map(|j| j.name.clone()).collect()).unwrap_or_default()
    };
    for path in &all {
        let parent = path.parent().unwrap_or_default();
        let parent_is_and = p.composition(&parent).unwrap().is_and();
        let own_is_and = p.composition(path).unwrap().is_and();
        let targets = region_targets(&all, &and_region(&p, path));
        let mut outer = Vec::new();
        if !parent_is_and {
            let js = names(&parent);
            for _ in 0..g.rng.gen_range(0..=2) {
                let d = g.dest(&targets, &js, false);
                outer.push(g.transition(d));
            }
        }
        let mut inner = Vec::new();
        if !own_is_and {
            let js = names(path);
            for _ in 0..g.rng.gen_range(0..=1) {
                let d = g.dest(&targets, &js, false);
                inner.push(g.transition(d));
            }
        }
        let sd = state_mut(&mut p.root, path, 0);
        sd.outer = outer;
        sd.inner = inner;
    }
    p
}

pub fn gen_events(p: &Program, rng: &mut impl Rng, max: usize) -> Vec<String> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| p.events.choose(rng).unwrap().clone()).collect()
}

pub fn gen_env(p: &Program, rng: &mut impl Rng) -> Env {
    p.vars
        .iter()
        .map(|v| {
            let val = match v.sort {
                Sort::Int => Value::int(rng.gen_range(-3..=3)),
                Sort::Bool => Value::Bool(rng.gen_bool(0.5)),
            };
            (v.name.clone(), val)
        })
        .collect()
}

/// Every valuation with ints in `lo..=hi`.
pub fn all_envs(p: &Program, lo: i64, hi: i64) -> Vec<Env> {
    let mut out = vec![Env::new()];
    for v in &p.vars {
        let vals: Vec<Value> = match v.sort {
            Sort::Int => (lo..=hi).map(Value::int).collect(),
            Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
        };
        out = out
            .into_iter()
            .flat_map(|e| {
                vals.iter().map(move |x| {
                    let mut e = e.clone();
                    e.insert(v.name.clone(), x.clone());
                    e
                })
            })
            .collect();
    }
    out
}

fn holds(prop: &Expr<String>, active: &std::collections::BTreeSet<StatePath>, env: &Env) -> bool {
    let v = prop.eval(&|x: &String| env.get(x).cloned(), &|s: &StatePath| Some(active.contains(s)));
    v.unwrap().as_bool().unwrap()
}

/// Earliest step at which some event sequence violates `prop`, found by
/// running the interpreter on every sequence of up to `k - 1` events. Step
/// 0 is the uninitialized configuration and step 1 the initialized one.
pub fn min_violation(p: &Program, prop: &Expr<String>, k: usize) -> Option<usize> {
    if !holds(prop, &Default::default(), &p.initial_values()) {
        return Some(0);
    }
    if k == 0 {
        return None;
    }
    let mut best: Option<usize> = None;
    let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
    for len in 0..k {
        if best.is_some() {
            break;
        }
        let mut next = Vec::new();
        for evs in frontier {
            let Ok(trace) = sfbmc_core::run_trace(p, &evs) else { continue };
            let last = trace.last().unwrap();
            if !holds(prop, &last.active, &last.env) {
                best = Some(len + 1);
                break;
            }
            for e in &p.events {
                let mut more = evs.clone();
                more.push(e.clone());
                next.push(more);
            }
        }
        frontier = next;
    }
    best
}

/// A random linear property over the program's variables and states.
pub fn gen_property(p: &Program, rng: &mut impl Rng) -> Expr<String> {
    let ints: Vec<&VarDecl> = p.vars.iter().filter(|v| v.sort == Sort::Int).collect();
    let states = p.states();
    let atom = |rng: &mut dyn rand::RngCore| -> Expr<String> {
        if rng.gen_bool(0.3) {
            Expr::InState(states.choose(rng).unwrap().path.clone())
        } else {
            let v = ints.choose(rng).unwrap();
            let op = *[BinOp::Le, BinOp::Ge, BinOp::Ne].choose(rng).unwrap();
            Expr::bin(op, Expr::Var(v.name.clone()), Expr::int(rng.gen_range(-2..=3)))
        }
    };
    let a = atom(rng);
    match rng.gen_range(0..3) {
        0 => a,
        1 => Expr::bin(BinOp::Or, a, atom(rng)),
        _ => Expr::not(Expr::bin(BinOp::And, a, atom(rng))),
    }
}

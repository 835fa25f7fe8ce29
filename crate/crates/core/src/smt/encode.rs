use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ast::StatePath;
use crate::expr::{BinOp, Expr, Sort};
use crate::sts::{phi_or, FVar, ProgramTransition, Sts};
use crate::symbolic::{Effect, Sym};

/// `<var>__<step>`
pub fn data_name(var: &str, step: usize) -> String {
    format!("{var}__{step}")
}

/// `<var>__<step>_<sub>`: the `sub`-th assignment to `var` inside step `step`.
pub fn ssa_name(var: &str, step: usize, sub: usize) -> String {
    format!("{var}__{step}_{sub}")
}

pub fn ctrl_name(state: &StatePath, step: usize) -> String {
    format!("in.{state}__{step}")
}

pub fn event_name(event: &str, step: usize) -> String {
    format!("ev.{event}__{step}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NameKind {
    Data(String),
    Ssa(String, usize),
    Ctrl(StatePath),
    Event(String),
}

/// Inverse of the naming functions.
pub fn decode_name(name: &str) -> Option<(NameKind, usize)> {
    let (base, idx) = name.rsplit_once("__")?;
    let (step, sub) = match idx.split_once('_') {
        Some((s, j)) => (s.parse().ok()?, Some(j.parse().ok()?)),
        None => (idx.parse().ok()?, None),
    };
    let kind = if let Some(path) = base.strip_prefix("in.") {
        NameKind::Ctrl(StatePath::parse(path))
    } else if let Some(ev) = base.strip_prefix("ev.") {
        NameKind::Event(ev.to_string())
    } else if let Some(j) = sub {
        NameKind::Ssa(base.to_string(), j)
    } else {
        NameKind::Data(base.to_string())
    };
    if sub.is_some() && !matches!(kind, NameKind::Ssa(..)) {
        return None;
    }
    Some((kind, step))
}

pub fn smt_sort(s: Sort) -> &'static str {
    match s {
        Sort::Int => "Int",
        Sort::Bool => "Bool",
    }
}

fn op_name(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Eq => "=",
        BinOp::Ne => "distinct",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::And => "and",
        BinOp::Or => "or",
        BinOp::Implies => "=>",
    }
}

/// Prints an expression as an SMT-LIB term.
pub fn to_smt<V>(
    e: &Expr<V>,
    var: &mut impl FnMut(&V) -> String,
    state: &mut impl FnMut(&StatePath) -> String,
) -> String {
    match e {
        Expr::Int(n) if n.sign() == num_bigint::Sign::Minus => format!("(- {})", -n),
        Expr::Int(n) => n.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Var(v) => var(v),
        Expr::InState(p) => state(p),
        Expr::Neg(x) => format!("(- {})", to_smt(x, var, state)),
        Expr::Not(x) => format!("(not {})", to_smt(x, var, state)),
        Expr::Binary(op, l, r) => {
            let l = to_smt(l, var, state);
            let r = to_smt(r, var, state);
            format!("({} {l} {r})", op_name(*op))
        }
    }
}

fn and_all(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "true".into(),
        1 => parts.into_iter().next().expect("one"),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn or_all(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "false".into(),
        1 => parts.into_iter().next().expect("one"),
        _ => format!("(or {})", parts.join(" ")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("property refers to unknown variable {0}")]
    UnknownVar(String),
    #[error("property refers to unknown state {0}")]
    UnknownState(String),
}

/// A self-contained query: declarations and assertions followed by one
/// `check-sat` and a value request for every step variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtScript {
    pub logic: String,
    pub commands: Vec<String>,
    pub values: Vec<String>,
}

impl SmtScript {
    pub fn text(&self) -> String {
        self.to_string()
    }

    /// Number of transition-relation assertions.
    pub fn transition_assertions(&self) -> usize {
        self.commands.iter().filter(|c| c.starts_with("(assert (=>")).count()
    }
}

impl fmt::Display for SmtScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(set-option :produce-models true)")?;
        writeln!(f, "(set-logic {})", self.logic)?;
        for c in &self.commands {
            writeln!(f, "{c}")?;
        }
        writeln!(f, "(check-sat)")?;
        if !self.values.is_empty() {
            writeln!(f, "(get-value ({}))", self.values.join(" "))?;
        }
        Ok(())
    }
}

/// Encodes steps of an STS as SMT-LIB commands.
#[derive(Debug, Clone)]
pub struct Encoder<'a> {
    sts: &'a Sts,
    /// Lower each transition's action chain in execution order. A value that
    /// is overwritten later in the same step gets a fresh intermediate
    /// constant; final values are written into the next-step constants.
    /// When off, the derived guard and update are substituted directly.
    pub ssa: bool,
}

impl<'a> Encoder<'a> {
    pub fn new(sts: &'a Sts) -> Self {
        Encoder { sts, ssa: true }
    }

    pub fn sts(&self) -> &Sts {
        self.sts
    }

    pub fn logic(&self, prop: &Expr<String>) -> &'static str {
        if self.sts.is_nonlinear() || prop.is_nonlinear() {
            "QF_NIA"
        } else {
            "QF_LIA"
        }
    }

    /// Checks that the property only mentions program variables and states.
    pub fn check_property(&self, prop: &Expr<String>) -> Result<(), EncodeError> {
        let mut err = None;
        prop.visit_vars(&mut |v| {
            if self.sts.sort_of(v).is_none() && err.is_none() {
                err = Some(EncodeError::UnknownVar(v.clone()));
            }
        });
        prop.visit_states(&mut |s| {
            if !self.sts.states.contains(s) && err.is_none() {
                err = Some(EncodeError::UnknownState(s.to_string()));
            }
        });
        err.map_or(Ok(()), Err)
    }

    /// Data and control constants of step `i`.
    pub fn declare_state(&self, i: usize) -> Vec<String> {
        let mut out: Vec<String> = self
            .sts
            .vars
            .iter()
            .map(|(v, s)| format!("(declare-const {} {})", data_name(v, i), smt_sort(*s)))
            .collect();
        out.extend(self.sts.states.iter().map(|s| format!("(declare-const {} Bool)", ctrl_name(s, i))));
        out
    }

    pub fn state_names(&self, i: usize) -> Vec<String> {
        let mut out: Vec<String> = self.sts.vars.iter().map(|(v, _)| data_name(v, i)).collect();
        out.extend(self.sts.states.iter().map(|s| ctrl_name(s, i)));
        out
    }

    pub fn event_names(&self, i: usize) -> Vec<String> {
        self.sts.events.iter().map(|e| event_name(e, i)).collect()
    }

    fn formula(&self, f: &Expr<FVar>, i: usize) -> String {
        to_smt(
            f,
            &mut |v: &FVar| match v {
                FVar::Data { name, primed } => data_name(name, i + usize::from(*primed)),
                FVar::Ctrl { state, primed } => ctrl_name(state, i + usize::from(*primed)),
                FVar::Event(e) => event_name(e, i),
            },
            &mut |s: &StatePath| ctrl_name(s, i),
        )
    }

    pub fn init(&self) -> Vec<String> {
        vec![format!("(assert {})", self.formula(&self.sts.init_formula(), 0))]
    }

    /// The transition relation between steps `i` and `i + 1`, including the
    /// event constants of step `i`. Step 0 is the uninitialized point, left
    /// only by initialization, so its events are unconstrained.
    pub fn transition(&self, i: usize) -> Vec<String> {
        let mut out: Vec<String> =
            self.event_names(i).into_iter().map(|e| format!("(declare-const {e} Bool)")).collect();
        let mut subs: BTreeMap<String, usize> = BTreeMap::new();
        for t in &self.sts.transitions {
            if self.ssa {
                out.extend(self.ssa_transition(t, i, &mut subs));
            } else {
                out.push(format!("(assert {})", self.formula(&self.sts.phi_transition(t), i)));
            }
        }
        if i > 0 {
            out.push(format!("(assert {})", self.formula(&self.sts.event_constraint(), i)));
        }
        out
    }

    fn ssa_transition(&self, t: &ProgramTransition, i: usize, subs: &mut BTreeMap<String, usize>) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur: BTreeMap<String, String> = self.sts.vars.iter().map(|(v, _)| (v.clone(), data_name(v, i))).collect();
        let mut ante = vec![self.formula(&phi_or(&self.sts.states, &t.src, false), i)];
        if let Some(e) = &t.event {
            ante.push(event_name(e, i));
        }
        let mut last: BTreeMap<&str, usize> = BTreeMap::new();
        for (idx, eff) in t.effects.iter().enumerate() {
            if let Effect::Assign(v, _) = eff {
                last.insert(v, idx);
            }
        }
        for (idx, eff) in t.effects.iter().enumerate() {
            match eff {
                Effect::Assume(c) => {
                    ante.push(to_smt(c, &mut |v: &String| cur[v].clone(), &mut |s: &StatePath| ctrl_name(s, i)));
                }
                Effect::Assign(v, e) => {
                    let rhs = to_smt(e, &mut |w: &String| cur[w].clone(), &mut |s: &StatePath| ctrl_name(s, i));
                    if last[v.as_str()] == idx {
                        cur.insert(v.clone(), rhs);
                        continue;
                    }
                    let j = subs.entry(v.clone()).or_insert(0);
                    *j += 1;
                    let name = ssa_name(v, i, *j);
                    let sort = self.sts.sort_of(v).expect("assigned variable is declared");
                    out.push(format!("(declare-const {name} {})", smt_sort(sort)));
                    out.push(format!("(assert (= {name} {rhs}))"));
                    cur.insert(v.clone(), name);
                }
            }
        }
        let mut cons = vec![self.formula(&phi_or(&self.sts.states, &t.dst, true), i)];
        for (v, _) in &self.sts.vars {
            cons.push(format!("(= {} {})", data_name(v, i + 1), cur[v]));
        }
        out.push(format!("(assert (=> {} {}))", and_all(ante), and_all(cons)));
        out
    }

    /// φ at step `i`.
    pub fn property(&self, prop: &Expr<String>, i: usize) -> String {
        to_smt(prop, &mut |v: &String| data_name(v, i), &mut |s: &StatePath| ctrl_name(s, i))
    }

    /// `¬φ` at some step in `0..=k`.
    pub fn violation_upto(&self, prop: &Expr<String>, k: usize) -> String {
        or_all((0..=k).map(|i| format!("(not {})", self.property(prop, i))).collect())
    }

    /// Every constant whose value a counterexample needs at depth `k`.
    pub fn model_names(&self, k: usize) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..=k {
            out.extend(self.state_names(i));
            if i < k {
                out.extend(self.event_names(i));
            }
        }
        out
    }

    /// The path formula up to depth `k` together with the disjunction of
    /// property violations.
    pub fn query(&self, prop: &Expr<String>, k: usize) -> Result<SmtScript, EncodeError> {
        self.check_property(prop)?;
        let mut commands = Vec::new();
        for i in 0..=k {
            commands.extend(self.declare_state(i));
        }
        commands.extend(self.init());
        for i in 0..k {
            commands.extend(self.transition(i));
        }
        commands.push(format!("(assert {})", self.violation_upto(prop, k)));
        Ok(SmtScript { logic: self.logic(prop).into(), commands, values: self.model_names(k) })
    }
}

pub fn encode_bmc_query(sts: &Sts, prop: &Expr<String>, k: usize) -> Result<SmtScript, EncodeError> {
    Encoder::new(sts).query(prop, k)
}

/// Symbolic guard with symbols read as plain step-0 constants.
pub fn guard_term(t: &ProgramTransition) -> String {
    to_smt(&t.guard_expr(), &mut |s: &Sym| data_name(&s.0, 0), &mut |p: &StatePath| ctrl_name(p, 0))
}

//! Symbolic transition system: control points, program transitions and the
//! formulas describing initial states and the transition relation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::ast::{Program, StatePath};
use crate::concrete::Env;
use crate::expr::{BinOp, Expr, Sort};
use crate::symbolic::{ssos_step, Derivation, Effect, Sym, SymConfig, SymEnv, SymError, SymExpr};

/// Set of active states; the empty set is the uninitialized point.
pub type ControlPoint = BTreeSet<StatePath>;

pub fn show_cp(cp: &ControlPoint) -> String {
    if cp.is_empty() {
        return "\u{2205}".to_string();
    }
    let parts: Vec<String> = cp.iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Variables of transition-system formulas. Primed variables refer to the
/// next state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FVar {
    Data { name: String, primed: bool },
    Ctrl { state: StatePath, primed: bool },
    Event(String),
}

impl fmt::Display for FVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tick = |p: bool| if p { "'" } else { "" };
        match self {
            FVar::Data { name, primed } => write!(f, "{name}{}", tick(*primed)),
            FVar::Ctrl { state, primed } => write!(f, "at({state}){}", tick(*primed)),
            FVar::Event(e) => write!(f, "ev({e})"),
        }
    }
}

pub type Formula = Expr<FVar>;

#[derive(Debug, Clone, Serialize)]
pub struct ProgramTransition {
    pub id: usize,
    #[serde(serialize_with = "ser_cp")]
    pub src: ControlPoint,
    /// `None` for the initialization out of the empty control point.
    pub event: Option<String>,
    #[serde(serialize_with = "ser_exprs")]
    pub guard: Vec<SymExpr>,
    pub update: SymEnv,
    #[serde(serialize_with = "ser_cp")]
    pub dst: ControlPoint,
    #[serde(skip)]
    pub effects: Vec<Effect>,
    #[serde(skip)]
    pub derivation: Derivation,
}

fn ser_cp<S: Serializer>(cp: &ControlPoint, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(cp.iter().map(|p| p.to_string()))
}

fn ser_exprs<S: Serializer>(es: &[SymExpr], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(es.iter().map(|e| e.to_string()))
}

impl ProgramTransition {
    pub fn guard_expr(&self) -> SymExpr {
        Expr::conj(self.guard.iter().cloned())
    }

    pub fn is_init(&self) -> bool {
        self.src.is_empty()
    }
}

/// Explores all control points reachable from the empty one and collects
/// one program transition per feasible symbolic successor.
pub fn derive_transitions(p: &Program) -> Result<(Vec<ControlPoint>, Vec<ProgramTransition>), SymError> {
    let mut cps = vec![ControlPoint::new()];
    let mut seen: BTreeSet<ControlPoint> = cps.iter().cloned().collect();
    let mut queue: VecDeque<ControlPoint> = cps.iter().cloned().collect();
    let mut out = Vec::new();
    while let Some(cp) = queue.pop_front() {
        let events: Vec<Option<&str>> =
            if cp.is_empty() { vec![None] } else { p.events.iter().map(|e| Some(e.as_str())).collect() };
        for ev in events {
            let sc = SymConfig::at(p, cp.clone());
            for s in ssos_step(p, &sc, ev)? {
                let dst = s.config.active.clone();
                if seen.insert(dst.clone()) {
                    cps.push(dst.clone());
                    queue.push_back(dst.clone());
                }
                out.push(ProgramTransition {
                    id: out.len(),
                    src: cp.clone(),
                    event: ev.map(str::to_string),
                    guard: s.config.pc.0,
                    update: s.config.delta,
                    dst,
                    effects: s.config.effects,
                    derivation: s.derivation,
                });
            }
        }
    }
    Ok((cps, out))
}

#[derive(Debug, Clone, Serialize)]
pub struct Sts {
    pub program: String,
    pub vars: Vec<(String, Sort)>,
    pub events: Vec<String>,
    /// All states, in declaration order; one control variable each.
    pub states: Vec<StatePath>,
    #[serde(serialize_with = "ser_cps")]
    pub control_points: Vec<ControlPoint>,
    pub init_values: Env,
    pub transitions: Vec<ProgramTransition>,
}

fn ser_cps<S: Serializer>(cps: &[ControlPoint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(cps.iter().map(|cp| cp.iter().map(|p| p.to_string()).collect::<Vec<_>>()))
}

pub fn build_sts(p: &Program) -> Result<Sts, SymError> {
    let (control_points, transitions) = derive_transitions(p)?;
    Ok(Sts {
        program: p.name.clone(),
        vars: p.vars.iter().map(|v| (v.name.clone(), v.sort)).collect(),
        events: p.events.clone(),
        states: p.states().into_iter().map(|s| s.path.clone()).collect(),
        control_points,
        init_values: p.initial_values(),
        transitions,
    })
}

/// Characteristic formula of a control point: active states positive,
/// every other state negated.
pub fn phi_or(states: &[StatePath], cp: &ControlPoint, primed: bool) -> Formula {
    let lit = |s: &StatePath| Expr::Var(FVar::Ctrl { state: s.clone(), primed });
    let pos = states.iter().filter(|s| cp.contains(*s)).map(lit);
    let neg = states.iter().filter(|s| !cp.contains(*s)).map(|s| Expr::not(lit(s)));
    Expr::conj(pos.chain(neg).collect::<Vec<_>>())
}

pub fn sym_to_formula(e: &SymExpr) -> Formula {
    e.map_var(&mut |s: &Sym| FVar::Data { name: s.0.clone(), primed: false })
}

impl Sts {
    pub fn sort_of(&self, v: &str) -> Option<Sort> {
        self.vars.iter().find(|(n, _)| n == v).map(|(_, s)| *s)
    }

    /// `src ∧ event ∧ guard ⇒ dst' ∧ ⋀ v' = Δ(v)`, with frame equalities
    /// for unchanged variables.
    pub fn phi_transition(&self, t: &ProgramTransition) -> Formula {
        let mut ante = vec![phi_or(&self.states, &t.src, false)];
        if let Some(e) = &t.event {
            ante.push(Expr::Var(FVar::Event(e.clone())));
        }
        ante.extend(t.guard.iter().map(sym_to_formula));
        let mut cons = vec![phi_or(&self.states, &t.dst, true)];
        for (v, _) in &self.vars {
            let next = Expr::Var(FVar::Data { name: v.clone(), primed: true });
            cons.push(Expr::eq(next, sym_to_formula(&t.update.get(v))));
        }
        Expr::implies(Expr::conj(ante), Expr::conj(cons))
    }

    pub fn init_formula(&self) -> Formula {
        let mut parts = vec![phi_or(&self.states, &ControlPoint::new(), false)];
        for (v, _) in &self.vars {
            let val = self.init_values[v].clone();
            parts.push(Expr::eq(Expr::Var(FVar::Data { name: v.clone(), primed: false }), Expr::from(val)));
        }
        Expr::conj(parts)
    }

    /// Exactly one event is present in each step.
    pub fn event_constraint(&self) -> Formula {
        let lit = |e: &String| Expr::Var(FVar::Event(e.clone()));
        let mut parts = vec![Expr::disj(self.events.iter().map(lit).collect::<Vec<_>>())];
        for (i, a) in self.events.iter().enumerate() {
            for b in &self.events[i + 1..] {
                parts.push(Expr::not(Expr::bin(BinOp::And, lit(a), lit(b))));
            }
        }
        Expr::conj(parts)
    }

    pub fn trans_formula(&self) -> Formula {
        let mut parts: Vec<Formula> = self.transitions.iter().map(|t| self.phi_transition(t)).collect();
        parts.push(self.event_constraint());
        Expr::conj(parts)
    }

    pub fn is_nonlinear(&self) -> bool {
        self.transitions.iter().any(|t| {
            t.guard.iter().any(|g| g.is_nonlinear()) || t.update.0.values().any(|e| e.is_nonlinear())
        })
    }

    /// Transitions grouped by source control point and event.
    pub fn groups(&self) -> BTreeMap<(ControlPoint, Option<String>), Vec<&ProgramTransition>> {
        let mut m: BTreeMap<_, Vec<_>> = BTreeMap::new();
        for t in &self.transitions {
            m.entry((t.src.clone(), t.event.clone())).or_default().push(t);
        }
        m
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("serializable");
        v["init"] = serde_json::Value::String(self.init_formula().to_string());
        v["transitionFormulas"] =
            serde_json::Value::Array(self.transitions.iter().map(|t| self.phi_transition(t).to_string().into()).collect());
        v
    }
}

//! Symbolic execution: data variables are mapped to expressions over the
//! symbols `g(v)` standing for their values at the start of the step, and
//! every branching decision is recorded in a path condition.

mod derivation;
mod engine;
mod simulation;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::ast::{Program, StatePath};
use crate::concrete::Env;
use crate::expr::{EvalError, Expr, Value};

pub use derivation::{Derivation, Rule};
pub use engine::{ssos_step, ssos_step_with, SymError, SymOptions, Successor};
pub use simulation::{check_simulation, check_simulation_with, SimulationReport};

/// Symbol for the value a variable had when the step began.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(pub String);

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type SymExpr = Expr<Sym>;

/// Substitutes the current symbolic values into a program expression.
pub fn sym_eval(e: &Expr<String>, delta: &SymEnv) -> SymExpr {
    e.subst(&mut |v: &String| delta.get(v)).fold_constants()
}

/// Symbolic environment: each variable's current value as a symbolic term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymEnv(pub BTreeMap<String, SymExpr>);

impl SymEnv {
    /// Maps every variable to its own symbol.
    pub fn identity(p: &Program) -> Self {
        SymEnv(p.vars.iter().map(|v| (v.name.clone(), Expr::Var(Sym(v.name.clone())))).collect())
    }

    pub fn get(&self, v: &str) -> SymExpr {
        self.0.get(v).cloned().unwrap_or_else(|| Expr::Var(Sym(v.to_string())))
    }
}

impl Serialize for SymEnv {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.0.iter().map(|(k, v)| (k, v.to_string())))
    }
}

/// Ordered list of conjuncts; empty means true.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathCondition(pub Vec<SymExpr>);

impl PathCondition {
    pub fn as_expr(&self) -> SymExpr {
        Expr::conj(self.0.iter().cloned())
    }
}

impl fmt::Display for PathCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self.0.iter().map(|c| format!("({c})")).collect();
        f.write_str(&parts.join(" && "))
    }
}

/// One executed step of a derivation at the level of program variables, in
/// execution order. Used for SSA encodings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    /// A condition (or its negation) was assumed.
    Assume(Expr<String>),
    Assign(String, Expr<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymConfig {
    pub active: BTreeSet<StatePath>,
    pub delta: SymEnv,
    pub pc: PathCondition,
    pub effects: Vec<Effect>,
}

impl SymConfig {
    /// Uninitialized configuration with the identity environment.
    pub fn initial(p: &Program) -> Self {
        SymConfig::at(p, BTreeSet::new())
    }

    pub fn at(p: &Program, active: BTreeSet<StatePath>) -> Self {
        SymConfig { active, delta: SymEnv::identity(p), pc: PathCondition::default(), effects: Vec::new() }
    }

    pub fn is_initialized(&self) -> bool {
        !self.active.is_empty()
    }
}

fn sym_lookup(d0: &Env) -> impl Fn(&Sym) -> Option<Value> + '_ {
    move |s: &Sym| d0.get(&s.0).cloned()
}

/// Evaluates a symbolic term with each symbol bound to its value in `d0`.
pub fn eval_sym(e: &SymExpr, d0: &Env) -> Result<Value, EvalError> {
    e.eval(&sym_lookup(d0), &|_: &StatePath| None)
}

/// Concrete environment described by `delta` when the symbols take the
/// values in `d0`.
pub fn beta_interpret(delta: &SymEnv, d0: &Env) -> Result<Env, EvalError> {
    delta.0.iter().map(|(v, e)| Ok((v.clone(), eval_sym(e, d0)?))).collect()
}

/// Truth value of a path condition when the symbols take the values in `d0`.
pub fn eval_pc(pc: &[SymExpr], d0: &Env) -> Result<bool, EvalError> {
    for c in pc {
        match eval_sym(c, d0)? {
            Value::Bool(true) => {}
            Value::Bool(false) => return Ok(false),
            Value::Int(_) => return Err(EvalError::Type("path condition".into())),
        }
    }
    Ok(true)
}

//! Deterministic reference interpreter for one macro-step.
//!
//! This engine is deliberately independent of [`crate::symbolic`]; the two
//! are compared by [`crate::symbolic::check_simulation`].

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::ast::*;
use crate::expr::{EvalError, Expr, Value};

pub type Env = BTreeMap<String, Value>;

/// Active states plus the data valuation. An empty active set is the
/// uninitialized configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Configuration {
    pub active: BTreeSet<StatePath>,
    pub env: Env,
}

impl Configuration {
    pub fn initial(env: Env) -> Self {
        Configuration { active: BTreeSet::new(), env }
    }

    pub fn is_initialized(&self) -> bool {
        !self.active.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("execution is stuck: {0}")]
    Stuck(String),
    #[error("step exceeded {0} rule applications")]
    Diverged(usize),
    #[error("undeclared event {0}")]
    UnknownEvent(String),
}

pub const DEFAULT_STEP_BUDGET: usize = 100_000;

pub(crate) fn enabled(trigger: &Option<String>, event: Option<&str>) -> bool {
    match (trigger, event) {
        (None, _) | (_, None) => true,
        (Some(t), Some(e)) => t == e,
    }
}

struct Interp<'p> {
    p: &'p Program,
    event: Option<&'p str>,
    cfg: Configuration,
    budget: usize,
    used: usize,
}

type R<T> = Result<T, ExecError>;

impl<'p> Interp<'p> {
    fn tick(&mut self) -> R<()> {
        self.used += 1;
        if self.used > self.budget {
            Err(ExecError::Diverged(self.budget))
        } else {
            Ok(())
        }
    }

    fn eval(&self, e: &Expr<String>) -> R<Value> {
        let env = &self.cfg.env;
        Ok(e.eval(&|v: &String| env.get(v).cloned(), &|_: &StatePath| None)?)
    }

    fn exec(&mut self, a: &Action) -> R<()> {
        for asg in &a.0 {
            let v = self.eval(&asg.value)?;
            self.cfg.env.insert(asg.var.clone(), v);
        }
        Ok(())
    }

    fn transition(&mut self, t: &Transition) -> R<Tv> {
        self.tick()?;
        if !enabled(&t.event, self.event) {
            return Ok(Tv::No);
        }
        match self.eval(&t.cond)? {
            Value::Bool(true) => {}
            Value::Bool(false) => return Ok(Tv::No),
            Value::Int(_) => return Err(ExecError::Eval(EvalError::Type("condition".into()))),
        }
        self.exec(&t.cond_action)?;
        let dest = match &t.dest {
            Destination::State(p) => p.clone(),
            // Junction flows are resolved by the list rules.
            Destination::Junction(_) | Destination::End => StatePath::root(),
        };
        Ok(Tv::Fire { dest, action: t.trans_action.clone() })
    }

    fn list(&mut self, scope: &'p [Junction], ts: &'p [Transition]) -> R<Tv> {
        self.tick()?;
        let Some((t, rest)) = ts.split_first() else {
            return Ok(Tv::End);
        };
        match self.transition(t)? {
            Tv::No | Tv::End => {
                if rest.is_empty() {
                    Ok(Tv::No)
                } else {
                    self.list(scope, rest)
                }
            }
            Tv::Fire { dest, action } => {
                let next: &'p [Transition] = match &t.dest {
                    Destination::State(_) => return Ok(Tv::Fire { dest, action }),
                    Destination::End => &[],
                    Destination::Junction(j) => match scope.iter().find(|x| &x.name == j) {
                        Some(x) => &x.transitions,
                        None => return Err(ExecError::Stuck(format!("junction {j} not in scope"))),
                    },
                };
                match self.list(scope, next)? {
                    Tv::Fire { dest, action: a2 } => Ok(Tv::Fire { dest, action: action.then(&a2) }),
                    Tv::End => Ok(Tv::End),
                    // Backtrack: the condition actions already executed stay.
                    Tv::No => self.list(scope, rest),
                }
            }
        }
    }

    fn outer_scope(&self, sd: &StateDef) -> &'p [Junction] {
        self.p.own_junctions(&sd.path.parent().unwrap_or_default())
    }

    fn state(&mut self, sd: &'p StateDef) -> R<Tv> {
        self.tick()?;
        let scope_o = self.outer_scope(sd);
        if let Tv::Fire { dest, action } = self.list(scope_o, &sd.outer)? {
            self.exec(&action)?;
            self.exit_comp(&sd.comp)?;
            self.exec(&sd.exit)?;
            self.cfg.active.remove(&sd.path);
            return Ok(Tv::Fire { dest, action: Action::skip() });
        }
        self.exec(&sd.during)?;
        let tv_i = self.list(&sd.junctions, &sd.inner)?;
        match self.comp(&sd.comp, tv_i)? {
            Tv::Fire { dest, action } => {
                self.exec(&action)?;
                self.exec(&sd.exit)?;
                self.cfg.active.remove(&sd.path);
                Ok(Tv::Fire { dest, action: Action::skip() })
            }
            _ => Ok(Tv::No),
        }
    }

    fn active_child(&self, comp: &'p Composition) -> Option<&'p StateDef> {
        comp.states().iter().find(|s| self.cfg.active.contains(&s.path))
    }

    fn comp(&mut self, comp: &'p Composition, ctx: Tv) -> R<Tv> {
        self.tick()?;
        match comp {
            Composition::Or(o) => {
                let s0 = self.active_child(comp);
                if let Tv::Fire { dest, action } = ctx {
                    self.exec(&action)?;
                    if let Some(s0) = s0 {
                        self.exit_state(s0)?;
                    }
                    return match self.child_towards(o, &dest) {
                        Some(s1) => {
                            self.enter_state(s1, Some(&dest))?;
                            Ok(Tv::No)
                        }
                        None => Ok(Tv::Fire { dest, action: Action::skip() }),
                    };
                }
                let Some(s0) = s0 else { return Ok(Tv::No) };
                match self.state(s0)? {
                    Tv::Fire { dest, action } => match self.child_towards(o, &dest) {
                        Some(s1) => {
                            self.exec(&action)?;
                            self.enter_state(s1, Some(&dest))?;
                            Ok(Tv::No)
                        }
                        None => Ok(Tv::Fire { dest, action }),
                    },
                    _ => Ok(Tv::No),
                }
            }
            Composition::And(a) => {
                if matches!(ctx, Tv::Fire { .. }) {
                    return Err(ExecError::Stuck(format!("flow into parallel composition {}", a.path)));
                }
                for s in &a.states {
                    if let Tv::Fire { dest, .. } = self.state(s)? {
                        return Err(ExecError::Stuck(format!("parallel state {} fired to {dest}", s.path)));
                    }
                }
                Ok(Tv::No)
            }
        }
    }

    fn child_towards(&self, o: &'p OrComp, dest: &StatePath) -> Option<&'p StateDef> {
        let name = o.path.step_towards(dest)?;
        o.states.iter().find(|s| s.name() == name)
    }

    fn enter_state(&mut self, sd: &'p StateDef, target: Option<&StatePath>) -> R<()> {
        self.tick()?;
        self.cfg.active.insert(sd.path.clone());
        self.exec(&sd.entry)?;
        self.enter_comp(&sd.comp, target, &sd.junctions)
    }

    fn enter_comp(&mut self, comp: &'p Composition, target: Option<&StatePath>, scope: &'p [Junction]) -> R<()> {
        self.tick()?;
        match comp {
            Composition::Or(o) => {
                if o.states.is_empty() {
                    return Ok(());
                }
                if let Some(t) = target {
                    if let Some(s) = self.child_towards(o, t) {
                        return self.enter_state(s, Some(t));
                    }
                }
                if o.defaults.is_empty() && o.states.len() == 1 {
                    return self.enter_state(&o.states[0], None);
                }
                match self.list(scope, &o.defaults)? {
                    Tv::Fire { dest, action } => {
                        let Some(s) = self.child_towards(o, &dest) else {
                            return Err(ExecError::Stuck(format!("default transition of {} leaves it", o.path)));
                        };
                        self.enter_state(s, Some(&dest))?;
                        self.exec(&action)
                    }
                    _ => Err(ExecError::Stuck(format!("no default transition of {} fired", describe(&o.path)))),
                }
            }
            Composition::And(a) => {
                for s in &a.states {
                    let t = target.filter(|t| s.path.contains_or_eq(t));
                    self.enter_state(s, t)?;
                }
                Ok(())
            }
        }
    }

    fn exit_state(&mut self, sd: &'p StateDef) -> R<()> {
        self.tick()?;
        self.exit_comp(&sd.comp)?;
        self.exec(&sd.exit)?;
        self.cfg.active.remove(&sd.path);
        Ok(())
    }

    fn exit_comp(&mut self, comp: &'p Composition) -> R<()> {
        self.tick()?;
        match comp {
            Composition::Or(_) => match self.active_child(comp) {
                Some(s) => self.exit_state(s),
                None => Ok(()),
            },
            Composition::And(a) => {
                for s in a.states.iter().rev() {
                    self.exit_state(s)?;
                }
                Ok(())
            }
        }
    }
}

fn describe(p: &StatePath) -> String {
    if p.is_empty() { "the root".into() } else { p.to_string() }
}

/// One macro-step. An uninitialized configuration is initialized (the event
/// is ignored); otherwise the root composition reacts to `event`. `None`
/// stands for the empty event, which enables every transition.
pub fn sos_step(p: &Program, cfg: &Configuration, event: Option<&str>) -> Result<Configuration, ExecError> {
    sos_step_with_budget(p, cfg, event, DEFAULT_STEP_BUDGET)
}

pub fn sos_step_with_budget(
    p: &Program,
    cfg: &Configuration,
    event: Option<&str>,
    budget: usize,
) -> Result<Configuration, ExecError> {
    if let Some(e) = event {
        if !p.events.iter().any(|x| x == e) {
            return Err(ExecError::UnknownEvent(e.to_string()));
        }
    }
    let ev = event.and_then(|e| p.events.iter().find(|x| *x == e)).map(String::as_str);
    let mut it = Interp { p, event: None, cfg: cfg.clone(), budget, used: 0 };
    if cfg.is_initialized() {
        it.event = ev;
        if let Tv::Fire { dest, .. } = it.comp(&p.root, Tv::No)? {
            return Err(ExecError::Stuck(format!("transition to {dest} escaped the root")));
        }
    } else {
        it.enter_comp(&p.root, None, &p.junctions)?;
    }
    Ok(it.cfg)
}

/// Initializes from `env` and reacts to each event in turn. The result has
/// one configuration per step, starting with the initialized one.
pub fn run_trace_from(p: &Program, env: Env, events: &[String]) -> Result<Vec<Configuration>, ExecError> {
    let mut cfg = sos_step(p, &Configuration::initial(env), None)?;
    let mut out = vec![cfg.clone()];
    for e in events {
        cfg = sos_step(p, &cfg, Some(e))?;
        out.push(cfg.clone());
    }
    Ok(out)
}

pub fn run_trace(p: &Program, events: &[String]) -> Result<Vec<Configuration>, ExecError> {
    run_trace_from(p, p.initial_values(), events)
}

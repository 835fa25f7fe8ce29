use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::encode::{ctrl_name, data_name, event_name};
use super::solver::Model;
use crate::ast::StatePath;
use crate::concrete::Env;
use crate::expr::{Expr, Value};
use crate::sts::{show_cp, ControlPoint, Sts};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CeStep {
    pub step: usize,
    /// Event consumed to reach this step. `None` for the uninitialized
    /// step 0 and for initialization.
    pub event: Option<String>,
    #[serde(rename = "activeStates", serialize_with = "ser_cp")]
    pub active: ControlPoint,
    pub vars: Env,
}

fn ser_cp<S: serde::Serializer>(cp: &ControlPoint, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(cp.iter().map(|p| p.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub depth: usize,
    pub steps: Vec<CeStep>,
    #[serde(rename = "violatedAtStep")]
    pub violated_at: usize,
}

impl Counterexample {
    /// Events to feed the concrete interpreter after initialization.
    pub fn events(&self) -> Vec<String> {
        self.steps.iter().skip(2).filter_map(|s| s.event.clone()).collect()
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            match (&s.event, s.step) {
                (_, 0) => {}
                (None, _) => writeln!(f, "  --init-->")?,
                (Some(e), _) => writeln!(f, "  --{e}-->")?,
            }
            let vals: Vec<String> = s.vars.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let mark = if s.step == self.violated_at { "  <- violated" } else { "" };
            writeln!(f, "[{}] {} {}{mark}", s.step, show_cp(&s.active), vals.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("model has no value for {0}")]
    Missing(String),
    #[error("model value of {0} has the wrong sort")]
    Sort(String),
    #[error("step {0} has {1} events present")]
    Events(usize, usize),
    #[error("no step of the model violates the property")]
    NoViolation,
    #[error("property cannot be evaluated: {0}")]
    Eval(String),
}

fn lookup<'m>(model: &'m Model, name: &str) -> Result<&'m Value, ExtractError> {
    model.get(name).ok_or_else(|| ExtractError::Missing(name.to_string()))
}

fn holds(prop: &Expr<String>, step: &CeStep) -> Result<bool, ExtractError> {
    let v = prop
        .eval(&|v: &String| step.vars.get(v).cloned(), &|s: &StatePath| Some(step.active.contains(s)))
        .map_err(|e| ExtractError::Eval(e.to_string()))?;
    v.as_bool().ok_or_else(|| ExtractError::Eval("property is not boolean".into()))
}

/// Decodes a model of a depth-`k` query into a trace and locates the
/// earliest step violating `prop`.
pub fn extract_counterexample(model: &Model, sts: &Sts, prop: &Expr<String>, k: usize) -> Result<Counterexample, ExtractError> {
    let mut steps = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let mut vars = Env::new();
        for (v, sort) in &sts.vars {
            let name = data_name(v, i);
            let val = lookup(model, &name)?;
            if val.sort() != *sort {
                return Err(ExtractError::Sort(name));
            }
            vars.insert(v.clone(), val.clone());
        }
        let mut active = ControlPoint::new();
        for s in &sts.states {
            let name = ctrl_name(s, i);
            match lookup(model, &name)?.as_bool() {
                Some(true) => {
                    active.insert(s.clone());
                }
                Some(false) => {}
                None => return Err(ExtractError::Sort(name)),
            }
        }
        let event = if i >= 2 {
            let mut present = Vec::new();
            for e in &sts.events {
                let name = event_name(e, i - 1);
                match lookup(model, &name)?.as_bool() {
                    Some(true) => present.push(e.clone()),
                    Some(false) => {}
                    None => return Err(ExtractError::Sort(name)),
                }
            }
            if present.len() != 1 {
                return Err(ExtractError::Events(i - 1, present.len()));
            }
            present.pop()
        } else {
            None
        };
        steps.push(CeStep { step: i, event, active, vars });
    }
    let mut violated_at = None;
    for s in &steps {
        if !holds(prop, s)? {
            violated_at = Some(s.step);
            break;
        }
    }
    let violated_at = violated_at.ok_or(ExtractError::NoViolation)?;
    Ok(Counterexample { depth: k, steps, violated_at })
}

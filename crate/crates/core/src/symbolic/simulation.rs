use serde::Serialize;

use super::engine::{ssos_step_with, SymOptions};
use super::{beta_interpret, eval_pc, SymConfig};
use crate::ast::Program;
use crate::concrete::{sos_step, Configuration, Env};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    /// Steps compared, counting initialization.
    pub steps: usize,
    pub divergence: Option<String>,
}

impl SimulationReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Runs the concrete and the symbolic engine side by side from valuation
/// `d0`. At every step exactly one symbolic successor must have its new
/// conjuncts satisfied by `d0`, and that successor must agree with the
/// concrete configuration on active states and, through `beta_interpret`,
/// on every variable.
pub fn check_simulation(p: &Program, events: &[String], d0: &Env) -> SimulationReport {
    check_simulation_with(p, events, d0, SymOptions::default())
}

pub fn check_simulation_with(p: &Program, events: &[String], d0: &Env, opts: SymOptions) -> SimulationReport {
    let mut cfg = Configuration::initial(d0.clone());
    let mut sc = SymConfig::initial(p);
    let fail = |steps: usize, msg: String| SimulationReport { steps, divergence: Some(msg) };
    for step in 0..=events.len() {
        let ev = if step == 0 { None } else { Some(events[step - 1].as_str()) };
        let concrete = sos_step(p, &cfg, ev);
        let symbolic = ssos_step_with(p, &sc, ev, opts);
        let (next_cfg, succs) = match (concrete, symbolic) {
            (Ok(c), Ok(s)) => (c, s),
            // Both engines rejecting the step is agreement.
            (Err(_), Err(_)) => return SimulationReport { steps: step, divergence: None },
            (Err(e), Ok(_)) => return fail(step, format!("step {step}: only the concrete engine failed: {e}")),
            (Ok(_), Err(e)) => return fail(step, format!("step {step}: only the symbolic engine failed: {e}")),
        };
        let base = sc.pc.0.len();
        let mut selected = Vec::new();
        for s in succs {
            match eval_pc(&s.config.pc.0[base..], d0) {
                Ok(true) => selected.push(s),
                Ok(false) => {}
                Err(e) => return fail(step, format!("step {step}: path condition not evaluable: {e}")),
            }
        }
        if selected.len() != 1 {
            return fail(step, format!("step {step}: {} symbolic successors satisfied by the valuation", selected.len()));
        }
        let chosen = selected.pop().expect("one successor").config;
        if chosen.active != next_cfg.active {
            return fail(
                step,
                format!("step {step}: active states differ: symbolic {:?}, concrete {:?}", chosen.active, next_cfg.active),
            );
        }
        match beta_interpret(&chosen.delta, d0) {
            Ok(env) if env == next_cfg.env => {}
            Ok(env) => return fail(step, format!("step {step}: valuations differ: symbolic {env:?}, concrete {:?}", next_cfg.env)),
            Err(e) => return fail(step, format!("step {step}: symbolic environment not evaluable: {e}")),
        }
        cfg = next_cfg;
        sc = chosen;
    }
    SimulationReport { steps: events.len() + 1, divergence: None }
}

//! Incremental bounded model checking of invariants.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Program, StatePath};
use crate::concrete::run_trace;
use crate::expr::Expr;
use crate::smt::{
    extract_counterexample, prune_infeasible, solve_fresh, Counterexample, EncodeError, Encoder, ExtractError,
    SmtScript, SolverConfig, SolverError, SolverSession, SolverVerdict,
};
use crate::sts::{build_sts, show_cp, Sts};
use crate::symbolic::SymError;
use crate::validate::validate_property;

pub const DEFAULT_KMAX: usize = 50;

#[derive(Debug, Clone)]
pub struct BmcOptions {
    pub kmax: usize,
    /// Keep one solver session and extend the path with push/pop. When off
    /// every depth is solved from a freshly generated script.
    pub incremental: bool,
    /// Assert the violation at any step up to the depth rather than only at
    /// the newest step.
    pub full_disjunction: bool,
    pub ssa: bool,
    pub prune_infeasible: bool,
    pub solver: SolverConfig,
    /// Directory receiving one script per depth.
    pub emit_smt: Option<PathBuf>,
}

impl Default for BmcOptions {
    fn default() -> Self {
        BmcOptions {
            kmax: DEFAULT_KMAX,
            incremental: true,
            full_disjunction: false,
            ssa: true,
            prune_infeasible: false,
            solver: SolverConfig::default(),
            emit_smt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum Verdict {
    Violated { counterexample: Counterexample, depth: usize },
    BoundedSafe { kmax: usize },
    Unknown { reason: String, depth: usize },
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::BoundedSafe { .. } => 0,
            Verdict::Violated { .. } => 1,
            Verdict::Unknown { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthResult {
    pub depth: usize,
    pub seconds: f64,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub mode: String,
    pub transitions: usize,
    pub control_points: usize,
    pub derive_seconds: f64,
    pub depths: Vec<DepthResult>,
    pub total_seconds: f64,
}

#[derive(Debug, Error)]
pub enum BmcError {
    #[error("invalid property: {0}")]
    Property(String),
    #[error("derivation failed: {0}")]
    Derive(#[from] SymError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cannot decode counterexample: {0}")]
    Extract(#[from] ExtractError),
    #[error("counterexample does not replay ({diff}); script: {}", script.display())]
    Replay { diff: String, script: PathBuf },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub ok: bool,
    /// First disagreement between the counterexample and the interpreter.
    pub diff: Option<String>,
}

/// Replays the counterexample's events on the concrete interpreter. The
/// trace must reproduce every step and first violate `prop` at the
/// reported step.
pub fn replay_validate(ce: &Counterexample, p: &Program, prop: &Expr<String>) -> ReplayReport {
    let fail = |d: String| ReplayReport { ok: false, diff: Some(d) };
    if ce.steps.len() != ce.depth + 1 || ce.violated_at > ce.depth {
        return fail(format!("{} steps for depth {}", ce.steps.len(), ce.depth));
    }
    let first = &ce.steps[0];
    if !first.active.is_empty() || first.vars != p.initial_values() {
        return fail("step 0 is not the uninitialized configuration".into());
    }
    for s in &ce.steps[2.min(ce.steps.len())..] {
        if s.event.is_none() {
            return fail(format!("step {} has no event", s.step));
        }
    }
    let trace = match run_trace(p, &ce.events()) {
        Ok(t) => t,
        Err(e) => return fail(format!("interpreter rejected the events: {e}")),
    };
    for (s, cfg) in ce.steps.iter().skip(1).zip(&trace) {
        if s.active != cfg.active {
            return fail(format!("step {}: active {} but interpreter reached {}", s.step, show_cp(&s.active), show_cp(&cfg.active)));
        }
        if s.vars != cfg.env {
            let mut diffs = Vec::new();
            for (k, v) in &s.vars {
                match cfg.env.get(k) {
                    Some(w) if w == v => {}
                    Some(w) => diffs.push(format!("{k}={v} vs {w}")),
                    None => diffs.push(format!("{k} missing")),
                }
            }
            return fail(format!("step {}: {}", s.step, diffs.join(", ")));
        }
    }
    for s in &ce.steps[..=ce.violated_at] {
        let v = prop.eval(&|x: &String| s.vars.get(x).cloned(), &|st: &StatePath| Some(s.active.contains(st)));
        let holds = match v.ok().and_then(|v| v.as_bool()) {
            Some(b) => b,
            None => return fail(format!("property not evaluable at step {}", s.step)),
        };
        if holds == (s.step == ce.violated_at) {
            let what = if holds { "holds" } else { "already fails" };
            return fail(format!("property {what} at step {}", s.step));
        }
    }
    ReplayReport { ok: true, diff: None }
}

fn property_error(p: &Program, prop: &Expr<String>) -> Option<BmcError> {
    let diags = validate_property(p, prop);
    if diags.is_empty() {
        return None;
    }
    let msgs: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
    Some(BmcError::Property(msgs.join("; ")))
}

/// Derives the transition system and checks `prop` up to `opts.kmax`.
pub fn bmc_check(p: &Program, prop: &Expr<String>, opts: &BmcOptions) -> Result<(Verdict, RunReport), BmcError> {
    if let Some(e) = property_error(p, prop) {
        return Err(e);
    }
    let start = Instant::now();
    let mut sts = build_sts(p)?;
    if opts.prune_infeasible {
        let mut s = SolverSession::start(&opts.solver)?;
        prune_infeasible(&mut sts, &mut s)?;
    }
    let derive_seconds = start.elapsed().as_secs_f64();
    let (verdict, mut report) = bmc_check_sts(p, &sts, prop, opts)?;
    report.derive_seconds = derive_seconds;
    report.total_seconds = start.elapsed().as_secs_f64();
    Ok((verdict, report))
}

fn script_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("depth_{k:04}.smt2"))
}

/// Bounded model checking over an already derived transition system.
pub fn bmc_check_sts(p: &Program, sts: &Sts, prop: &Expr<String>, opts: &BmcOptions) -> Result<(Verdict, RunReport), BmcError> {
    if let Some(e) = property_error(p, prop) {
        return Err(e);
    }
    let start = Instant::now();
    let mut enc = Encoder::new(sts);
    enc.ssa = opts.ssa;
    enc.check_property(prop)?;
    if let Some(dir) = &opts.emit_smt {
        fs::create_dir_all(dir)?;
    }
    let mut report = RunReport {
        mode: if opts.incremental { "incremental" } else { "fresh" }.into(),
        transitions: sts.transitions.len(),
        control_points: sts.control_points.len(),
        derive_seconds: 0.0,
        depths: Vec::new(),
        total_seconds: 0.0,
    };
    let mut session = None;
    if opts.incremental {
        let mut s = SolverSession::start(&opts.solver)?;
        s.command(&format!("(set-logic {})", enc.logic(prop)))?;
        s.commands(&enc.declare_state(0))?;
        s.commands(&enc.init())?;
        session = Some(s);
    }
    for k in 0..=opts.kmax {
        let t = Instant::now();
        let verdict = match session.as_mut() {
            Some(s) => {
                if k > 0 {
                    s.commands(&enc.declare_state(k))?;
                    s.commands(&enc.transition(k - 1))?;
                }
                s.push()?;
                let violation = if opts.full_disjunction {
                    enc.violation_upto(prop, k)
                } else {
                    format!("(not {})", enc.property(prop, k))
                };
                s.command(&format!("(assert {violation})"))?;
                let v = s.check_and_model(&enc.model_names(k))?;
                if s.is_alive() {
                    s.pop()?;
                }
                v
            }
            None => solve_fresh(&depth_script(&enc, prop, k, opts.full_disjunction), &opts.solver)?,
        };
        report.depths.push(DepthResult { depth: k, seconds: t.elapsed().as_secs_f64(), result: verdict.label().into() });
        if let Some(dir) = &opts.emit_smt {
            fs::write(script_path(dir, k), enc.query(prop, k)?.text())?;
        }
        match verdict {
            SolverVerdict::Unsat => {
                // Every path of length `k` satisfies the property at step `k`
                // from now on; later depths only need the newest step.
                if !opts.full_disjunction {
                    if let Some(s) = session.as_mut() {
                        s.command(&format!("(assert {})", enc.property(prop, k)))?;
                    }
                }
            }
            SolverVerdict::Unknown(reason) => {
                report.total_seconds = start.elapsed().as_secs_f64();
                return Ok((Verdict::Unknown { reason, depth: k }, report));
            }
            SolverVerdict::Sat(model) => {
                let ce = extract_counterexample(&model, sts, prop, k)?;
                let replay = replay_validate(&ce, p, prop);
                if !replay.ok {
                    let dir = opts.emit_smt.clone().unwrap_or_else(std::env::temp_dir);
                    let path = dir.join(format!("{}_replay_failure_depth_{k}.smt2", sts.program));
                    fs::write(&path, enc.query(prop, k)?.text())?;
                    return Err(BmcError::Replay { diff: replay.diff.unwrap_or_default(), script: path });
                }
                report.total_seconds = start.elapsed().as_secs_f64();
                return Ok((Verdict::Violated { counterexample: ce, depth: k }, report));
            }
        }
    }
    report.total_seconds = start.elapsed().as_secs_f64();
    Ok((Verdict::BoundedSafe { kmax: opts.kmax }, report))
}

fn depth_script(enc: &Encoder, prop: &Expr<String>, k: usize, full: bool) -> SmtScript {
    let mut s = enc.query(prop, k).expect("property checked before the loop");
    if !full {
        s.commands.pop();
        s.commands.extend((0..k).map(|i| format!("(assert {})", enc.property(prop, i))));
        s.commands.push(format!("(assert (not {}))", enc.property(prop, k)));
    }
    s
}

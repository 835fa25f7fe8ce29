use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::encode::{data_name, guard_term, smt_sort};
use super::solver::{SatResult, SolverError, SolverSession};
use crate::sts::{show_cp, ControlPoint, Sts};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObligationKind {
    /// Guards of transitions `a` and `b` overlap.
    Disjoint { a: usize, b: usize },
    /// Guards of the group cover every valuation.
    Coverage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Holds,
    Fails,
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Obligation {
    pub source: String,
    pub event: Option<String>,
    pub kind: ObligationKind,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PartitionReport {
    pub obligations: Vec<Obligation>,
}

impl PartitionReport {
    pub fn passed(&self) -> bool {
        self.obligations.iter().all(|o| o.outcome == Outcome::Holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Obligation> {
        self.obligations.iter().filter(|o| o.outcome != Outcome::Holds)
    }
}

fn declare_vars(sts: &Sts, session: &mut SolverSession) -> Result<(), SolverError> {
    for (v, s) in &sts.vars {
        session.command(&format!("(declare-const {} {})", data_name(v, 0), smt_sort(*s)))?;
    }
    Ok(())
}

/// `Holds` when `assertion` is unsatisfiable.
fn unsat(session: &mut SolverSession, assertion: &str) -> Result<Outcome, SolverError> {
    session.push()?;
    session.command(&format!("(assert {assertion})"))?;
    let r = session.check_sat()?;
    if session.is_alive() {
        session.pop()?;
    }
    Ok(match r {
        SatResult::Unsat => Outcome::Holds,
        SatResult::Sat => Outcome::Fails,
        SatResult::Unknown(why) => Outcome::Unknown(why),
    })
}

/// For every source control point and event, the guards of the derived
/// transitions must be pairwise exclusive and jointly exhaustive.
pub fn check_partition(sts: &Sts, session: &mut SolverSession) -> Result<PartitionReport, SolverError> {
    session.push()?;
    declare_vars(sts, session)?;
    let mut report = PartitionReport::default();
    for ((src, event), group) in sts.groups() {
        let guards: Vec<String> = group.iter().map(|t| guard_term(t)).collect();
        let source = show_cp(&src);
        for i in 0..group.len() {
            for j in i + 1..group.len() {
                let outcome = if session.is_alive() {
                    unsat(session, &format!("(and {} {})", guards[i], guards[j]))?
                } else {
                    Outcome::Unknown("solver exited".into())
                };
                report.obligations.push(Obligation {
                    source: source.clone(),
                    event: event.clone(),
                    kind: ObligationKind::Disjoint { a: group[i].id, b: group[j].id },
                    outcome,
                });
            }
        }
        let cover = format!("(not (or false {}))", guards.join(" "));
        let outcome = if session.is_alive() { unsat(session, &cover)? } else { Outcome::Unknown("solver exited".into()) };
        report.obligations.push(Obligation { source, event, kind: ObligationKind::Coverage, outcome });
    }
    if session.is_alive() {
        session.pop()?;
    }
    Ok(report)
}

/// Drops transitions whose guard the solver proves unsatisfiable, then
/// everything no longer reachable from the uninitialized point. Returns the
/// number of transitions removed.
pub fn prune_infeasible(sts: &mut Sts, session: &mut SolverSession) -> Result<usize, SolverError> {
    session.push()?;
    declare_vars(sts, session)?;
    let before = sts.transitions.len();
    let mut keep = Vec::with_capacity(before);
    for t in std::mem::take(&mut sts.transitions) {
        let feasible = t.guard.is_empty() || !session.is_alive() || unsat(session, &guard_term(&t))? != Outcome::Holds;
        if feasible {
            keep.push(t);
        }
    }
    if session.is_alive() {
        session.pop()?;
    }
    let mut reach: BTreeSet<ControlPoint> = BTreeSet::new();
    let mut queue = VecDeque::from([ControlPoint::new()]);
    reach.insert(ControlPoint::new());
    while let Some(cp) = queue.pop_front() {
        for t in keep.iter().filter(|t| t.src == cp) {
            if reach.insert(t.dst.clone()) {
                queue.push_back(t.dst.clone());
            }
        }
    }
    keep.retain(|t| reach.contains(&t.src));
    for (i, t) in keep.iter_mut().enumerate() {
        t.id = i;
    }
    sts.control_points.retain(|cp| reach.contains(cp));
    sts.transitions = keep;
    Ok(before - sts.transitions.len())
}

use thiserror::Error;

use super::derivation::{Derivation, Rule};
use super::{sym_eval, Effect, SymConfig};
use crate::ast::*;
use crate::concrete::DEFAULT_STEP_BUDGET;
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error("symbolic execution is stuck: {0}")]
    Stuck(String),
    #[error("step exceeded {0} rule applications")]
    Diverged(usize),
    #[error("undeclared event {0}")]
    UnknownEvent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymOptions {
    /// Upper bound on rule applications explored for one step.
    pub budget: usize,
    /// Fault injection for testing the simulation check: the no-fire branch
    /// assumes the condition instead of its negation.
    #[doc(hidden)]
    pub mutate_no_fire: bool,
}

impl Default for SymOptions {
    fn default() -> Self {
        SymOptions { budget: DEFAULT_STEP_BUDGET, mutate_no_fire: false }
    }
}

/// One feasible outcome of a symbolic step.
#[derive(Debug, Clone)]
pub struct Successor {
    pub config: SymConfig,
    pub derivation: Derivation,
}

type R<T> = Result<T, SymError>;
type Branches<T> = Vec<(SymConfig, T, Derivation)>;

struct Engine<'p> {
    p: &'p Program,
    event: Option<&'p str>,
    opts: SymOptions,
    used: usize,
}

fn ev_text(e: Option<&str>) -> &str {
    e.unwrap_or("\u{2205}")
}

impl<'p> Engine<'p> {
    fn tick(&mut self) -> R<()> {
        self.used += 1;
        if self.used > self.opts.budget {
            Err(SymError::Diverged(self.opts.budget))
        } else {
            Ok(())
        }
    }

    fn exec(&self, st: &mut SymConfig, a: &Action) {
        for asg in &a.0 {
            let v = sym_eval(&asg.value, &st.delta);
            st.delta.0.insert(asg.var.clone(), v);
            st.effects.push(Effect::Assign(asg.var.clone(), asg.value.clone()));
        }
    }

    /// Adds `cond` (already in program variables) to the path condition.
    /// Returns false when the conjunct folds to false.
    fn assume(&self, st: &mut SymConfig, cond: Expr<String>) -> bool {
        let c = sym_eval(&cond, &st.delta);
        if c.is_false() {
            return false;
        }
        if !c.is_true() {
            st.pc.0.push(c);
            st.effects.push(Effect::Assume(cond));
        }
        true
    }

    fn transition(&mut self, t: &Transition, st: SymConfig) -> R<Branches<Tv>> {
        self.tick()?;
        let ev = ev_text(self.event);
        if !crate::concrete::enabled(&t.event, self.event) {
            let d = Derivation::leaf(Rule::TNotEnabled, format!("{ev} \u{22a2} {t} \u{2192} No"));
            return Ok(vec![(st, Tv::No, d)]);
        }
        let mut out = Vec::new();
        let mut fire = st.clone();
        if self.assume(&mut fire, t.cond.clone()) {
            self.exec(&mut fire, &t.cond_action);
            let dest = match &t.dest {
                Destination::State(p) => p.clone(),
                Destination::Junction(_) | Destination::End => StatePath::root(),
            };
            let tv = Tv::Fire { dest, action: t.trans_action.clone() };
            let d = Derivation::leaf(Rule::TFire, format!("{ev} \u{22a2} {t} \u{2192} {tv}  [{}]", t.cond));
            out.push((fire, tv, d));
        }
        let mut nofire = st;
        let neg = if self.opts.mutate_no_fire { t.cond.clone() } else { Expr::not(t.cond.clone()) };
        let neg_text = neg.to_string();
        if self.assume(&mut nofire, neg) {
            let d = Derivation::leaf(Rule::TNoFire, format!("{ev} \u{22a2} {t} \u{2192} No  [{neg_text}]"));
            out.push((nofire, Tv::No, d));
        }
        Ok(out)
    }

    fn list(&mut self, scope: &'p [Junction], ts: &'p [Transition], label: &str, st: SymConfig) -> R<Branches<Tv>> {
        self.tick()?;
        let Some((t, rest)) = ts.split_first() else {
            return Ok(vec![(st, Tv::End, Derivation::leaf(Rule::ListEmpty, format!("{label}: \u{2205} \u{2192} End")))]);
        };
        let concl = |tv: &Tv| format!("{label} \u{2192} {tv}");
        let mut out = Vec::new();
        for (st1, tv, d1) in self.transition(t, st)? {
            match tv {
                Tv::No | Tv::End => {
                    if rest.is_empty() {
                        out.push((st1, Tv::No, Derivation::node(Rule::ListNoLast, concl(&Tv::No), vec![d1])));
                    } else {
                        for (st2, tv2, d2) in self.list(scope, rest, label, st1)? {
                            let c = concl(&tv2);
                            out.push((st2, tv2, Derivation::node(Rule::ListNo, c, vec![d1.clone(), d2])));
                        }
                    }
                }
                Tv::Fire { dest, action } => {
                    let (next, jlabel): (&'p [Transition], String) = match &t.dest {
                        Destination::State(_) => {
                            let tv = Tv::Fire { dest, action };
                            let c = concl(&tv);
                            out.push((st1, tv, Derivation::node(Rule::ListFire, c, vec![d1])));
                            continue;
                        }
                        Destination::End => (&[], "end".to_string()),
                        Destination::Junction(j) => match scope.iter().find(|x| &x.name == j) {
                            Some(x) => (&x.transitions, format!("junction {j}")),
                            None => return Err(SymError::Stuck(format!("junction {j} not in scope"))),
                        },
                    };
                    for (st2, tv2, d2) in self.list(scope, next, &jlabel, st1)? {
                        match tv2 {
                            Tv::Fire { dest: d, action: a2 } => {
                                let tv = Tv::Fire { dest: d, action: action.then(&a2) };
                                let c = concl(&tv);
                                out.push((st2, tv, Derivation::node(Rule::ListFireJunctionFire, c, vec![d1.clone(), d2])));
                            }
                            Tv::End => {
                                out.push((st2, Tv::End, Derivation::node(Rule::ListEnd, concl(&Tv::End), vec![d1.clone(), d2])));
                            }
                            Tv::No => {
                                for (st3, tv3, d3) in self.list(scope, rest, label, st2)? {
                                    let c = concl(&tv3);
                                    out.push((st3, tv3, Derivation::node(Rule::ListFireJunctionNo, c, vec![d1.clone(), d2.clone(), d3])));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn state(&mut self, sd: &'p StateDef, st: SymConfig) -> R<Branches<Tv>> {
        self.tick()?;
        let ev = ev_text(self.event);
        let scope_o = self.p.own_junctions(&sd.path.parent().unwrap_or_default());
        let mut out = Vec::new();
        for (mut st1, tv_o, d_o) in self.list(scope_o, &sd.outer, &format!("outer({})", sd.path), st)? {
            if let Tv::Fire { dest, action } = tv_o {
                self.exec(&mut st1, &action);
                let (mut st2, dx) = self.exit_comp(&sd.comp, st1)?;
                self.exec(&mut st2, &sd.exit);
                st2.active.remove(&sd.path);
                let tv = Tv::Fire { dest, action: Action::skip() };
                let d = Derivation::node(Rule::SdFire, format!("{ev} \u{22a2} {} \u{2192} {tv}", sd.path), vec![d_o, dx]);
                out.push((st2, tv, d));
                continue;
            }
            self.exec(&mut st1, &sd.during);
            for (st2, tv_i, d_i) in self.list(&sd.junctions, &sd.inner, &format!("inner({})", sd.path), st1)? {
                for (mut st3, tv_c, d_c) in self.comp(&sd.comp, tv_i, st2)? {
                    let prem = vec![d_o.clone(), d_i.clone(), d_c];
                    match tv_c {
                        Tv::Fire { dest, action } => {
                            self.exec(&mut st3, &action);
                            self.exec(&mut st3, &sd.exit);
                            st3.active.remove(&sd.path);
                            let tv = Tv::Fire { dest, action: Action::skip() };
                            let d = Derivation::node(Rule::SdIntFire, format!("{ev} \u{22a2} {} \u{2192} {tv}", sd.path), prem);
                            out.push((st3, tv, d));
                        }
                        _ => {
                            let d = Derivation::node(Rule::SdNo, format!("{ev} \u{22a2} {} \u{2192} No", sd.path), prem);
                            out.push((st3, Tv::No, d));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn active_child(&self, comp: &'p Composition, st: &SymConfig) -> Option<&'p StateDef> {
        comp.states().iter().find(|s| st.active.contains(&s.path))
    }

    fn child_towards(o: &'p OrComp, dest: &StatePath) -> Option<&'p StateDef> {
        let name = o.path.step_towards(dest)?;
        o.states.iter().find(|s| s.name() == name)
    }

    fn comp(&mut self, comp: &'p Composition, ctx: Tv, st: SymConfig) -> R<Branches<Tv>> {
        self.tick()?;
        let ev = ev_text(self.event);
        let path = comp.path();
        let concl = |tv: &Tv| format!("{ev}, {ctx} \u{22a2} Or({path}) \u{2192} {tv}");
        match comp {
            Composition::Or(o) => {
                let s0 = self.active_child(comp, &st);
                if let Tv::Fire { dest, action } = &ctx {
                    let mut st1 = st;
                    self.exec(&mut st1, action);
                    let mut prem = Vec::new();
                    if let Some(s0) = s0 {
                        let (st2, dx) = self.exit_state(s0, st1)?;
                        st1 = st2;
                        prem.push(dx);
                    }
                    let mut out = Vec::new();
                    match Self::child_towards(o, dest) {
                        Some(s1) => {
                            for (st2, (), de) in self.enter_state(s1, Some(dest), st1)? {
                                let mut p2 = prem.clone();
                                p2.push(de);
                                out.push((st2, Tv::No, Derivation::node(Rule::OrExtFire, concl(&Tv::No), p2)));
                            }
                        }
                        None => {
                            let tv = Tv::Fire { dest: dest.clone(), action: Action::skip() };
                            let c = concl(&tv);
                            out.push((st1, tv, Derivation::node(Rule::OrExtFireOut, c, prem)));
                        }
                    }
                    return Ok(out);
                }
                let Some(s0) = s0 else {
                    return Ok(vec![(st, Tv::No, Derivation::leaf(Rule::OrNo, concl(&Tv::No)))]);
                };
                let mut out = Vec::new();
                for (mut st1, tv0, ds) in self.state(s0, st)? {
                    match tv0 {
                        Tv::Fire { dest, action } => match Self::child_towards(o, &dest) {
                            Some(s1) => {
                                self.exec(&mut st1, &action);
                                for (st2, (), de) in self.enter_state(s1, Some(&dest), st1)? {
                                    out.push((st2, Tv::No, Derivation::node(Rule::OrIntFire, concl(&Tv::No), vec![ds.clone(), de])));
                                }
                            }
                            None => {
                                let tv = Tv::Fire { dest, action };
                                let c = concl(&tv);
                                out.push((st1, tv, Derivation::node(Rule::OrFire, c, vec![ds])));
                            }
                        },
                        _ => out.push((st1, Tv::No, Derivation::node(Rule::OrNo, concl(&Tv::No), vec![ds]))),
                    }
                }
                Ok(out)
            }
            Composition::And(a) => {
                if matches!(ctx, Tv::Fire { .. }) {
                    return Err(SymError::Stuck(format!("flow into parallel composition {}", a.path)));
                }
                let mut acc: Vec<(SymConfig, Vec<Derivation>)> = vec![(st, Vec::new())];
                for s in &a.states {
                    let mut next = Vec::new();
                    for (st0, ds) in acc {
                        for (st1, tv, d) in self.state(s, st0)? {
                            if let Tv::Fire { dest, .. } = tv {
                                return Err(SymError::Stuck(format!("parallel state {} fired to {dest}", s.path)));
                            }
                            let mut ds1 = ds.clone();
                            ds1.push(d);
                            next.push((st1, ds1));
                        }
                    }
                    acc = next;
                }
                Ok(acc
                    .into_iter()
                    .map(|(st, ds)| {
                        let c = format!("{ev} \u{22a2} And({}) \u{2192} No", a.path);
                        (st, Tv::No, Derivation::node(Rule::And, c, ds))
                    })
                    .collect())
            }
        }
    }

    fn enter_state(&mut self, sd: &'p StateDef, target: Option<&StatePath>, mut st: SymConfig) -> R<Branches<()>> {
        self.tick()?;
        st.active.insert(sd.path.clone());
        self.exec(&mut st, &sd.entry);
        let mut out = Vec::new();
        for (st1, (), dc) in self.enter_comp(&sd.comp, target, &sd.junctions, st)? {
            out.push((st1, (), Derivation::node(Rule::SdInit, format!("\u{21d1} {}", sd.path), vec![dc])));
        }
        Ok(out)
    }

    fn enter_comp(
        &mut self,
        comp: &'p Composition,
        target: Option<&StatePath>,
        scope: &'p [Junction],
        st: SymConfig,
    ) -> R<Branches<()>> {
        self.tick()?;
        let path = comp.path();
        let concl = format!("\u{21d1} Or({path})");
        match comp {
            Composition::Or(o) => {
                if o.states.is_empty() {
                    return Ok(vec![(st, (), Derivation::leaf(Rule::OrInitNoState, concl))]);
                }
                let direct = target.and_then(|t| Self::child_towards(o, t).map(|s| (s, t)));
                let direct = direct.or_else(|| (o.defaults.is_empty() && o.states.len() == 1).then(|| (&o.states[0], path)));
                if let Some((s, t)) = direct {
                    let t = (t != path).then_some(t);
                    return Ok(self
                        .enter_state(s, t, st)?
                        .into_iter()
                        .map(|(st1, (), de)| (st1, (), Derivation::node(Rule::OrInit, concl.clone(), vec![de])))
                        .collect());
                }
                let mut out = Vec::new();
                for (st1, tv, dt) in self.list(scope, &o.defaults, &format!("defaults({path})"), st)? {
                    let Tv::Fire { dest, action } = tv else {
                        return Err(SymError::Stuck(format!("no default transition of {} fired", show(path))));
                    };
                    let Some(s) = Self::child_towards(o, &dest) else {
                        return Err(SymError::Stuck(format!("default transition of {} leaves it", show(path))));
                    };
                    for (mut st2, (), de) in self.enter_state(s, Some(&dest), st1)? {
                        self.exec(&mut st2, &action);
                        out.push((st2, (), Derivation::node(Rule::OrInitEmptyPath, concl.clone(), vec![dt.clone(), de])));
                    }
                }
                Ok(out)
            }
            Composition::And(a) => {
                let mut acc: Vec<(SymConfig, Vec<Derivation>)> = vec![(st, Vec::new())];
                for s in &a.states {
                    let t = target.filter(|t| s.path.contains_or_eq(t));
                    let mut next = Vec::new();
                    for (st0, ds) in acc {
                        for (st1, (), d) in self.enter_state(s, t, st0)? {
                            let mut ds1 = ds.clone();
                            ds1.push(d);
                            next.push((st1, ds1));
                        }
                    }
                    acc = next;
                }
                let c = format!("\u{21d1} And({path})");
                Ok(acc.into_iter().map(|(st, ds)| (st, (), Derivation::node(Rule::AndInit, c.clone(), ds))).collect())
            }
        }
    }

    fn exit_state(&mut self, sd: &'p StateDef, st: SymConfig) -> R<(SymConfig, Derivation)> {
        self.tick()?;
        let (mut st1, dc) = self.exit_comp(&sd.comp, st)?;
        self.exec(&mut st1, &sd.exit);
        st1.active.remove(&sd.path);
        Ok((st1, Derivation::node(Rule::SdExit, format!("\u{21d3} {}", sd.path), vec![dc])))
    }

    fn exit_comp(&mut self, comp: &'p Composition, st: SymConfig) -> R<(SymConfig, Derivation)> {
        self.tick()?;
        match comp {
            Composition::Or(o) => {
                let concl = format!("\u{21d3} Or({})", o.path);
                match self.active_child(comp, &st) {
                    Some(s) => {
                        let (st1, d) = self.exit_state(s, st)?;
                        Ok((st1, Derivation::node(Rule::OrExit, concl, vec![d])))
                    }
                    None => Ok((st, Derivation::leaf(Rule::OrExit, concl))),
                }
            }
            Composition::And(a) => {
                let mut st = st;
                let mut ds = Vec::new();
                for s in a.states.iter().rev() {
                    let (st1, d) = self.exit_state(s, st)?;
                    st = st1;
                    ds.push(d);
                }
                Ok((st, Derivation::node(Rule::AndExit, format!("\u{21d3} And({})", a.path), ds)))
            }
        }
    }
}

fn show(p: &StatePath) -> String {
    if p.is_empty() { "the root".into() } else { p.to_string() }
}

/// All feasible successors of a symbolic configuration for one macro-step.
/// An uninitialized configuration is initialized with the empty event.
pub fn ssos_step(p: &Program, sc: &SymConfig, event: Option<&str>) -> Result<Vec<Successor>, SymError> {
    ssos_step_with(p, sc, event, SymOptions::default())
}

pub fn ssos_step_with(
    p: &Program,
    sc: &SymConfig,
    event: Option<&str>,
    opts: SymOptions,
) -> Result<Vec<Successor>, SymError> {
    if let Some(e) = event {
        if !p.events.iter().any(|x| x == e) {
            return Err(SymError::UnknownEvent(e.to_string()));
        }
    }
    let ev = event.and_then(|e| p.events.iter().find(|x| *x == e)).map(String::as_str);
    let mut eng = Engine { p, event: None, opts, used: 0 };
    let out = if sc.is_initialized() {
        eng.event = ev;
        let mut out = Vec::new();
        for (st, tv, d) in eng.comp(&p.root, Tv::No, sc.clone())? {
            if let Tv::Fire { dest, .. } = tv {
                return Err(SymError::Stuck(format!("transition to {dest} escaped the root")));
            }
            out.push(Successor { config: st, derivation: d });
        }
        out
    } else {
        eng.enter_comp(&p.root, None, &p.junctions, sc.clone())?
            .into_iter()
            .map(|(st, (), d)| Successor { config: st, derivation: d })
            .collect()
    };
    Ok(out)
}

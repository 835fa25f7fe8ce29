//! Pretty-printer producing text that [`crate::parse::parse_model`] reads back
//! into an equal AST.

use std::fmt::{self, Write};

use crate::ast::*;

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "program {};", self.name)?;
        if !self.events.is_empty() {
            writeln!(out, "events {};", self.events.join(", "))?;
        }
        for v in &self.vars {
            writeln!(out, "var {}: {} = {};", v.name, v.sort, v.init)?;
        }
        let kw = if self.root.is_and() { "and" } else { "or" };
        writeln!(out, "{kw} {{")?;
        comp_body(&mut out, &self.root, 1)?;
        if !self.junctions.is_empty() {
            junctions(&mut out, &self.junctions, 1)?;
        }
        writeln!(out, "}}")?;
        f.write_str(&out)
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn comp_body(out: &mut String, comp: &Composition, level: usize) -> fmt::Result {
    if let Composition::Or(o) = comp {
        if !o.defaults.is_empty() {
            transition_block(out, "transitions", &o.defaults, level)?;
        }
    }
    for sd in comp.states() {
        state(out, sd, level)?;
    }
    Ok(())
}

fn state(out: &mut String, sd: &StateDef, level: usize) -> fmt::Result {
    indent(out, level);
    writeln!(out, "state {} {{", sd.name())?;
    for (kw, a) in [("entry", &sd.entry), ("during", &sd.during), ("exit", &sd.exit)] {
        if !a.is_skip() {
            indent(out, level + 1);
            writeln!(out, "{kw}: {a};")?;
        }
    }
    if !sd.outer.is_empty() {
        transition_block(out, "outer", &sd.outer, level + 1)?;
    }
    if !sd.inner.is_empty() {
        transition_block(out, "inner", &sd.inner, level + 1)?;
    }
    if !sd.junctions.is_empty() {
        junctions(out, &sd.junctions, level + 1)?;
    }
    if !sd.comp.is_empty_or() {
        indent(out, level + 1);
        writeln!(out, "{} {{", if sd.comp.is_and() { "and" } else { "or" })?;
        comp_body(out, &sd.comp, level + 2)?;
        indent(out, level + 1);
        writeln!(out, "}}")?;
    }
    indent(out, level);
    writeln!(out, "}}")
}

fn transition_block(out: &mut String, kw: &str, ts: &[Transition], level: usize) -> fmt::Result {
    indent(out, level);
    writeln!(out, "{kw} {{")?;
    for t in ts {
        indent(out, level + 1);
        writeln!(out, "{t}")?;
    }
    indent(out, level);
    writeln!(out, "}}")
}

fn junctions(out: &mut String, js: &[Junction], level: usize) -> fmt::Result {
    indent(out, level);
    writeln!(out, "junctions {{")?;
    for j in js {
        indent(out, level + 1);
        writeln!(out, "{}:", j.name)?;
        for t in &j.transitions {
            indent(out, level + 2);
            writeln!(out, "{t}")?;
        }
    }
    indent(out, level);
    writeln!(out, "}}")
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(e) = &self.event {
            write!(f, "on {e} ")?;
        }
        if !self.cond.is_true() {
            write!(f, "[{}] ", self.cond)?;
        }
        if !self.cond_action.is_skip() {
            write!(f, "/ {{{}}} ", self.cond_action)?;
        }
        write!(f, "-> {}", self.dest)?;
        if !self.trans_action.is_skip() {
            write!(f, " / {{{}}}", self.trans_action)?;
        }
        f.write_str(";")
    }
}

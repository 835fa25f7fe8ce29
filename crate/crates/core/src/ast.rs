//! Abstract syntax of models.
//!
//! The tree is immutable; which states are active lives separately in
//! [`crate::concrete::Configuration`] and [`crate::symbolic::SymConfig`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::expr::{Expr, Sort, Value};

/// Absolute dotted path of a state from the root composition, e.g. `Run.Running`.
/// The root composition has the empty path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StatePath(pub Vec<String>);

impl StatePath {
    pub fn root() -> Self {
        StatePath(Vec::new())
    }

    pub fn parse(s: &str) -> Self {
        if s.is_empty() {
            return StatePath::root();
        }
        StatePath(s.split('.').map(str::to_string).collect())
    }

    pub fn child(&self, name: &str) -> Self {
        let mut v = self.0.clone();
        v.push(name.to_string());
        StatePath(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn name(&self) -> &str {
        self.0.last().map(String::as_str).unwrap_or("")
    }

    pub fn parent(&self) -> Option<StatePath> {
        if self.0.is_empty() {
            None
        } else {
            Some(StatePath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// `self` is a proper prefix of `other`.
    pub fn strictly_contains(&self, other: &StatePath) -> bool {
        other.0.len() > self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn contains_or_eq(&self, other: &StatePath) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Name of the child of `self` on the way to `target`.
    pub fn step_towards<'a>(&self, target: &'a StatePath) -> Option<&'a str> {
        if self.strictly_contains(target) {
            Some(&target.0[self.0.len()])
        } else {
            None
        }
    }
}

impl fmt::Display for StatePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

impl Serialize for StatePath {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub events: Vec<String>,
    pub vars: Vec<VarDecl>,
    /// Junctions visible to the outer transitions of top-level states.
    pub junctions: Vec<Junction>,
    pub root: Composition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub sort: Sort,
    pub init: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Composition {
    Or(OrComp),
    And(AndComp),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrComp {
    pub path: StatePath,
    pub defaults: Vec<Transition>,
    pub states: Vec<StateDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AndComp {
    pub path: StatePath,
    pub states: Vec<StateDef>,
}

impl Composition {
    pub fn leaf(path: StatePath) -> Self {
        Composition::Or(OrComp { path, defaults: Vec::new(), states: Vec::new() })
    }

    pub fn path(&self) -> &StatePath {
        match self {
            Composition::Or(o) => &o.path,
            Composition::And(a) => &a.path,
        }
    }

    pub fn states(&self) -> &[StateDef] {
        match self {
            Composition::Or(o) => &o.states,
            Composition::And(a) => &a.states,
        }
    }

    pub fn is_and(&self) -> bool {
        matches!(self, Composition::And(_))
    }

    pub fn is_empty_or(&self) -> bool {
        matches!(self, Composition::Or(o) if o.states.is_empty() && o.defaults.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDef {
    pub path: StatePath,
    pub entry: Action,
    pub during: Action,
    pub exit: Action,
    pub inner: Vec<Transition>,
    pub outer: Vec<Transition>,
    pub junctions: Vec<Junction>,
    pub comp: Composition,
}

impl StateDef {
    pub fn name(&self) -> &str {
        self.path.name()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Junction {
    pub name: String,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub event: Option<String>,
    pub cond: Expr<String>,
    pub cond_action: Action,
    pub dest: Destination,
    pub trans_action: Action,
}

impl Transition {
    pub fn to(dest: Destination) -> Self {
        Transition {
            event: None,
            cond: Expr::Bool(true),
            cond_action: Action::skip(),
            dest,
            trans_action: Action::skip(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Destination {
    State(StatePath),
    Junction(String),
    /// Terminal junction: stops the flow without reaching a state.
    End,
}

impl fmt::Display for Destination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Destination::State(p) => write!(f, "{p}"),
            Destination::Junction(j) => write!(f, "{j}"),
            Destination::End => f.write_str("end"),
        }
    }
}

/// Sequence of assignments; empty means `skip`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Action(pub Vec<Assignment>);

impl Action {
    pub fn skip() -> Self {
        Action(Vec::new())
    }

    pub fn is_skip(&self) -> bool {
        self.0.is_empty()
    }

    pub fn then(&self, other: &Action) -> Action {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Action(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub var: String,
    pub value: Expr<String>,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("skip");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{} := {}", a.var, a.value)?;
        }
        Ok(())
    }
}

/// Transition value: the result of evaluating a transition, a transition
/// list or a composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tv {
    /// Fired towards `dest`; `action` is the pending transition action.
    Fire { dest: StatePath, action: Action },
    No,
    /// A junction flow ended without reaching a state.
    End,
}

impl fmt::Display for Tv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tv::Fire { dest, action } if action.is_skip() => write!(f, "Fire({dest}, \u{25c7})"),
            Tv::Fire { dest, action } => write!(f, "Fire({dest}, {action})"),
            Tv::No => f.write_str("No"),
            Tv::End => f.write_str("End"),
        }
    }
}

/// Which transition list of a state a transition came from; used to locate
/// junction scopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListKind {
    Default,
    Inner,
    Outer,
    Junction,
}

impl Program {
    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn initial_values(&self) -> BTreeMap<String, Value> {
        self.vars.iter().map(|v| (v.name.clone(), v.init.clone())).collect()
    }

    pub fn sorts(&self) -> BTreeMap<String, Sort> {
        self.vars.iter().map(|v| (v.name.clone(), v.sort)).collect()
    }

    /// All states in pre-order (declaration order).
    pub fn states(&self) -> Vec<&StateDef> {
        let mut out = Vec::new();
        collect_states(&self.root, &mut out);
        out
    }

    pub fn state(&self, path: &StatePath) -> Option<&StateDef> {
        let mut comp = &self.root;
        let mut found = None;
        for name in &path.0 {
            let sd = comp.states().iter().find(|s| s.name() == name)?;
            found = Some(sd);
            comp = &sd.comp;
        }
        found
    }

    /// Composition whose path is `path` (the root for the empty path).
    pub fn composition(&self, path: &StatePath) -> Option<&Composition> {
        if path.is_empty() {
            Some(&self.root)
        } else {
            self.state(path).map(|s| &s.comp)
        }
    }

    /// Junctions in scope for transitions belonging to state `owner`'s own
    /// lists (inner, defaults of its composition, its junctions).
    pub fn own_junctions(&self, owner: &StatePath) -> &[Junction] {
        if owner.is_empty() {
            &self.junctions
        } else {
            self.state(owner).map(|s| s.junctions.as_slice()).unwrap_or(&[])
        }
    }

    /// Every transition list in the model along with the path of the state
    /// (or root) whose junction scope it uses.
    pub fn transition_lists(&self) -> Vec<(StatePath, ListKind, &[Transition], String)> {
        let mut out = Vec::new();
        push_comp_lists(&self.root, &StatePath::root(), &mut out);
        for j in &self.junctions {
            out.push((StatePath::root(), ListKind::Junction, j.transitions.as_slice(), format!("junction {}", j.name)));
        }
        out
    }
}

fn push_comp_lists<'a>(
    comp: &'a Composition,
    scope: &StatePath,
    out: &mut Vec<(StatePath, ListKind, &'a [Transition], String)>,
) {
    if let Composition::Or(o) = comp {
        if !o.defaults.is_empty() {
            let what = if o.path.is_empty() { "root defaults".to_string() } else { format!("defaults of {}", o.path) };
            out.push((scope.clone(), ListKind::Default, o.defaults.as_slice(), what));
        }
    }
    for sd in comp.states() {
        out.push((scope.clone(), ListKind::Outer, sd.outer.as_slice(), format!("outer transitions of {}", sd.path)));
        out.push((sd.path.clone(), ListKind::Inner, sd.inner.as_slice(), format!("inner transitions of {}", sd.path)));
        for j in &sd.junctions {
            out.push((sd.path.clone(), ListKind::Junction, j.transitions.as_slice(), format!("junction {} of {}", j.name, sd.path)));
        }
        push_comp_lists(&sd.comp, &sd.path, out);
    }
}

fn collect_states<'a>(comp: &'a Composition, out: &mut Vec<&'a StateDef>) {
    for sd in comp.states() {
        out.push(sd);
        collect_states(&sd.comp, out);
    }
}

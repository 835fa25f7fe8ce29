//! Integer/boolean expressions, generic over the leaf variable type.
//!
//! The same tree is used for program conditions (`Expr<String>`), symbolic
//! terms over initial-value symbols (`Expr<Sym>`) and transition-system
//! formulas (`Expr<FVar>`).

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::ast::StatePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Int,
    Bool,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => f.write_str("int"),
            Sort::Bool => f.write_str("bool"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Int(_) => Sort::Int,
            Value::Bool(_) => Sort::Bool,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Int(_) => None,
        }
    }

    pub fn default_of(sort: Sort) -> Value {
        match sort {
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Bool => Value::Bool(false),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

// Integers that fit in an i64 become JSON numbers, larger ones strings.
impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Bool(b) => s.serialize_bool(*b),
            Value::Int(n) => match i64::try_from(n) {
                Ok(v) => s.serialize_i64(v),
                Err(_) => s.serialize_str(&n.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "=>",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 0,
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }

    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Implies)
    }
}

const NOT_PREC: u8 = 3;
const NEG_PREC: u8 = 7;
const ATOM_PREC: u8 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr<V> {
    Int(BigInt),
    Bool(bool),
    Var(V),
    /// `in(path)`: only meaningful in properties.
    InState(StatePath),
    Neg(Box<Expr<V>>),
    Not(Box<Expr<V>>),
    Binary(BinOp, Box<Expr<V>>, Box<Expr<V>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("type mismatch in {0}")]
    Type(String),
    #[error("state predicate in({0}) cannot be evaluated here")]
    StatePredicate(String),
}

impl<V> Expr<V> {
    pub fn int(n: i64) -> Self {
        Expr::Int(BigInt::from(n))
    }

    pub fn var(v: V) -> Self {
        Expr::Var(v)
    }

    pub fn bin(op: BinOp, l: Expr<V>, r: Expr<V>) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr<V>) -> Self {
        Expr::Not(Box::new(e))
    }

    pub fn implies(l: Expr<V>, r: Expr<V>) -> Self {
        Expr::bin(BinOp::Implies, l, r)
    }

    pub fn eq(l: Expr<V>, r: Expr<V>) -> Self {
        Expr::bin(BinOp::Eq, l, r)
    }

    /// Left-nested conjunction; `true` for an empty list.
    pub fn conj(items: impl IntoIterator<Item = Expr<V>>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::Bool(true),
            Some(first) => it.fold(first, |acc, e| Expr::bin(BinOp::And, acc, e)),
        }
    }

    /// Left-nested disjunction; `false` for an empty list.
    pub fn disj(items: impl IntoIterator<Item = Expr<V>>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::Bool(false),
            Some(first) => it.fold(first, |acc, e| Expr::bin(BinOp::Or, acc, e)),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Bool(true))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Expr::Bool(false))
    }

    /// Replaces every variable leaf with the expression returned by `f`.
    pub fn subst<W>(&self, f: &mut impl FnMut(&V) -> Expr<W>) -> Expr<W> {
        match self {
            Expr::Int(n) => Expr::Int(n.clone()),
            Expr::Bool(b) => Expr::Bool(*b),
            Expr::Var(v) => f(v),
            Expr::InState(p) => Expr::InState(p.clone()),
            Expr::Neg(e) => Expr::Neg(Box::new(e.subst(f))),
            Expr::Not(e) => Expr::Not(Box::new(e.subst(f))),
            Expr::Binary(op, l, r) => Expr::Binary(*op, Box::new(l.subst(f)), Box::new(r.subst(f))),
        }
    }

    pub fn map_var<W>(&self, f: &mut impl FnMut(&V) -> W) -> Expr<W> {
        self.subst(&mut |v| Expr::Var(f(v)))
    }

    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match self {
            Expr::Var(v) => f(v),
            Expr::Neg(e) | Expr::Not(e) => e.visit_vars(f),
            Expr::Binary(_, l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::InState(_) => {}
        }
    }

    pub fn visit_states<'a>(&'a self, f: &mut impl FnMut(&'a StatePath)) {
        match self {
            Expr::InState(p) => f(p),
            Expr::Neg(e) | Expr::Not(e) => e.visit_states(f),
            Expr::Binary(_, l, r) => {
                l.visit_states(f);
                r.visit_states(f);
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
        }
    }

    pub fn has_vars(&self) -> bool {
        let mut found = false;
        self.visit_vars(&mut |_| found = true);
        found
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::Neg(e) | Expr::Not(e) => 1 + e.size(),
            Expr::Binary(_, l, r) => 1 + l.size() + r.size(),
            _ => 1,
        }
    }

    /// True when some product has two non-constant factors.
    pub fn is_nonlinear(&self) -> bool {
        match self {
            Expr::Binary(BinOp::Mul, l, r) => {
                (l.has_vars() && r.has_vars()) || l.is_nonlinear() || r.is_nonlinear()
            }
            Expr::Binary(_, l, r) => l.is_nonlinear() || r.is_nonlinear(),
            Expr::Neg(e) | Expr::Not(e) => e.is_nonlinear(),
            _ => false,
        }
    }

    /// Evaluates under a variable lookup and a state-activity oracle.
    pub fn eval(
        &self,
        lookup: &impl Fn(&V) -> Option<Value>,
        active: &impl Fn(&StatePath) -> Option<bool>,
    ) -> Result<Value, EvalError>
    where
        V: fmt::Display,
    {
        match self {
            Expr::Int(n) => Ok(Value::Int(n.clone())),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Var(v) => lookup(v).ok_or_else(|| EvalError::Unbound(v.to_string())),
            Expr::InState(p) => active(p)
                .map(Value::Bool)
                .ok_or_else(|| EvalError::StatePredicate(p.to_string())),
            Expr::Neg(e) => match e.eval(lookup, active)? {
                Value::Int(n) => Ok(Value::Int(-n)),
                Value::Bool(_) => Err(EvalError::Type("negation".into())),
            },
            Expr::Not(e) => match e.eval(lookup, active)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                Value::Int(_) => Err(EvalError::Type("logical not".into())),
            },
            Expr::Binary(op, l, r) => {
                if op.is_logical() {
                    // Short-circuit so that a false guard protects the right operand.
                    let lv = bool_of(l.eval(lookup, active)?, *op)?;
                    return match (op, lv) {
                        (BinOp::And, false) => Ok(Value::Bool(false)),
                        (BinOp::Or, true) => Ok(Value::Bool(true)),
                        (BinOp::Implies, false) => Ok(Value::Bool(true)),
                        _ => Ok(Value::Bool(bool_of(r.eval(lookup, active)?, *op)?)),
                    };
                }
                let lv = l.eval(lookup, active)?;
                let rv = r.eval(lookup, active)?;
                apply_binop(*op, lv, rv)
            }
        }
    }

    /// Evaluates every variable-free subtree to a literal.
    pub fn fold_constants(&self) -> Expr<V>
    where
        V: Clone + fmt::Display,
    {
        let folded = match self {
            Expr::Neg(e) => Expr::Neg(Box::new(e.fold_constants())),
            Expr::Not(e) => Expr::Not(Box::new(e.fold_constants())),
            Expr::Binary(op, l, r) => {
                Expr::Binary(*op, Box::new(l.fold_constants()), Box::new(r.fold_constants()))
            }
            other => return other.clone(),
        };
        let closed = match &folded {
            Expr::Neg(e) | Expr::Not(e) => e.is_literal(),
            Expr::Binary(_, l, r) => l.is_literal() && r.is_literal(),
            _ => false,
        };
        if closed {
            let none = |_: &V| None;
            let no_state = |_: &StatePath| None;
            if let Ok(v) = folded.eval(&none, &no_state) {
                return Expr::from(v);
            }
        }
        folded
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Expr::Int(_) | Expr::Bool(_))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, _, _) => op.precedence(),
            Expr::Not(_) => NOT_PREC,
            Expr::Neg(_) => NEG_PREC,
            Expr::Int(n) if n.sign() == num_bigint::Sign::Minus => NEG_PREC,
            _ => ATOM_PREC,
        }
    }
}

fn bool_of(v: Value, op: BinOp) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| EvalError::Type(op.symbol().into()))
}

fn apply_binop(op: BinOp, lv: Value, rv: Value) -> Result<Value, EvalError> {
    let err = || EvalError::Type(op.symbol().into());
    match (lv, rv) {
        (Value::Int(a), Value::Int(b)) => Ok(match op {
            BinOp::Add => Value::Int(a + b),
            BinOp::Sub => Value::Int(a - b),
            BinOp::Mul => Value::Int(a * b),
            BinOp::Eq => Value::Bool(a == b),
            BinOp::Ne => Value::Bool(a != b),
            BinOp::Lt => Value::Bool(a < b),
            BinOp::Le => Value::Bool(a <= b),
            BinOp::Gt => Value::Bool(a > b),
            BinOp::Ge => Value::Bool(a >= b),
            _ => return Err(err()),
        }),
        (Value::Bool(a), Value::Bool(b)) => Ok(match op {
            BinOp::Eq => Value::Bool(a == b),
            BinOp::Ne => Value::Bool(a != b),
            _ => return Err(err()),
        }),
        _ => Err(err()),
    }
}

impl<V> From<Value> for Expr<V> {
    fn from(v: Value) -> Self {
        match v {
            Value::Int(n) => Expr::Int(n),
            Value::Bool(b) => Expr::Bool(b),
        }
    }
}

impl<V: fmt::Display> fmt::Display for Expr<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::InState(p) => write!(f, "in({p})"),
            Expr::Neg(e) => {
                if e.precedence() == ATOM_PREC && !matches!(**e, Expr::Int(_)) {
                    write!(f, "-{e}")
                } else {
                    write!(f, "-({e})")
                }
            }
            Expr::Not(e) => {
                if e.precedence() >= NOT_PREC && !matches!(**e, Expr::Binary(..)) {
                    write!(f, "!{e}")
                } else {
                    write!(f, "!({e})")
                }
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let lp = l.precedence();
                let rp = r.precedence();
                let l_paren = lp < p || (op.is_comparison() && lp == p);
                let r_paren = rp <= p;
                paren(f, l, l_paren)?;
                write!(f, " {} ", op.symbol())?;
                paren(f, r, r_paren)
            }
        }
    }
}

fn paren<V: fmt::Display>(f: &mut fmt::Formatter<'_>, e: &Expr<V>, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

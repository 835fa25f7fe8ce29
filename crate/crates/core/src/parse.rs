//! Lexer and recursive-descent parser for `.sfi` models and invariant
//! properties.
//!
//! Destinations that are a single identifier name a junction when one of that
//! name is in scope, and a top-level state otherwise. Because junctions may be
//! declared after their use, the model is parsed twice: the first pass only
//! collects state paths and junction scopes.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use thiserror::Error;

use crate::ast::*;
use crate::expr::{BinOp, Expr, Sort, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCTS: &[&str] = &[
    ":=", "->", "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", "[", "]", ";", ":", ",", ".",
    "/", "+", "-", "*", "<", ">", "!", "=",
];

const KEYWORDS: &[&str] = &[
    "program", "events", "var", "int", "bool", "true", "false", "or", "and", "state", "entry",
    "during", "exit", "inner", "outer", "transitions", "junctions", "on", "end", "skip", "in",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - s;
            out.push(Token { tok: Tok::Ident(chars[s..i].iter().collect()), line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - s;
            let text: String = chars[s..i].iter().collect();
            out.push(Token { tok: Tok::Int(text.parse().expect("digits")), line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token { tok: Tok::Punct(p), line, col: start_col });
            }
            None => {
                return Err(ParseError { line, col, message: format!("unexpected character '{c}'") })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// State paths and per-scope junction names gathered by the first pass.
#[derive(Default)]
struct Scopes {
    states: BTreeSet<StatePath>,
    junctions: BTreeMap<StatePath, BTreeSet<String>>,
}

impl Scopes {
    fn collect(p: &Program) -> Self {
        let mut s = Scopes::default();
        s.junctions.insert(StatePath::root(), p.junctions.iter().map(|j| j.name.clone()).collect());
        for sd in p.states() {
            s.states.insert(sd.path.clone());
            s.junctions.insert(sd.path.clone(), sd.junctions.iter().map(|j| j.name.clone()).collect());
        }
        s
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    scopes: Option<&'a Scopes>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError { line, col, message: message.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected '{p}', found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(format!("expected '{k}', found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn dotted(&mut self) -> PResult<Vec<String>> {
        let mut parts = vec![self.ident()?];
        while self.eat_punct(".") {
            parts.push(self.ident()?);
        }
        Ok(parts)
    }

    fn program(&mut self) -> PResult<Program> {
        self.expect_kw("program")?;
        let name = self.ident()?;
        self.expect_punct(";")?;
        let mut events = Vec::new();
        let mut vars = Vec::new();
        loop {
            if self.eat_kw("events") {
                loop {
                    events.push(self.ident()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")?;
            } else if self.eat_kw("var") {
                vars.push(self.var_decl()?);
            } else {
                break;
            }
        }
        let root_path = StatePath::root();
        let (root, junctions) = if self.eat_kw("or") {
            self.composition_body(true, &root_path, true)?
        } else if self.eat_kw("and") {
            self.composition_body(false, &root_path, true)?
        } else {
            return self.err(format!("expected 'or' or 'and', found {}", describe(self.peek())));
        };
        if *self.peek() != Tok::Eof {
            return self.err(format!("unexpected {} after root composition", describe(self.peek())));
        }
        Ok(Program { name, events, vars, junctions, root })
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        let name = self.ident()?;
        self.expect_punct(":")?;
        let sort = if self.eat_kw("int") {
            Sort::Int
        } else if self.eat_kw("bool") {
            Sort::Bool
        } else {
            return self.err(format!("expected sort 'int' or 'bool', found {}", describe(self.peek())));
        };
        let init = if self.eat_punct("=") {
            self.literal()?
        } else {
            Value::default_of(sort)
        };
        self.expect_punct(";")?;
        Ok(VarDecl { name, sort, init })
    }

    fn literal(&mut self) -> PResult<Value> {
        let neg = self.eat_punct("-");
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Value::Int(if neg { -n } else { n }))
            }
            Tok::Ident(s) if !neg && (s == "true" || s == "false") => {
                self.bump();
                Ok(Value::Bool(s == "true"))
            }
            other => self.err(format!("expected literal, found {}", describe(&other))),
        }
    }

    /// Parses `[label] { ... }` after `or`/`and`. Returns the composition
    /// and, for the root, its junctions.
    fn composition_body(
        &mut self,
        is_or: bool,
        path: &StatePath,
        is_root: bool,
    ) -> PResult<(Composition, Vec<Junction>)> {
        if matches!(self.peek(), Tok::Ident(_)) {
            // Optional label; informational only.
            self.dotted()?;
        }
        self.expect_punct("{")?;
        let mut defaults = Vec::new();
        let mut states: Vec<StateDef> = Vec::new();
        let mut junctions = Vec::new();
        loop {
            if self.eat_punct("}") {
                break;
            } else if self.is_kw("transitions") {
                if !is_or {
                    return self.err("default transitions are only allowed in an 'or' composition");
                }
                self.bump();
                defaults.extend(self.transition_block(path)?);
            } else if self.is_kw("junctions") && is_root {
                self.bump();
                junctions.extend(self.junction_block(path)?);
            } else if self.eat_kw("state") {
                let name = self.ident()?;
                states.push(self.state_body(path.child(&name), path)?);
            } else {
                return self.err(format!("expected 'state', 'transitions' or '}}', found {}", describe(self.peek())));
            }
        }
        let comp = if is_or {
            Composition::Or(OrComp { path: path.clone(), defaults, states })
        } else {
            Composition::And(AndComp { path: path.clone(), states })
        };
        Ok((comp, junctions))
    }

    fn state_body(&mut self, path: StatePath, parent: &StatePath) -> PResult<StateDef> {
        self.expect_punct("{")?;
        let mut sd = StateDef {
            path: path.clone(),
            entry: Action::skip(),
            during: Action::skip(),
            exit: Action::skip(),
            inner: Vec::new(),
            outer: Vec::new(),
            junctions: Vec::new(),
            comp: Composition::leaf(path.clone()),
        };
        let mut seen = BTreeSet::new();
        loop {
            if self.eat_punct("}") {
                break;
            }
            let key = match self.peek() {
                Tok::Ident(s) => s.clone(),
                other => return self.err(format!("expected state section, found {}", describe(other))),
            };
            if !seen.insert(key.clone()) {
                return self.err(format!("duplicate section '{key}' in state {path}"));
            }
            match key.as_str() {
                "entry" | "during" | "exit" => {
                    self.bump();
                    self.expect_punct(":")?;
                    let a = self.section_action()?;
                    match key.as_str() {
                        "entry" => sd.entry = a,
                        "during" => sd.during = a,
                        _ => sd.exit = a,
                    }
                }
                "outer" => {
                    self.bump();
                    sd.outer = self.transition_block(parent)?;
                }
                "inner" => {
                    self.bump();
                    sd.inner = self.transition_block(&path)?;
                }
                "junctions" => {
                    self.bump();
                    sd.junctions = self.junction_block(&path)?;
                }
                "or" | "and" => {
                    self.bump();
                    if seen.contains("or") && seen.contains("and") {
                        return self.err(format!("state {path} has more than one composition"));
                    }
                    sd.comp = self.composition_body(key == "or", &path, false)?.0;
                }
                _ => return self.err(format!("unknown state section '{key}'")),
            }
        }
        Ok(sd)
    }

    /// `entry: a; b;`: the list continues while the token after `;` starts
    /// another assignment.
    fn section_action(&mut self) -> PResult<Action> {
        if self.eat_kw("skip") {
            self.expect_punct(";")?;
            return Ok(Action::skip());
        }
        let mut v = vec![self.assignment()?];
        loop {
            self.expect_punct(";")?;
            let more = matches!(self.peek(), Tok::Ident(s) if !is_keyword(s))
                && matches!(self.peek_at(1), Tok::Punct(":="));
            if !more {
                break;
            }
            v.push(self.assignment()?);
        }
        Ok(Action(v))
    }

    fn braced_action(&mut self) -> PResult<Action> {
        self.expect_punct("{")?;
        let mut v = Vec::new();
        if self.eat_kw("skip") {
            self.eat_punct(";");
            self.expect_punct("}")?;
            return Ok(Action::skip());
        }
        while !self.is_punct("}") {
            v.push(self.assignment()?);
            if !self.eat_punct(";") {
                break;
            }
        }
        self.expect_punct("}")?;
        Ok(Action(v))
    }

    fn assignment(&mut self) -> PResult<Assignment> {
        let var = self.ident()?;
        self.expect_punct(":=")?;
        let value = self.expr()?;
        Ok(Assignment { var, value })
    }

    fn transition_block(&mut self, scope: &StatePath) -> PResult<Vec<Transition>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            out.push(self.transition(scope)?);
        }
        Ok(out)
    }

    fn junction_block(&mut self, scope: &StatePath) -> PResult<Vec<Junction>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            let name = self.ident()?;
            self.expect_punct(":")?;
            let mut transitions = Vec::new();
            while !self.is_punct("}") && !(matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) && matches!(self.peek_at(1), Tok::Punct(":"))) {
                transitions.push(self.transition(scope)?);
            }
            out.push(Junction { name, transitions });
        }
        Ok(out)
    }

    fn transition(&mut self, scope: &StatePath) -> PResult<Transition> {
        let event = if self.eat_kw("on") { Some(self.ident()?) } else { None };
        let cond = if self.eat_punct("[") {
            let c = self.expr()?;
            self.expect_punct("]")?;
            c
        } else {
            Expr::Bool(true)
        };
        let cond_action = if self.eat_punct("/") { self.braced_action()? } else { Action::skip() };
        self.expect_punct("->")?;
        let dest = self.destination(scope)?;
        let trans_action = if self.eat_punct("/") { self.braced_action()? } else { Action::skip() };
        self.expect_punct(";")?;
        Ok(Transition { event, cond, cond_action, dest, trans_action })
    }

    fn destination(&mut self, scope: &StatePath) -> PResult<Destination> {
        let (line, col) = self.here();
        if self.eat_kw("end") {
            return Ok(Destination::End);
        }
        let parts = self.dotted()?;
        let Some(scopes) = self.scopes else {
            return Ok(Destination::State(StatePath(parts)));
        };
        if parts.len() == 1 && scopes.junctions.get(scope).is_some_and(|js| js.contains(&parts[0])) {
            return Ok(Destination::Junction(parts[0].clone()));
        }
        let path = StatePath(parts);
        if scopes.states.contains(&path) {
            Ok(Destination::State(path))
        } else {
            Err(ParseError { line, col, message: format!("unresolved destination {path}") })
        }
    }

    // Expressions, loosest first.

    fn expr(&mut self) -> PResult<Expr<String>> {
        let mut l = self.and_expr()?;
        while self.eat_punct("||") {
            l = Expr::bin(BinOp::Or, l, self.and_expr()?);
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> PResult<Expr<String>> {
        let mut l = self.not_expr()?;
        while self.eat_punct("&&") {
            l = Expr::bin(BinOp::And, l, self.not_expr()?);
        }
        Ok(l)
    }

    fn not_expr(&mut self) -> PResult<Expr<String>> {
        if self.eat_punct("!") {
            return Ok(Expr::not(self.not_expr()?));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr<String>> {
        let l = self.add_expr()?;
        let op = match self.peek() {
            Tok::Punct("==") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            _ => return Ok(l),
        };
        self.bump();
        let r = self.add_expr()?;
        if matches!(self.peek(), Tok::Punct("==" | "!=" | "<" | "<=" | ">" | ">=")) {
            return self.err("comparison operators do not chain; use parentheses");
        }
        Ok(Expr::bin(op, l, r))
    }

    fn add_expr(&mut self) -> PResult<Expr<String>> {
        let mut l = self.mul_expr()?;
        loop {
            let op = if self.eat_punct("+") {
                BinOp::Add
            } else if self.eat_punct("-") {
                BinOp::Sub
            } else {
                return Ok(l);
            };
            l = Expr::bin(op, l, self.mul_expr()?);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr<String>> {
        let mut l = self.unary()?;
        while self.eat_punct("*") {
            l = Expr::bin(BinOp::Mul, l, self.unary()?);
        }
        Ok(l)
    }

    fn unary(&mut self) -> PResult<Expr<String>> {
        if self.eat_punct("-") {
            if let Tok::Int(n) = self.peek().clone() {
                self.bump();
                return Ok(Expr::Int(-n));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr<String>> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(s) if s == "in" => {
                self.bump();
                self.expect_punct("(")?;
                let p = self.dotted()?;
                self.expect_punct(")")?;
                Ok(Expr::InState(StatePath(p)))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Expr::Var(s))
            }
            other => self.err(format!("expected expression, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(n) => format!("'{n}'"),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Parses a model. Destinations are resolved; all other static checks are
/// done by [`crate::validate::validate_model`].
pub fn parse_model(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let first = Parser { toks: toks.clone(), pos: 0, scopes: None }.program()?;
    let scopes = Scopes::collect(&first);
    Parser { toks, pos: 0, scopes: Some(&scopes) }.program()
}

/// Parses a standalone expression (conditions, properties).
pub fn parse_expr(text: &str) -> Result<Expr<String>, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, scopes: None };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after expression", describe(p.peek())));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
        program Small;
        events A, B;
        var x: int = -2;
        var f: bool;
        or {
          transitions { -> S; }
          state S {
            entry: x := 0; f := true;
            outer { on A [x < 3] / {x := x + 1} -> J; on B -> T; }
          }
          state T { }
          junctions { J: [x == 2] -> T; -> end; }
        }
    "#;

    #[test]
    fn parses_small_model() {
        let p = parse_model(SMALL).unwrap();
        assert_eq!(p.name, "Small");
        assert_eq!(p.events, vec!["A", "B"]);
        assert_eq!(p.vars[0].init, Value::int(-2));
        assert_eq!(p.vars[1].init, Value::Bool(false));
        let s = p.state(&StatePath::parse("S")).unwrap();
        assert_eq!(s.entry.0.len(), 2);
        assert_eq!(s.outer[0].dest, Destination::Junction("J".into()));
        assert_eq!(s.outer[1].dest, Destination::State(StatePath::parse("T")));
        assert_eq!(p.junctions[0].transitions[1].dest, Destination::End);
    }

    #[test]
    fn unresolved_destination_is_reported() {
        let src = SMALL.replace("on B -> T;", "on B -> Nowhere.Deep;");
        let e = parse_model(&src).unwrap_err();
        assert!(e.message.contains("unresolved destination"), "{e}");
        assert!(e.message.contains("Nowhere.Deep"));
    }

    #[test]
    fn junction_out_of_scope_is_unresolved() {
        let src = r#"program P; or { state S { inner { -> J; } } state T { junctions { J: -> T; } } transitions { -> S; } }"#;
        let e = parse_model(src).unwrap_err();
        assert!(e.message.contains("unresolved destination J"), "{e}");
    }

    #[test]
    fn expression_precedence() {
        let e = parse_expr("a + b * c < 3 && !f || g").unwrap();
        assert_eq!(e.to_string(), "a + b * c < 3 && !f || g");
        let Expr::Binary(BinOp::Or, l, _) = &e else { panic!() };
        assert!(matches!(**l, Expr::Binary(BinOp::And, _, _)));
    }

    #[test]
    fn comparisons_do_not_chain() {
        assert!(parse_expr("0 <= x <= 5").is_err());
        assert!(parse_expr("0 <= x && x <= 5").is_ok());
    }

    #[test]
    fn property_with_state_predicate() {
        let e = parse_expr("in(Run.Lap) => cent >= 0").is_err();
        assert!(e, "implication is not part of the surface syntax");
        let e = parse_expr("!in(Run.Lap) || cent >= 0").unwrap();
        let mut states = Vec::new();
        e.visit_states(&mut |p| states.push(p.clone()));
        assert_eq!(states, vec![StatePath::parse("Run.Lap")]);
    }

    #[test]
    fn lex_errors_carry_position() {
        let e = parse_expr("x # 1").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
    }
}

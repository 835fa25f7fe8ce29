use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::expr::Value;

/// Solver output is read back as s-expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed s-expression: {0}")]
pub struct SexpError(pub String);

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            Sexp::Atom(_) => None,
        }
    }

    /// Reads a constant: `true`, `false`, a numeral or `(- numeral)`.
    pub fn to_value(&self) -> Option<Value> {
        match self {
            Sexp::Atom(a) if a == "true" => Some(Value::Bool(true)),
            Sexp::Atom(a) if a == "false" => Some(Value::Bool(false)),
            Sexp::Atom(a) => a.parse::<BigInt>().ok().filter(|_| !a.starts_with(['-', '+'])).map(Value::Int),
            Sexp::List(l) => match l.as_slice() {
                [Sexp::Atom(m), inner] if m == "-" => match inner.to_value()? {
                    Value::Int(n) => Some(Value::Int(-n)),
                    Value::Bool(_) => None,
                },
                _ => None,
            },
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(l) => {
                f.write_str("(")?;
                for (i, s) in l.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Net parenthesis depth of `text`, ignoring string literals, quoted
/// symbols and comments. `None` if it closes more than it opens.
pub fn depth(text: &str) -> Option<i64> {
    let mut d = 0i64;
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            '(' => d += 1,
            ')' => {
                d -= 1;
                if d < 0 {
                    return None;
                }
            }
            '"' => {
                for c in chars.by_ref() {
                    if c == '"' {
                        break;
                    }
                }
            }
            '|' => {
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                }
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            _ => {}
        }
    }
    Some(d)
}

pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let toks = tokenize(text)?;
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < toks.len() {
        out.push(parse_at(&toks, &mut pos)?);
    }
    Ok(out)
}

pub fn parse_sexp(text: &str) -> Result<Sexp, SexpError> {
    let mut all = parse_sexps(text)?;
    match all.len() {
        1 => Ok(all.pop().expect("one")),
        n => Err(SexpError(format!("expected one expression, found {n}"))),
    }
}

#[derive(Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, SexpError> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                toks.push(Tok::Open);
            }
            ')' => {
                chars.next();
                toks.push(Tok::Close);
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '"' | '|' => {
                let close = c;
                let mut s = String::new();
                s.push(chars.next().expect("peeked"));
                loop {
                    match chars.next() {
                        Some(d) => {
                            s.push(d);
                            if d == close {
                                // `""` is an escaped quote inside a string literal.
                                if close == '"' && chars.peek() == Some(&'"') {
                                    s.push(chars.next().expect("peeked"));
                                    continue;
                                }
                                break;
                            }
                        }
                        None => return Err(SexpError(format!("unterminated {close}"))),
                    }
                }
                toks.push(Tok::Atom(s));
            }
            _ => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' || d == ';' {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                toks.push(Tok::Atom(s));
            }
        }
    }
    Ok(toks)
}

fn parse_at(toks: &[Tok], pos: &mut usize) -> Result<Sexp, SexpError> {
    match toks.get(*pos) {
        None => Err(SexpError("unexpected end of input".into())),
        Some(Tok::Close) => Err(SexpError("unexpected ')'".into())),
        Some(Tok::Atom(a)) => {
            *pos += 1;
            Ok(Sexp::Atom(a.clone()))
        }
        Some(Tok::Open) => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match toks.get(*pos) {
                    Some(Tok::Close) => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    None => return Err(SexpError("missing ')'".into())),
                    _ => items.push(parse_at(toks, pos)?),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_response() {
        let s = parse_sexp("((x__0 0)\n (y__1 (- 12))\n (in.Run__1 true))").unwrap();
        let items = s.list().unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[1].list().unwrap()[1].to_value(), Some(Value::int(-12)));
        assert_eq!(items[2].list().unwrap()[1].to_value(), Some(Value::Bool(true)));
        assert_eq!(s.to_string(), "((x__0 0) (y__1 (- 12)) (in.Run__1 true))");
    }

    #[test]
    fn strings_and_quoted_symbols() {
        let s = parse_sexp("(error \"line 1 (column 2\")").unwrap();
        assert_eq!(s.list().unwrap()[1].atom(), Some("\"line 1 (column 2\""));
        assert_eq!(depth("(error \"a (b\")"), Some(0));
        assert_eq!(depth("(|a)b|"), Some(1));
        assert_eq!(depth(")"), None);
    }

    #[test]
    fn errors() {
        assert!(parse_sexp("(a").is_err());
        assert!(parse_sexp("a)").is_err());
        assert!(parse_sexp("a b").is_err());
        assert_eq!(Sexp::Atom("-3".into()).to_value(), None);
    }
}

use std::sync::Arc;

use thiserror::Error;

use super::{Expr, Func};

/// Malformed expression text.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("parse error at offset {offset}: {message} (expected {expected})")]
pub struct ParseError {
    /// Byte offset into the source, at most `source.len()`.
    pub offset: usize,
    pub message: String,
    pub expected: String,
}

impl ParseError {
    fn new(offset: usize, message: impl Into<String>, expected: impl Into<String>) -> Self {
        ParseError {
            offset,
            message: message.into(),
            expected: expected.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its starting offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            let bytes = rest.as_bytes();
            let mut end = 0;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &rest[..end];
            let v: f64 = text
                .parse()
                .map_err(|_| ParseError::new(start, format!("invalid number '{text}'"), "number"))?;
            self.pos += end;
            return Ok((Tok::Num(v), start));
        }
        if c.is_alphabetic() || c == '_' {
            let end = rest
                .char_indices()
                .find(|&(_, ch)| !(ch.is_alphanumeric() || ch == '_'))
                .map(|(i, _)| i)
                .unwrap_or(rest.len());
            self.pos += end;
            return Ok((Tok::Ident(rest[..end].to_string()), start));
        }
        if "+-*/^(),;".contains(c) {
            self.pos += c.len_utf8();
            return Ok((Tok::Sym(c), start));
        }
        Err(ParseError::new(
            start,
            format!("unexpected character '{c}'"),
            "operator, number, identifier or '('",
        ))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
    vars: &'a [String],
}

const OPERAND: &str = "number, identifier, '-' or '('";

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (t, at) = self.lex.next()?;
        self.tok = t;
        self.at = at;
        Ok(())
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(ParseError::new(
                self.at,
                format!("found {}", describe(&self.tok)),
                format!("'{c}'"),
            ))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym(c @ ('+' | '-')) => c,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Arc::new(lhs), Arc::new(rhs))
            } else {
                Expr::Sub(Arc::new(lhs), Arc::new(rhs))
            };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Sym(c @ ('*' | '/')) => c,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Arc::new(lhs), Arc::new(rhs))
            } else {
                Expr::Div(Arc::new(lhs), Arc::new(rhs))
            };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Sym('-') {
            self.bump()?;
            return Ok(Expr::Neg(Arc::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump()?;
        let at = self.at;
        let exponent = self.unary()?;
        let n = if exponent.arity() == 0 {
            exponent.eval(&[]).ok()
        } else {
            None
        };
        match n {
            Some(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                Ok(Expr::Pow(Arc::new(base), v as i32))
            }
            _ => Err(ParseError::new(
                at,
                "exponent must be an integer constant (use sqrt or exp(a*ln(x)) otherwise)",
                "integer exponent",
            )),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.at;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump()?;
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                if name == "sgncase" {
                    self.expect('(')?;
                    let test = self.expr()?;
                    self.expect(';')?;
                    let neg = self.expr()?;
                    self.expect(',')?;
                    let zero = self.expr()?;
                    self.expect(',')?;
                    let pos = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::SgnCase {
                        test: Arc::new(test),
                        neg: Arc::new(neg),
                        zero: Arc::new(zero),
                        pos: Arc::new(pos),
                    });
                }
                if let Some(f) = Func::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::Call(f, Arc::new(arg)));
                }
                Err(ParseError::new(
                    at,
                    format!("unknown identifier '{name}'"),
                    format!("one of the variables {:?} or a function", self.vars),
                ))
            }
            other => Err(ParseError::new(
                at,
                format!("found {}", describe(&other)),
                OPERAND,
            )),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Sym(c) => format!("'{c}'"),
        Tok::End => "end of input".to_string(),
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Parses `source` with variables named by `var_names` (index = position).
///
/// Precedence from tightest: `^` (integer constant exponent, right
/// associative), unary `-`, `* /`, `+ -`. Functions are `exp sin cos sqrt ln`
/// plus `sgncase(t; neg, zero, pos)`.
pub fn parse(source: &str, var_names: &[String]) -> Result<Expr, ParseError> {
    if var_names.is_empty() {
        return Err(ParseError::new(0, "no variables declared", "nonempty vars"));
    }
    for (i, v) in var_names.iter().enumerate() {
        if !is_identifier(v) || Func::from_name(v).is_some() || v == "sgncase" {
            return Err(ParseError::new(
                0,
                format!("'{v}' cannot be used as a variable name"),
                "identifier",
            ));
        }
        if var_names[..i].contains(v) {
            return Err(ParseError::new(
                0,
                format!("variable '{v}' declared twice"),
                "distinct variable names",
            ));
        }
    }
    let mut p = Parser {
        lex: Lexer { src: source, pos: 0 },
        tok: Tok::End,
        at: 0,
        vars: var_names,
    };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(ParseError::new(
            p.at,
            format!("found {}", describe(&p.tok)),
            "operator or end of input",
        ));
    }
    Ok(e)
}

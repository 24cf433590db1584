//! Hand-written lexer and recursive-descent parser.
//!
//! Precedence, tightest first: `^` (right associative), unary `-`, `* /`,
//! `+ -` (left associative). The exponent of `^` may itself carry a unary
//! minus, so `2^-1` parses.

use std::fmt;

use thiserror::Error;

use super::{BinOp, Expr, ExprKind, Func, Span, Var};

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Unexpected { expected: Vec<String>, found: String },
    UnknownIdentifier(String),
    Arity { func: String, expected: usize, found: usize },
    BadNumber(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: ", self.offset)?;
        match &self.kind {
            ParseErrorKind::Unexpected { expected, found } => {
                write!(f, "expected {}, found {found}", expected.join(" or "))
            }
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::Arity { func, expected, found } => {
                write!(f, "`{func}` takes {expected} argument(s), got {found}")
            }
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number `{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| ParseError { offset: start, kind: ParseErrorKind::BadNumber(text.into()) })?;
            out.push((Tok::Num(v), Span { start, end: i }));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), Span { start, end: i }));
        } else if b"+-*/^(),".contains(&c) {
            i += 1;
            out.push((Tok::Sym(c as char), Span { start, end: i }));
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::Unexpected { expected: vec!["expression".into()], found: format!("`{ch}`") },
            });
        }
    }
    out.push((Tok::End, Span { start: src.len(), end: src.len() }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.span().start,
            kind: ParseErrorKind::Unexpected {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: self.peek().describe(),
            },
        }
    }

    fn expect(&mut self, c: char) -> Result<Span, ParseError> {
        if *self.peek() == Tok::Sym(c) {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&[&format!("`{c}`")]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Sym('-') {
            let start = self.bump().1.start;
            let inner = self.unary()?;
            let span = Span { start, end: inner.span.end };
            return Ok(Expr { kind: ExprKind::Neg(Box::new(inner)), span });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                let span = self.bump().1;
                Ok(Expr { kind: ExprKind::Num(v), span })
            }
            Tok::Sym('(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let span = self.bump().1;
                if *self.peek() == Tok::Sym('(') {
                    let func = Func::lookup(&name).ok_or_else(|| ParseError {
                        offset: span.start,
                        kind: ParseErrorKind::UnknownIdentifier(name.clone()),
                    })?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Sym(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    let end = self.expect(')')?.end;
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            offset: span.start,
                            kind: ParseErrorKind::Arity { func: name, expected: func.arity(), found: args.len() },
                        });
                    }
                    return Ok(Expr { kind: ExprKind::Call(func, args), span: Span { start: span.start, end } });
                }
                if name == "pi" {
                    return Ok(Expr { kind: ExprKind::Num(std::f64::consts::PI), span });
                }
                match Var::lookup(&name) {
                    Some(v) => Ok(Expr { kind: ExprKind::Var(v), span }),
                    None => Err(ParseError { offset: span.start, kind: ParseErrorKind::UnknownIdentifier(name) }),
                }
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = Span { start: lhs.span.start, end: rhs.span.end };
    Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span }
}

/// Parses `src` into an expression tree.
pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected(&["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(name: &str) -> ExprKind {
        ExprKind::Var(Var::lookup(name).unwrap())
    }

    fn bin(op: BinOp, a: ExprKind, b: ExprKind) -> ExprKind {
        let wrap = |k| Box::new(Expr { kind: k, span: Span::default() });
        ExprKind::Binary(op, wrap(a), wrap(b))
    }

    #[test]
    fn plus_cos() {
        let e = parse_expression("1 + cos(theta)").unwrap();
        let cos = ExprKind::Call(Func::Cos, vec![Expr { kind: var("theta"), span: Span::default() }]);
        assert_eq!(e.kind, bin(BinOp::Add, ExprKind::Num(1.0), cos));
    }

    #[test]
    fn power_binds_tighter_than_times() {
        let e = parse_expression("2*x^2").unwrap();
        let pow = bin(BinOp::Pow, var("x"), ExprKind::Num(2.0));
        assert_eq!(e.kind, bin(BinOp::Mul, ExprKind::Num(2.0), pow));
    }

    #[test]
    fn unary_minus_below_power() {
        let e = parse_expression("-x^2").unwrap();
        assert_eq!(e.eval_at(&[3.0]).unwrap(), -9.0);
        let e = parse_expression("2^3^2").unwrap();
        assert_eq!(e.eval_at(&[]).unwrap(), 512.0);
        let e = parse_expression("2^-1").unwrap();
        assert_eq!(e.eval_at(&[]).unwrap(), 0.5);
        let e = parse_expression("8 - 2 - 1").unwrap();
        assert_eq!(e.eval_at(&[]).unwrap(), 5.0);
        let e = parse_expression("8 / 2 / 2").unwrap();
        assert_eq!(e.eval_at(&[]).unwrap(), 2.0);
    }

    #[test]
    fn open_call_reports_offset() {
        let err = parse_expression("sin(").unwrap_err();
        assert_eq!(err.offset, 4);
        match err.kind {
            ParseErrorKind::Unexpected { expected, .. } => assert_eq!(expected, vec!["expression".to_string()]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_names() {
        let err = parse_expression("1 + foo").unwrap_err();
        assert_eq!(err.offset, 4);
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        let err = parse_expression("bar(x)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("bar".into()));
    }

    #[test]
    fn misc_errors() {
        assert!(matches!(parse_expression("min(x)").unwrap_err().kind, ParseErrorKind::Arity { .. }));
        assert_eq!(parse_expression("x y").unwrap_err().offset, 2);
        assert_eq!(parse_expression("(x").unwrap_err().offset, 2);
        assert_eq!(parse_expression("x $ 1").unwrap_err().offset, 2);
        assert!(matches!(parse_expression("1.2.3").unwrap_err().kind, ParseErrorKind::BadNumber(_)));
    }

    #[test]
    fn spans_cover_source() {
        let e = parse_expression("  x + sin(y) ").unwrap();
        assert_eq!(e.span, Span { start: 2, end: 12 });
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_expression("1e-3").unwrap().eval_at(&[]).unwrap(), 1e-3);
        assert_eq!(parse_expression("2.5E2").unwrap().eval_at(&[]).unwrap(), 250.0);
        assert_eq!(parse_expression(".5").unwrap().eval_at(&[]).unwrap(), 0.5);
        assert_eq!(parse_expression("pi").unwrap().eval_at(&[]).unwrap(), std::f64::consts::PI);
    }
}

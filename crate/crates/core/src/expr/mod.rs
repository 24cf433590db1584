//! A small expression language for densities, curves and primitives.
//!
//! Expressions are parsed once into an immutable tree. Each node carries the
//! byte span of the source it came from so evaluation errors can point back at
//! the offending sub-expression.

mod enclosure;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use enclosure::Enclosure;
pub use parser::{parse_expression, ParseError, ParseErrorKind};

/// Half-open byte range `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    pub(crate) fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// A variable reference. `slot` is the coordinate the variable reads when the
/// expression is evaluated at a point: `x`, `t` and `theta` read coordinate 0,
/// `y` reads 1, `z` reads 2 and `xk` reads `k - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    pub slot: usize,
}

impl Var {
    pub(crate) fn lookup(name: &str) -> Option<Var> {
        let slot = match name {
            "x" | "t" | "theta" => 0,
            "y" => 1,
            "z" => 2,
            _ => {
                let digits = name.strip_prefix('x')?;
                if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                digits.parse::<usize>().ok()?.checked_sub(1)?
            }
        };
        Some(Var { name: name.to_string(), slot })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Expression tree node. Equality compares structure only, not spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalErrorKind {
    Unbound(String),
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{} at {span}", match kind { EvalErrorKind::Unbound(v) => format!("unbound variable `{v}`"), EvalErrorKind::Domain(m) => format!("domain error: {m}") })]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub span: Span,
}

impl EvalError {
    fn domain(span: Span, msg: impl Into<String>) -> Self {
        Self { kind: EvalErrorKind::Domain(msg.into()), span }
    }
}

impl Expr {
    /// Evaluates with variables bound by name.
    pub fn eval(&self, env: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_with(&|v: &Var| env.get(&v.name).copied())
    }

    /// Evaluates at a point, reading each variable from its coordinate slot.
    pub fn eval_at(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.eval_with(&|v: &Var| point.get(v.slot).copied())
    }

    fn eval_with(&self, lookup: &dyn Fn(&Var) -> Option<f64>) -> Result<f64, EvalError> {
        let value = match &self.kind {
            ExprKind::Num(v) => return Ok(*v),
            ExprKind::Var(v) => {
                return lookup(v).ok_or_else(|| EvalError { kind: EvalErrorKind::Unbound(v.name.clone()), span: self.span })
            }
            ExprKind::Neg(e) => -e.eval_with(lookup)?,
            ExprKind::Binary(op, a, b) => {
                let (a, b) = (a.eval_with(lookup)?, b.eval_with(lookup)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::domain(self.span, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(EvalError::domain(self.span, "negative base with non-integral exponent"));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(EvalError::domain(self.span, "zero raised to a negative power"));
                        }
                        a.powf(b)
                    }
                }
            }
            ExprKind::Call(f, args) => {
                let a = args[0].eval_with(lookup)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::domain(self.span, "log of a non-positive argument"));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::domain(self.span, "sqrt of a negative argument"));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Min => a.min(args[1].eval_with(lookup)?),
                    Func::Max => a.max(args[1].eval_with(lookup)?),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::domain(self.span, "non-finite result"))
        }
    }

    /// Number of coordinates the expression reads (largest slot + 1).
    pub fn arity(&self) -> usize {
        match &self.kind {
            ExprKind::Num(_) => 0,
            ExprKind::Var(v) => v.slot + 1,
            ExprKind::Neg(e) => e.arity(),
            ExprKind::Binary(_, a, b) => a.arity().max(b.arity()),
            ExprKind::Call(_, args) => args.iter().map(Expr::arity).max().unwrap_or(0),
        }
    }

    pub fn num(v: f64) -> Expr {
        Expr { kind: ExprKind::Num(v), span: Span::default() }
    }
}

// Fully parenthesised so that printing and reparsing gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => write!(f, "{v}"),
            ExprKind::Var(v) => write!(f, "{}", v.name),
            ExprKind::Neg(e) => write!(f, "(-{e})"),
            ExprKind::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ExprKind::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn eval_examples() {
        let e = parse_expression("x^2").unwrap();
        assert_eq!(e.eval(&env(&[("x", 0.5)])).unwrap(), 0.25);

        let e = parse_expression("1+cos(theta)").unwrap();
        let v = e.eval(&env(&[("theta", std::f64::consts::PI)])).unwrap();
        assert!(v.abs() < 1e-15);

        let e = parse_expression("sqrt(x)").unwrap();
        let err = e.eval(&env(&[("x", -1.0)])).unwrap_err();
        assert!(matches!(err.kind, EvalErrorKind::Domain(_)));
        assert_eq!(err.span, Span { start: 0, end: 7 });
    }

    #[test]
    fn unbound_variable() {
        let e = parse_expression("x + y").unwrap();
        let err = e.eval(&env(&[("x", 1.0)])).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::Unbound("y".into()));
        assert_eq!(err.span, Span { start: 4, end: 5 });
    }

    #[test]
    fn domain_rules() {
        let at = |src: &str, x: f64| parse_expression(src).unwrap().eval_at(&[x]);
        assert!(at("log(x)", 0.0).is_err());
        assert!(at("1/x", 0.0).is_err());
        assert!(at("x^0.5", -1.0).is_err());
        assert_eq!(at("x^3", -2.0).unwrap(), -8.0);
        assert!(at("0^(-1)", 0.0).is_err());
        assert!(at("exp(x)", 1000.0).is_err());
        assert_eq!(at("min(x, 2)", 3.0).unwrap(), 2.0);
        assert_eq!(at("max(x, 2)", 3.0).unwrap(), 3.0);
        assert_eq!(at("abs(-x)", 3.0).unwrap(), 3.0);
    }

    #[test]
    fn slots() {
        assert_eq!(Var::lookup("x3").unwrap().slot, 2);
        assert_eq!(Var::lookup("theta").unwrap().slot, 0);
        assert!(Var::lookup("x0").is_none());
        assert!(Var::lookup("w").is_none());
        assert_eq!(parse_expression("x + z").unwrap().arity(), 3);
        let e = parse_expression("x1 * x2").unwrap();
        assert_eq!(e.eval_at(&[2.0, 3.0]).unwrap(), 6.0);
    }
}

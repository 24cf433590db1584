//! Natural interval extension of expressions.
//!
//! Every inexact operation widens its result outward by one ulp (two for the
//! transcendental functions, whose library implementations are not correctly
//! rounded), so the computed enclosure contains the exact range of the
//! expression over the input box. Partial functions are restricted to their
//! domain: `sqrt([-1, 4]) = [0, 2]`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{BinOp, EvalError, Expr, ExprKind, Func, Span};

/// A closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    x.next_down()
}

fn up(x: f64) -> f64 {
    x.next_up()
}

impl Enclosure {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "{lo} > {hi}");
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn hull(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    fn widen(lo: f64, hi: f64, ulps: u32) -> Enclosure {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..ulps {
            lo = down(lo);
            hi = up(hi);
        }
        Enclosure { lo, hi }
    }

    pub fn add(self, o: Self) -> Self {
        Self::widen(self.lo + o.lo, self.hi + o.hi, 1)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::widen(self.lo - o.hi, self.hi - o.lo, 1)
    }

    pub fn mul(self, o: Self) -> Self {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let (lo, hi) = min_max(&p);
        Self::widen(lo, hi, 1)
    }

    fn div(self, o: Self, span: Span) -> Result<Self, EvalError> {
        if o.lo <= 0.0 && o.hi >= 0.0 {
            return Err(EvalError::domain(span, "divisor range contains zero"));
        }
        let p = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let (lo, hi) = min_max(&p);
        Ok(Self::widen(lo, hi, 1))
    }

    fn powi(self, n: i32, span: Span) -> Result<Self, EvalError> {
        if n == 0 {
            return Ok(Self::point(1.0));
        }
        if n == 1 {
            return Ok(self);
        }
        let straddles = self.lo < 0.0 && self.hi > 0.0;
        let touches_zero = self.lo <= 0.0 && self.hi >= 0.0;
        if n < 0 && touches_zero {
            return Err(EvalError::domain(span, "negative power of a range containing zero"));
        }
        let (a, b) = (self.lo.powi(n), self.hi.powi(n));
        if straddles && n % 2 == 0 {
            return Ok(Self::widen(0.0, a.max(b), 1).clamp_low(0.0));
        }
        let (lo, hi) = min_max(&[a, b]);
        let out = Self::widen(lo, hi, 2);
        Ok(if n % 2 == 0 { out.clamp_low(0.0) } else { out })
    }

    fn powf(self, e: Self, span: Span) -> Result<Self, EvalError> {
        if e.lo == e.hi && e.lo.fract() == 0.0 && e.lo.abs() < i32::MAX as f64 {
            return self.powi(e.lo as i32, span);
        }
        if self.hi < 0.0 {
            return Err(EvalError::domain(span, "negative base with non-integral exponent"));
        }
        let base = Enclosure { lo: self.lo.max(0.0), hi: self.hi };
        if base.lo == 0.0 && e.lo < 0.0 {
            return Err(EvalError::domain(span, "zero raised to a negative power"));
        }
        let p = [base.lo.powf(e.lo), base.lo.powf(e.hi), base.hi.powf(e.lo), base.hi.powf(e.hi)];
        let (lo, hi) = min_max(&p);
        Ok(Self::widen(lo, hi, 2).clamp_low(0.0))
    }

    fn clamp_low(self, floor: f64) -> Self {
        Self { lo: self.lo.max(floor), hi: self.hi.max(floor) }
    }

    fn clamp_unit(self) -> Self {
        Self { lo: self.lo.max(-1.0), hi: self.hi.min(1.0) }
    }

    /// Range of `sin` over the interval.
    pub fn sin(self) -> Self {
        self.periodic(FRAC_PI_2, -FRAC_PI_2, f64::sin)
    }

    pub fn cos(self) -> Self {
        self.periodic(0.0, PI, f64::cos)
    }

    // `peak` and `trough` are the locations of the maximum and minimum within
    // one period.
    fn periodic(self, peak: f64, trough: f64, f: fn(f64) -> f64) -> Self {
        if self.width() >= 2.0 * PI {
            return Self::new(-1.0, 1.0);
        }
        let (a, b) = (f(self.lo), f(self.hi));
        let (mut lo, mut hi) = min_max(&[a, b]);
        // pad the search so a critical point sitting on the boundary is caught
        let pad = 1e-9 * (1.0 + self.lo.abs().max(self.hi.abs()));
        if hits(self.lo - pad, self.hi + pad, peak) {
            hi = 1.0;
        }
        if hits(self.lo - pad, self.hi + pad, trough) {
            lo = -1.0;
        }
        Self::widen(lo, hi, 2).clamp_unit()
    }

    fn tan(self, span: Span) -> Result<Self, EvalError> {
        if self.width() >= PI || hits(self.lo - 1e-9, self.hi + 1e-9, FRAC_PI_2) {
            return Err(EvalError::domain(span, "tan is unbounded on this range"));
        }
        Ok(Self::widen(self.lo.tan(), self.hi.tan(), 2))
    }
}

/// True when `[lo, hi]` contains `phase + 2kπ` for some integer k.
fn hits(lo: f64, hi: f64, phase: f64) -> bool {
    let k = ((lo - phase) / (2.0 * PI)).ceil();
    phase + 2.0 * PI * k <= hi
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

impl EvalError {
    fn unbounded(span: Span) -> Self {
        EvalError::domain(span, "range is unbounded")
    }
}

impl Expr {
    /// Encloses the range of the expression when coordinate `i` ranges over
    /// `cell[i]`.
    pub fn enclose(&self, cell: &[Enclosure]) -> Result<Enclosure, EvalError> {
        let out = match &self.kind {
            ExprKind::Num(v) => Enclosure::point(*v),
            ExprKind::Var(v) => *cell.get(v.slot).ok_or_else(|| EvalError {
                kind: super::EvalErrorKind::Unbound(v.name.clone()),
                span: self.span,
            })?,
            ExprKind::Neg(e) => {
                let r = e.enclose(cell)?;
                Enclosure::new(-r.hi, -r.lo)
            }
            ExprKind::Binary(op, a, b) => {
                let (x, y) = (a.enclose(cell)?, b.enclose(cell)?);
                match op {
                    BinOp::Add => x.add(y),
                    BinOp::Sub => x.sub(y),
                    BinOp::Mul => x.mul(y),
                    BinOp::Div => x.div(y, self.span)?,
                    BinOp::Pow => x.powf(y, self.span)?,
                }
            }
            ExprKind::Call(f, args) => {
                let x = args[0].enclose(cell)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(self.span)?,
                    Func::Exp => Enclosure::widen(x.lo.exp(), x.hi.exp(), 2).clamp_low(0.0),
                    Func::Log => {
                        if x.lo <= 0.0 {
                            return Err(if x.hi <= 0.0 {
                                EvalError::domain(self.span, "log of a non-positive argument")
                            } else {
                                EvalError::unbounded(self.span)
                            });
                        }
                        Enclosure::widen(x.lo.ln(), x.hi.ln(), 2)
                    }
                    Func::Sqrt => {
                        if x.hi < 0.0 {
                            return Err(EvalError::domain(self.span, "sqrt of a negative argument"));
                        }
                        Enclosure::widen(x.lo.max(0.0).sqrt(), x.hi.sqrt(), 1).clamp_low(0.0)
                    }
                    Func::Abs => {
                        if x.lo >= 0.0 {
                            x
                        } else if x.hi <= 0.0 {
                            Enclosure::new(-x.hi, -x.lo)
                        } else {
                            Enclosure::new(0.0, (-x.lo).max(x.hi))
                        }
                    }
                    Func::Min => {
                        let y = args[1].enclose(cell)?;
                        Enclosure::new(x.lo.min(y.lo), x.hi.min(y.hi))
                    }
                    Func::Max => {
                        let y = args[1].enclose(cell)?;
                        Enclosure::new(x.lo.max(y.lo), x.hi.max(y.hi))
                    }
                }
            }
        };
        if out.lo.is_finite() && out.hi.is_finite() {
            Ok(out)
        } else {
            Err(EvalError::unbounded(self.span))
        }
    }

    /// Enclosure over a box given as `(lo, hi)` coordinate slices.
    pub fn enclose_box(&self, lo: &[f64], hi: &[f64]) -> Result<Enclosure, EvalError> {
        let cell: Vec<Enclosure> = lo.iter().zip(hi).map(|(a, b)| Enclosure::new(*a, *b)).collect();
        self.enclose(&cell)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_expression;
    use super::*;

    fn enc(src: &str, lo: f64, hi: f64) -> Enclosure {
        parse_expression(src).unwrap().enclose(&[Enclosure::new(lo, hi)]).unwrap()
    }

    #[test]
    fn exact_for_variables_and_constants() {
        assert_eq!(enc("x", 0.0, 0.5), Enclosure::new(0.0, 0.5));
        assert_eq!(enc("1", 0.0, 0.5), Enclosure::new(1.0, 1.0));
    }

    #[test]
    fn square_of_straddling_range() {
        let r = enc("x^2", -1.0, 0.5);
        assert_eq!(r.lo, 0.0);
        assert!(r.hi >= 1.0 && r.hi < 1.0 + 1e-15);
    }

    #[test]
    fn cosine_near_pi() {
        let r = enc("1 + cos(theta)", PI - 0.25, PI + 0.25);
        assert!(r.lo <= 0.0 && r.lo > -1e-15);
        assert!(r.hi >= 1.0 + (PI - 0.25).cos() && r.hi < 0.032);
    }

    #[test]
    fn sine_over_half_period() {
        let r = enc("sin(x)", 0.0, PI);
        assert!(r.lo <= 0.0 && r.lo > -1e-15);
        assert_eq!(r.hi, 1.0);
    }

    #[test]
    fn domain_restriction() {
        let r = enc("sqrt(x)", -1.0, 4.0);
        assert_eq!(r.lo, 0.0);
        assert!(r.hi >= 2.0);
        assert!(parse_expression("1/x").unwrap().enclose(&[Enclosure::new(-1.0, 1.0)]).is_err());
        assert!(parse_expression("log(x)").unwrap().enclose(&[Enclosure::new(0.0, 1.0)]).is_err());
        assert!(parse_expression("tan(x)").unwrap().enclose(&[Enclosure::new(1.0, 2.0)]).is_err());
    }

    #[test]
    fn contains_point_values() {
        for src in ["x^2*sin(3*x) - exp(-x)", "abs(x - 0.3) + cos(x)^3", "sqrt(1 - x^2)", "x^0.5 + max(x, 0.2)"] {
            let e = parse_expression(src).unwrap();
            for k in 0..50 {
                let a = k as f64 / 50.0;
                let b = a + 0.02;
                let r = e.enclose(&[Enclosure::new(a, b)]).unwrap();
                for j in 0..=10 {
                    let x = a + (b - a) * j as f64 / 10.0;
                    let v = e.eval_at(&[x]).unwrap();
                    assert!(r.contains(v), "{src} at {x}: {v} not in {r:?}");
                }
            }
        }
    }
}

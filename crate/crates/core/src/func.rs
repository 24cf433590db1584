//! Real functions of a point, and bounds on their range over boxes.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expr::{Enclosure, Expr};
use crate::geometry::Interval;

/// A real-valued function on points of some dimension.
pub trait ScalarFn: Send + Sync + fmt::Debug {
    fn eval(&self, x: &[f64]) -> Result<f64>;

    /// A certified enclosure of the range over `cell`, when the function
    /// supports interval evaluation.
    fn enclose(&self, _cell: &Interval) -> Option<Result<Enclosure>> {
        None
    }

    fn label(&self) -> String;
}

pub type SharedFn = Arc<dyn ScalarFn>;

impl ScalarFn for Expr {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_at(x)?)
    }

    fn enclose(&self, cell: &Interval) -> Option<Result<Enclosure>> {
        Some(self.enclose_box(cell.lo(), cell.hi()).map_err(Error::from))
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

/// A function given by Rust code rather than by an expression; used for
/// functions the expression language cannot state, such as `x² sin(1/x)`
/// extended by 0 at the origin.
#[derive(Clone)]
pub struct NativeFn {
    label: String,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl NativeFn {
    pub fn new(label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }

    pub fn shared(label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> SharedFn {
        Arc::new(Self::new(label, f))
    }
}

impl fmt::Debug for NativeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NativeFn({})", self.label)
    }
}

impl ScalarFn for NativeFn {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(invalid("function", format!("{} is not finite at {x:?}", self.label)))
        }
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `x² sin(1/x)`, continued by 0 at the origin: differentiable everywhere,
/// with a derivative that oscillates in about `[-1, 1]` near 0.
pub fn oscillating_square() -> SharedFn {
    NativeFn::shared("x^2*sin(1/x)", |x: &[f64]| if x[0] == 0.0 { 0.0 } else { x[0] * x[0] * (1.0 / x[0]).sin() })
}

/// How per-cell infima and suprema are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum RangeMethod {
    /// Interval extension when available, otherwise sampling.
    #[default]
    Auto,
    /// Interval extension only.
    Enclosure,
    /// Grid samples widened by `lipschitz_factor` times a Lipschitz estimate
    /// taken from 64 samples over the working domain.
    Sampled { per_axis: usize, lipschitz_factor: f64 },
}

/// Lower and upper bound of a function over a cell. `margin` is the amount
/// added on each side to sampled extremes (0 for interval enclosures).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeBound {
    pub lo: f64,
    pub hi: f64,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct RangeEstimator {
    f: SharedFn,
    method: RangeMethod,
    lipschitz: f64,
    per_axis: usize,
    factor: f64,
}

impl RangeEstimator {
    pub fn new(f: SharedFn, domain: &Interval, method: RangeMethod) -> Result<Self> {
        let (per_axis, factor) = match method {
            RangeMethod::Sampled { per_axis, lipschitz_factor } => {
                if per_axis < 2 {
                    return Err(invalid("per_axis", "need at least two samples per axis"));
                }
                (per_axis, lipschitz_factor)
            }
            _ => (5, 2.0),
        };
        let needs_lipschitz = match method {
            RangeMethod::Enclosure => false,
            RangeMethod::Sampled { .. } => true,
            RangeMethod::Auto => f.enclose(domain).is_none_or(|r| r.is_err()),
        };
        let lipschitz = if needs_lipschitz { lipschitz_estimate(f.as_ref(), domain)? } else { 0.0 };
        Ok(Self { f, method, lipschitz, per_axis, factor })
    }

    pub fn function(&self) -> &SharedFn {
        &self.f
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn range(&self, cell: &Interval) -> Result<RangeBound> {
        match self.method {
            RangeMethod::Enclosure => {
                let r = self.f.enclose(cell).ok_or_else(|| {
                    invalid("range_method", format!("{} has no interval extension", self.f.label()))
                })??;
                Ok(RangeBound { lo: r.lo, hi: r.hi, margin: 0.0 })
            }
            RangeMethod::Auto => match self.f.enclose(cell) {
                Some(Ok(r)) => Ok(RangeBound { lo: r.lo, hi: r.hi, margin: 0.0 }),
                _ => self.sampled(cell),
            },
            RangeMethod::Sampled { .. } => self.sampled(cell),
        }
    }

    fn sampled(&self, cell: &Interval) -> Result<RangeBound> {
        let n = cell.dim();
        let m = self.per_axis;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        loop {
            for i in 0..n {
                x[i] = cell.lo()[i] + cell.side(i) * idx[i] as f64 / (m - 1) as f64;
            }
            let v = self.f.eval(&x)?;
            lo = lo.min(v);
            hi = hi.max(v);
            let mut i = n;
            loop {
                if i == 0 {
                    let spacing: f64 = (0..n).map(|i| (cell.side(i) / (m - 1) as f64).powi(2)).sum::<f64>().sqrt();
                    let margin = self.factor * self.lipschitz * 0.5 * spacing;
                    return Ok(RangeBound { lo: lo - margin, hi: hi + margin, margin });
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < m {
                    break;
                }
                idx[i] = 0;
            }
        }
    }
}

/// Largest slope between neighbouring points of a grid of about 64 samples.
pub fn lipschitz_estimate(f: &dyn ScalarFn, domain: &Interval) -> Result<f64> {
    let n = domain.dim();
    let m = ((64f64).powf(1.0 / n as f64).round() as usize).max(2);
    let grid_point = |idx: &[usize]| -> Vec<f64> {
        (0..n).map(|i| domain.lo()[i] + domain.side(i) * idx[i] as f64 / (m - 1) as f64).collect()
    };
    let total = m.pow(n as u32);
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        values.push(f.eval(&grid_point(&idx))?);
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < m {
                break;
            }
            idx[i] = 0;
        }
    }
    let mut slope: f64 = 0.0;
    let mut stride = 1;
    for axis in (0..n).rev() {
        let h = domain.side(axis) / (m - 1) as f64;
        if h > 0.0 {
            for (k, v) in values.iter().enumerate() {
                let coord = (k / stride) % m;
                if coord + 1 < m {
                    slope = slope.max((values[k + stride] - v).abs() / h);
                }
            }
        }
        stride *= m;
    }
    Ok(slope)
}

//! Set functions on boxes and their distributivity checks.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::{Decomposition, DecompositionFamily};
use crate::error::{invalid, Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::func::SharedFn;
use crate::geometry::Interval;
use crate::measure::measure_within;
use crate::quadrature::Rule;
use crate::region::Region;
use crate::regionspec::parse_region;

/// A real-valued function of boxes.
pub trait SetFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, b: &Interval) -> Result<f64>;

    /// Declared non-negative on every box.
    fn is_positive(&self) -> bool;

    fn label(&self) -> String;

    /// Bound on the absolute error of [`SetFunction::eval`] per unit volume
    /// (quadrature or finite differences); 0 for exact evaluators.
    fn error_bound(&self) -> f64 {
        0.0
    }

    /// Natural domain, when the function has one.
    fn domain(&self) -> Option<Interval> {
        None
    }
}

pub type SharedSetFn = Arc<dyn SetFunction>;

impl fmt::Debug for dyn SetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetFunction({})", self.label())
    }
}

fn check_dim(sf: &dyn SetFunction, b: &Interval) -> Result<()> {
    if b.dim() != sf.dim() {
        return Err(Error::DimensionMismatch { expected: sf.dim(), found: b.dim() });
    }
    Ok(())
}

/// `vol_n`.
#[derive(Debug, Clone)]
pub struct Volume {
    n: usize,
    label: String,
}

impl Volume {
    pub fn new(n: usize) -> Self {
        Self { n, label: format!("vol_{n}") }
    }
}

impl SetFunction for Volume {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        check_dim(self, b)?;
        Ok(b.volume())
    }

    fn is_positive(&self) -> bool {
        true
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Length of the projection of an arc on the x-axis: interval length.
pub fn projection_length() -> Volume {
    Volume { n: 1, label: "projection_length".into() }
}

/// `μ(A) = ∫_A g d(vol_n)` by composite Gauss–Legendre quadrature.
#[derive(Debug, Clone)]
pub struct Density {
    g: SharedFn,
    n: usize,
    rule: Rule,
    positive: bool,
}

impl Density {
    pub fn new(g: SharedFn, n: usize) -> Self {
        Self { g, n, rule: Rule::default(), positive: false }
    }

    /// Sets the quadrature order (points per axis and panel).
    pub fn with_order(mut self, points: usize) -> Self {
        self.rule = Rule::new(points, 0.5);
        self
    }

    /// Declares `g ≥ 0`.
    pub fn positive(mut self) -> Self {
        self.positive = true;
        self
    }

    pub fn density(&self) -> &SharedFn {
        &self.g
    }
}

impl SetFunction for Density {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        check_dim(self, b)?;
        self.rule.integrate(b, |x| self.g.eval(x))
    }

    fn is_positive(&self) -> bool {
        self.positive
    }

    fn label(&self) -> String {
        format!("density({})", self.g.label())
    }

    fn error_bound(&self) -> f64 {
        1e-10
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PjMode {
    Inner,
    Outer,
}

/// Inner or outer Peano–Jordan measure of `r ∩ (A × remaining extent)`,
/// where `A` may have fewer axes than the region (a slab).
#[derive(Debug, Clone)]
pub struct PjRestricted {
    region: Region,
    mode: PjMode,
    depth: u32,
    n: usize,
}

impl PjRestricted {
    /// A set function on boxes of the first `n` axes.
    pub fn new(region: Region, mode: PjMode, depth: u32, n: usize) -> Result<Self> {
        if n == 0 || n > region.dim() {
            return Err(invalid("dim", format!("slab dimension {n} must be in 1..={}", region.dim())));
        }
        Ok(Self { region, mode, depth, n })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }
}

impl SetFunction for PjRestricted {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        check_dim(self, b)?;
        let rest = self.region.bounds().project(self.n..self.region.dim());
        let window = if self.n == self.region.dim() { b.clone() } else { b.product(&rest) };
        let m = measure_within(&self.region, &window, self.depth)?;
        Ok(match self.mode {
            PjMode::Inner => m.inner,
            PjMode::Outer => m.outer,
        })
    }

    fn is_positive(&self) -> bool {
        true
    }

    fn label(&self) -> String {
        let mode = match self.mode {
            PjMode::Inner => "inner",
            PjMode::Outer => "outer",
        };
        format!("pj_{mode}({}, depth {})", self.region.label(), self.depth)
    }

    fn domain(&self) -> Option<Interval> {
        Some(self.region.bounds().project(0..self.n))
    }
}

/// `μ(A) = ∫_A ½ ρ(θ)² dθ`: area of the polar region over the angles `A`.
#[derive(Debug, Clone)]
pub struct PolarSector {
    rho: SharedFn,
    rule: Rule,
}

impl PolarSector {
    pub fn new(rho: SharedFn) -> Result<Self> {
        for k in 0..=1024 {
            let t = TAU * k as f64 / 1024.0;
            let v = rho.eval(&[t])?;
            if v < 0.0 {
                return Err(invalid("rho", format!("rho({t}) = {v} is negative")));
            }
        }
        Ok(Self { rho, rule: Rule::default() })
    }
}

impl SetFunction for PolarSector {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        check_dim(self, b)?;
        self.rule.integrate(b, |t| Ok(0.5 * self.rho.eval(t)?.powi(2)))
    }

    fn is_positive(&self) -> bool {
        true
    }

    fn label(&self) -> String {
        format!("polar_sector({})", self.rho.label())
    }

    fn error_bound(&self) -> f64 {
        1e-10
    }

    fn domain(&self) -> Option<Interval> {
        Some(Interval::from_raw(vec![0.0], vec![TAU]))
    }
}

/// Area of the unit-circle sector over `A`: `½ |A|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitSector;

impl SetFunction for UnitSector {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        check_dim(self, b)?;
        Ok(0.5 * b.volume())
    }

    fn is_positive(&self) -> bool {
        true
    }

    fn label(&self) -> String {
        "unit_sector".into()
    }

    fn domain(&self) -> Option<Interval> {
        Some(Interval::from_raw(vec![0.0], vec![TAU]))
    }
}

// Central-difference step for derivatives of user functions.
const FD_STEP: f64 = 1e-6;

/// Length of the graph of `f` over `A`: `∫_A √(1 + f′²)`.
#[derive(Debug, Clone)]
pub struct Arclength {
    f: SharedFn,
    a: f64,
    b: f64,
    rule: Rule,
}

impl Arclength {
    pub fn new(f: SharedFn, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(invalid("b", format!("need a < b, got [{a}, {b}]")));
        }
        Ok(Self { f, a, b, rule: Rule::default() })
    }

    pub fn slope(&self, x: f64) -> Result<f64> {
        Ok((self.f.eval(&[x + FD_STEP])? - self.f.eval(&[x - FD_STEP])?) / (2.0 * FD_STEP))
    }
}

impl SetFunction for Arclength {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        check_dim(self, b)?;
        self.rule.integrate(b, |x| Ok(self.slope(x[0])?.hypot(1.0)))
    }

    fn is_positive(&self) -> bool {
        true
    }

    fn label(&self) -> String {
        format!("arclength({} on [{}, {}])", self.f.label(), self.a, self.b)
    }

    fn error_bound(&self) -> f64 {
        1e-8
    }

    fn domain(&self) -> Option<Interval> {
        Some(Interval::from_raw(vec![self.a], vec![self.b]))
    }
}

/// `μ([a, b]) = F(b) − F(a)`.
#[derive(Debug, Clone)]
pub struct Increment {
    f: SharedFn,
}

impl Increment {
    pub fn new(f: SharedFn) -> Self {
        Self { f }
    }
}

impl SetFunction for Increment {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        check_dim(self, b)?;
        Ok(self.f.eval(b.hi())? - self.f.eval(b.lo())?)
    }

    fn is_positive(&self) -> bool {
        false
    }

    fn label(&self) -> String {
        format!("increment({})", self.f.label())
    }
}

/// `c · μ`.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub c: f64,
    pub inner: SharedSetFn,
}

impl SetFunction for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        Ok(self.c * self.inner.eval(b)?)
    }

    fn is_positive(&self) -> bool {
        self.c >= 0.0 && self.inner.is_positive()
    }

    fn label(&self) -> String {
        format!("{} * {}", self.c, self.inner.label())
    }

    fn error_bound(&self) -> f64 {
        self.c.abs() * self.inner.error_bound()
    }

    fn domain(&self) -> Option<Interval> {
        self.inner.domain()
    }
}

/// `μ + λ`.
#[derive(Debug, Clone)]
pub struct Sum {
    pub a: SharedSetFn,
    pub b: SharedSetFn,
}

impl Sum {
    pub fn new(a: SharedSetFn, b: SharedSetFn) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
        }
        Ok(Self { a, b })
    }
}

impl SetFunction for Sum {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        Ok(self.a.eval(b)? + self.b.eval(b)?)
    }

    fn is_positive(&self) -> bool {
        self.a.is_positive() && self.b.is_positive()
    }

    fn label(&self) -> String {
        format!("{} + {}", self.a.label(), self.b.label())
    }

    fn error_bound(&self) -> f64 {
        self.a.error_bound() + self.b.error_bound()
    }
}

/// A set function given by a closure.
pub struct FnSetFunction<F> {
    n: usize,
    label: String,
    positive: bool,
    f: F,
}

impl<F: Fn(&Interval) -> f64 + Send + Sync> FnSetFunction<F> {
    pub fn new(n: usize, label: impl Into<String>, positive: bool, f: F) -> Self {
        Self { n, label: label.into(), positive, f }
    }
}

impl<F: Fn(&Interval) -> f64 + Send + Sync> SetFunction for FnSetFunction<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        check_dim(self, b)?;
        Ok((self.f)(b))
    }

    fn is_positive(&self) -> bool {
        self.positive
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Random sub-box of `domain` with corners on the 1/8 grid of each side.
pub(crate) fn random_sub_box(rng: &mut ChaCha8Rng, domain: &Interval) -> Interval {
    let sides: Vec<(f64, f64)> = (0..domain.dim())
        .map(|i| {
            let (lo, side) = (domain.lo()[i], domain.side(i));
            let a = rng.gen_range(0..4);
            let b = rng.gen_range(5..=8);
            (lo + side * a as f64 / 8.0, if b == 8 { domain.hi()[i] } else { lo + side * b as f64 / 8.0 })
        })
        .collect();
    Interval::from_raw(sides.iter().map(|s| s.0).collect(), sides.iter().map(|s| s.1).collect())
}

pub(crate) fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributivityReport {
    pub samples: usize,
    pub max_residual: f64,
    /// Decomposition attaining the largest residual (earliest on ties).
    pub witness: Option<Decomposition>,
}

/// `max |μ(∪H) − Σ μ(H)|` over random decompositions of random sub-boxes of
/// `domain` drawn from `fam`.
pub fn check_distributive(
    sf: &dyn SetFunction,
    fam: &dyn DecompositionFamily,
    domain: &Interval,
    samples: usize,
    seed: u64,
) -> Result<DistributivityReport> {
    if domain.dim() != sf.dim() {
        return Err(Error::DimensionMismatch { expected: sf.dim(), found: domain.dim() });
    }
    let residuals: Vec<(f64, Decomposition)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let a = random_sub_box(&mut rng, domain);
            let h = fam.sample(&a, &mut rng);
            let parts = h.cells().iter().map(|c| sf.eval(c)).collect::<Result<Vec<f64>>>()?;
            let residual = (sf.eval(&a)? - parts.iter().sum::<f64>()).abs();
            Ok((residual, h))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, Decomposition)> = None;
    for (r, h) in residuals {
        if best.as_ref().is_none_or(|(b, _)| r > *b) {
            best = Some((r, h));
        }
    }
    Ok(match best {
        Some((r, h)) => DistributivityReport { samples, max_residual: r, witness: Some(h) },
        None => DistributivityReport { samples, max_residual: 0.0, witness: None },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProportionalityReport {
    pub samples: usize,
    /// Equal-length intervals always received equal values.
    pub translation_invariant: bool,
    pub max_translation_gap: f64,
    /// Pair of congruent intervals with the largest value difference.
    pub witness: Option<(Interval, Interval)>,
    /// Least-squares `c` in `μ([a, b]) ≈ c (b − a)`.
    pub constant: f64,
    pub max_deviation: f64,
}

/// Tests whether a 1-D set function gives equal values to equal intervals
/// and fits `μ([a, b]) = c (b − a)`.
pub fn check_proportionality(sf: &dyn SetFunction, domain: &Interval, samples: usize, seed: u64) -> Result<ProportionalityReport> {
    if sf.dim() != 1 || domain.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: sf.dim().max(domain.dim()) });
    }
    let (lo, side) = (domain.lo()[0], domain.side(0));
    let pairs: Vec<(Interval, Interval, f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let len = side * rng.gen_range(0.01..0.5);
            let a1 = lo + rng.gen_range(0.0..side - len);
            let a2 = lo + rng.gen_range(0.0..side - len);
            let p = Interval::from_raw(vec![a1], vec![a1 + len]);
            let q = Interval::from_raw(vec![a2], vec![a2 + len]);
            let (u, v) = (sf.eval(&p)?, sf.eval(&q)?);
            Ok((p, q, u, v))
        })
        .collect::<Result<_>>()?;
    let mut gap = 0.0;
    let mut witness = None;
    let (mut num, mut den) = (0.0, 0.0);
    for (p, q, u, v) in &pairs {
        let d = (u - v).abs();
        let tol = 1e-9 * (1.0 + u.abs().max(v.abs()));
        if d > tol && d > gap {
            gap = d;
            witness = Some((p.clone(), q.clone()));
        }
        for (b, val) in [(p, u), (q, v)] {
            num += val * b.volume();
            den += b.volume() * b.volume();
        }
    }
    let c = if den > 0.0 { num / den } else { 0.0 };
    let deviation = pairs
        .iter()
        .flat_map(|(p, q, u, v)| [(c * p.volume() - u).abs(), (c * q.volume() - v).abs()])
        .fold(0.0, f64::max);
    Ok(ProportionalityReport {
        samples,
        translation_invariant: witness.is_none(),
        max_translation_gap: gap,
        witness,
        constant: c,
        max_deviation: deviation,
    })
}

/// Parses a number written as a constant expression, e.g. `pi/2`.
pub fn parse_number(src: &str) -> Result<f64> {
    let e = parse_expression(src)?;
    if e.arity() > 0 {
        return Err(invalid("number", format!("`{src}` is not a constant")));
    }
    Ok(e.eval_at(&[])?)
}

/// Default depth for `pj:` specs without an explicit depth.
pub const DEFAULT_PJ_DEPTH: u32 = 10;

/// Builds a set function from a spec string:
/// `volume`, `density:EXPR`, `increment:EXPR`, `pj:inner|outer:FILE[:DEPTH]`,
/// `arclength:EXPR:a:b`, `polar:EXPR` or `sector`. `dim` is the dimension of
/// the boxes it will be evaluated on.
pub fn parse_setfunc(spec: &str, dim: usize) -> Result<SharedSetFn> {
    parse_spec(spec, dim, None)
}

/// Like [`parse_setfunc`] for boxes inside `domain`; a density whose interval
/// enclosure over `domain` is non-negative is declared positive.
pub fn parse_setfunc_on(spec: &str, domain: &Interval) -> Result<SharedSetFn> {
    parse_spec(spec, domain.dim(), Some(domain))
}

fn parse_spec(spec: &str, dim: usize, domain: Option<&Interval>) -> Result<SharedSetFn> {
    let fail = |reason: String| Error::SetFunctionSpec { spec: spec.to_string(), reason };
    let expr = |src: &str| -> Result<Arc<Expr>> { parse_expression(src).map(Arc::new).map_err(|e| fail(e.to_string())) };
    let one_dim = || if dim == 1 { Ok(()) } else { Err(fail(format!("works on intervals, got dimension {dim}"))) };
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match head {
        "volume" if rest.is_empty() => Arc::new(Volume::new(dim)),
        "sector" if rest.is_empty() => {
            one_dim()?;
            Arc::new(UnitSector)
        }
        "density" => {
            let g = expr(rest)?;
            if g.arity() > dim {
                return Err(fail(format!("density reads {} coordinates but boxes have {dim}", g.arity())));
            }
            let nonnegative = match domain.map(|d| g.enclose_box(d.lo(), d.hi())) {
                Some(Ok(r)) => r.lo >= 0.0,
                _ => false,
            };
            let d = Density::new(g, dim);
            Arc::new(if nonnegative { d.positive() } else { d })
        }
        "increment" => {
            one_dim()?;
            Arc::new(Increment::new(expr(rest)?))
        }
        "polar" => {
            one_dim()?;
            Arc::new(PolarSector::new(expr(rest)?).map_err(|e| fail(e.to_string()))?)
        }
        "arclength" => {
            one_dim()?;
            let parts: Vec<&str> = rest.rsplitn(3, ':').collect();
            let [b, a, f] = parts[..] else {
                return Err(fail("expected arclength:EXPR:a:b".into()));
            };
            let (a, b) = (parse_number(a).map_err(|e| fail(e.to_string()))?, parse_number(b).map_err(|e| fail(e.to_string()))?);
            Arc::new(Arclength::new(expr(f)?, a, b).map_err(|e| fail(e.to_string()))?)
        }
        "pj" => {
            let mut parts = rest.splitn(2, ':');
            let mode = match parts.next() {
                Some("inner") => PjMode::Inner,
                Some("outer") => PjMode::Outer,
                _ => return Err(fail("expected pj:inner:FILE or pj:outer:FILE".into())),
            };
            let file = parts.next().ok_or_else(|| fail("missing region file".into()))?;
            let (file, depth) = match file.rsplit_once(':') {
                Some((f, d)) if d.parse::<u32>().is_ok() => (f, d.parse().unwrap()),
                _ => (file, DEFAULT_PJ_DEPTH),
            };
            let doc = std::fs::read_to_string(file).map_err(|e| fail(format!("{file}: {e}")))?;
            let region = parse_region(&doc)?;
            Arc::new(PjRestricted::new(region, mode, depth, dim).map_err(|e| fail(e.to_string()))?)
        }
        _ => return Err(fail("unknown kind; expected volume, density, increment, pj, arclength, polar or sector".into())),
    })
}

//! Lower, upper and proper integrals of bounded functions against positive
//! distributive set functions, and the two-way mass/density check.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::Decomposition;
use crate::derivative::{estimate_strict_derivative, lattice, random_box_in, sample_grid, Schedule};
use crate::error::{invalid, Error, Result};
use crate::exactsum::ProductSum;
use crate::expr::Enclosure;
use crate::func::{RangeEstimator, RangeMethod, ScalarFn, SharedFn};
use crate::geometry::{DyadicGrid, Interval};
use crate::setfunc::{sample_rng, SetFunction, SharedSetFn};

/// Refuse meshes with more cells than this.
pub const MAX_MESH_CELLS: u64 = 1 << 24;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DarbouxSums {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
    pub mesh: f64,
    /// `Σ margin_i ν(A_i)` on each side: the part of the gap owed to sampled
    /// range bounds rather than to the oscillation of `ρ`.
    pub margin_mass: f64,
}

impl DarbouxSums {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

// exact running sums, so refinement monotonicity survives rounding
#[derive(Debug, Clone, Default)]
struct Partial {
    lower: ProductSum,
    upper: ProductSum,
    margin: ProductSum,
}

impl Partial {
    fn add_cell(&mut self, rho: &RangeEstimator, nu: &dyn SetFunction, cell: &Interval) -> Result<()> {
        let r = rho.range(cell)?;
        if !r.lo.is_finite() || !r.hi.is_finite() {
            return Err(Error::Unbounded { cell: cell.clone() });
        }
        let v = nu.eval(cell)?;
        if !v.is_finite() {
            return Err(invalid("nu", format!("non-finite value on {cell}")));
        }
        self.lower.add_product(r.lo, v);
        self.upper.add_product(r.hi, v);
        self.margin.add_product(r.margin, v);
        Ok(())
    }
}

fn sum(parts: impl IntoIterator<Item = Partial>) -> Partial {
    parts.into_iter().fold(Partial::default(), |mut a, p| {
        a.lower.merge(p.lower);
        a.upper.merge(p.upper);
        a.margin.merge(p.margin);
        a
    })
}

fn check_positive(nu: &dyn SetFunction) -> Result<()> {
    if !nu.is_positive() {
        return Err(invalid("nu", format!("{} is not a positive set function", nu.label())));
    }
    Ok(())
}

/// `s′ = Σ inf ρ · ν(A_i)` and `s″ = Σ sup ρ · ν(A_i)`, summed in cell order.
pub fn darboux_sums(rho: &RangeEstimator, nu: &dyn SetFunction, h: &Decomposition) -> Result<DarbouxSums> {
    check_positive(nu)?;
    let parts: Vec<Partial> = h
        .cells()
        .par_chunks(CHUNK as usize)
        .map(|cells| {
            let mut p = Partial::default();
            for c in cells {
                p.add_cell(rho, nu, c)?;
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;
    let s = sum(parts);
    Ok(DarbouxSums {
        lower: s.lower.value(),
        upper: s.upper.value(),
        cells: h.len(),
        mesh: h.max_diameter(),
        margin_mass: s.margin.value(),
    })
}

// Darboux sums over the uniform depth-d dyadic mesh of `a`, without
// materialising the cells.
fn mesh_sums(rho: &RangeEstimator, nu: &dyn SetFunction, a: &Interval, depth: u32) -> Result<DarbouxSums> {
    let n = a.dim();
    let grid = DyadicGrid::new(a.clone(), depth);
    let per = grid.cells_per_axis();
    let total = per
        .checked_pow(n as u32)
        .filter(|&t| t <= MAX_MESH_CELLS)
        .ok_or_else(|| invalid("depth", format!("mesh depth {depth} in dimension {n} is too fine")))?;
    let parts: Vec<Partial> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut idx = vec![0u64; n];
            let mut p = Partial::default();
            for mut linear in c * CHUNK..((c + 1) * CHUNK).min(total) {
                for i in (0..n).rev() {
                    idx[i] = linear % per;
                    linear /= per;
                }
                p.add_cell(rho, nu, &grid.cell(&idx))?;
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;
    let s = sum(parts);
    let mesh = (0..n).map(|i| grid.cell_side(i).powi(2)).sum::<f64>().sqrt();
    Ok(DarbouxSums {
        lower: s.lower.value(),
        upper: s.upper.value(),
        cells: total as usize,
        mesh,
        margin_mass: s.margin.value(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshStage {
    pub depth: u32,
    pub cells: usize,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub margin_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralResult {
    /// Best lower sum seen on the ladder.
    pub lower: f64,
    /// Best upper sum seen on the ladder.
    pub upper: f64,
    /// Midpoint of the bounds once their gap is below `tol`.
    pub proper: Option<f64>,
    pub tol: f64,
    pub history: Vec<MeshStage>,
}

impl IntegralResult {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Refines the uniform dyadic mesh of `a` from depth 0 until the running
/// gap drops below `tol` or `max_depth` is reached.
pub fn integrate(rho: &RangeEstimator, nu: &dyn SetFunction, a: &Interval, tol: f64, max_depth: u32) -> Result<IntegralResult> {
    check_positive(nu)?;
    if !(tol > 0.0) {
        return Err(invalid("tol", "tolerance must be positive"));
    }
    if a.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: nu.dim(), found: a.dim() });
    }
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut history = Vec::new();
    for depth in 0..=max_depth {
        let s = mesh_sums(rho, nu, a, depth)?;
        lower = lower.max(s.lower);
        upper = upper.min(s.upper);
        history.push(MeshStage {
            depth,
            cells: s.cells,
            lower: s.lower,
            upper: s.upper,
            gap: s.gap(),
            margin_mass: s.margin_mass,
        });
        if upper - lower < tol {
            break;
        }
    }
    let proper = (upper - lower < tol).then_some(0.5 * (lower + upper));
    Ok(IntegralResult { lower, upper, proper, tol, history })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Lower,
    Upper,
}

/// `A ↦` lower (or upper) Darboux sum of `ρ` over the depth-`depth` mesh
/// of `A`.
pub struct IntegralSetFunction {
    rho: RangeEstimator,
    nu: SharedSetFn,
    depth: u32,
    bound: Bound,
}

impl IntegralSetFunction {
    pub fn gap(&self, a: &Interval) -> Result<f64> {
        Ok(mesh_sums(&self.rho, self.nu.as_ref(), a, self.depth)?.gap())
    }
}

pub fn integral_as_setfunction(rho: RangeEstimator, nu: SharedSetFn, depth: u32, bound: Bound) -> Result<IntegralSetFunction> {
    check_positive(nu.as_ref())?;
    Ok(IntegralSetFunction { rho, nu, depth, bound })
}

impl SetFunction for IntegralSetFunction {
    fn dim(&self) -> usize {
        self.nu.dim()
    }

    fn eval(&self, b: &Interval) -> Result<f64> {
        let s = mesh_sums(&self.rho, self.nu.as_ref(), b, self.depth)?;
        Ok(match self.bound {
            Bound::Lower => s.lower,
            Bound::Upper => s.upper,
        })
    }

    fn is_positive(&self) -> bool {
        false
    }

    fn label(&self) -> String {
        let side = match self.bound {
            Bound::Lower => "lower",
            Bound::Upper => "upper",
        };
        format!("{side} integral of {} d({})", self.rho.function().label(), self.nu.label())
    }
}

/// Multilinear interpolant of values on a lattice over a box.
#[derive(Debug, Clone)]
pub struct Interpolant {
    domain: Interval,
    per_axis: usize,
    values: Vec<f64>,
}

impl Interpolant {
    /// `values` in the order of [`lattice`].
    pub fn new(domain: Interval, per_axis: usize, values: Vec<f64>) -> Result<Self> {
        if per_axis < 2 || values.len() != per_axis.pow(domain.dim() as u32) {
            return Err(invalid("values", "need per_axis^n lattice values, per_axis >= 2"));
        }
        Ok(Self { domain, per_axis, values })
    }

    fn knot(&self, axis: usize, j: usize) -> f64 {
        if j + 1 == self.per_axis {
            self.domain.hi()[axis]
        } else {
            self.domain.lo()[axis] + self.domain.side(axis) * j as f64 / (self.per_axis - 1) as f64
        }
    }

    // Lattice cell index and local coordinate along one axis.
    fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let m = self.per_axis - 1;
        let t = ((x - self.domain.lo()[axis]) / self.domain.side(axis) * m as f64).clamp(0.0, m as f64);
        let j = (t.floor() as usize).min(m - 1);
        (j, t - j as f64)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let loc: Vec<(usize, f64)> = (0..n).map(|i| self.locate(i, x[i])).collect();
        let mut total = 0.0;
        for bits in 0..1usize << n {
            let mut w = 1.0;
            let mut linear = 0;
            for (i, &(j, t)) in loc.iter().enumerate() {
                let up = (bits >> i) & 1;
                w *= if up == 1 { t } else { 1.0 - t };
                linear = linear * self.per_axis + j + up;
            }
            if w != 0.0 {
                total += w * self.values[linear];
            }
        }
        total
    }

    /// Bound on the interpolation error, from second differences of the
    /// lattice values along each axis.
    pub fn error_bound(&self) -> f64 {
        let n = self.domain.dim();
        let m = self.per_axis;
        if m < 3 {
            return 0.0;
        }
        let mut total = 0.0;
        for axis in 0..n {
            let stride = m.pow((n - 1 - axis) as u32);
            let mut worst: f64 = 0.0;
            for (linear, v) in self.values.iter().enumerate() {
                let j = (linear / stride) % m;
                if j >= 1 && j + 1 < m {
                    worst = worst.max((self.values[linear - stride] - 2.0 * v + self.values[linear + stride]).abs());
                }
            }
            total += worst / 8.0;
        }
        total
    }
}

impl ScalarFn for Interpolant {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch { expected: self.domain.dim(), found: x.len() });
        }
        Ok(self.value(x))
    }

    /// Exact range: a multilinear piece attains its extremes at the corners
    /// of the box's intersection with each lattice cell.
    fn enclose(&self, cell: &Interval) -> Option<Result<Enclosure>> {
        let n = cell.dim();
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let (lo, hi) = (cell.lo()[i], cell.hi()[i]);
                let mut v = vec![lo];
                v.extend((0..self.per_axis).map(|j| self.knot(i, j)).filter(|&k| k > lo && k < hi));
                v.push(hi);
                v
            })
            .collect();
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut out: Option<Enclosure> = None;
        loop {
            for i in 0..n {
                x[i] = axes[i][idx[i]];
            }
            let v = self.value(&x);
            out = Some(out.map_or(Enclosure::point(v), |e| e.hull(&Enclosure::point(v))));
            let mut i = n;
            loop {
                if i == 0 {
                    return out.map(Ok);
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
    }

    fn label(&self) -> String {
        format!("interpolant on {} points per axis", self.per_axis)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PeanodevConfig {
    pub lattice_per_axis: usize,
    pub samples: usize,
    pub recovery_per_axis: usize,
    pub seed: u64,
    pub tol: f64,
    pub schedule: Schedule,
    /// Mesh depth of the integral set function built for the reverse check.
    pub integral_depth: u32,
}

impl Default for PeanodevConfig {
    fn default() -> Self {
        Self {
            lattice_per_axis: 33,
            samples: 200,
            recovery_per_axis: 25,
            seed: 0,
            tol: 1e-3,
            schedule: Schedule::default(),
            integral_depth: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub lattice_points: usize,
    pub converged_points: usize,
    /// Up to 8 lattice points where the estimate did not converge.
    pub unconverged: Vec<Vec<f64>>,
    pub max_estimate_width: f64,
    pub interpolation_bound: f64,
    pub samples: usize,
    /// `max |μ(A) − ∫_A ρ̂ dν|`.
    pub max_error: f64,
    /// `max (|μ(A) − ∫_A ρ̂ dν| − gap(A)) / ν(A)`.
    pub max_excess: f64,
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub points: usize,
    pub max_error: f64,
    pub worst_point: Vec<f64>,
    pub unconverged: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    /// No strict derivative was found, so the equivalence has nothing to say.
    Inapplicable,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeanodevReport {
    pub verdict: Verdict,
    pub reconstruction: Reconstruction,
    pub recovery: Option<Recovery>,
}

/// Both directions of the derivative/integral equivalence on `s`.
///
/// Forward: estimate `ρ̂ = dμ/dν` on a lattice, interpolate, and compare
/// `μ(A)` with `∫_A ρ̂ dν` on sampled sub-boxes. Reverse: build `∫ ρ dν`
/// from `rho` (or from `ρ̂` when no `rho` is given) and recover `ρ` as its
/// strict derivative.
pub fn peanodev_check(
    mu: &dyn SetFunction,
    nu: SharedSetFn,
    s: &Interval,
    rho: Option<SharedFn>,
    config: &PeanodevConfig,
) -> Result<PeanodevReport> {
    check_positive(nu.as_ref())?;
    let n = s.dim();
    let tol = config.tol;
    let points = lattice(s, config.lattice_per_axis);
    let estimates: Vec<_> = points
        .par_iter()
        .map(|p| estimate_strict_derivative(mu, nu.as_ref(), p, tol, &config.schedule))
        .collect::<Result<_>>()?;
    let converged = estimates.iter().filter(|e| e.converged).count();
    let unconverged: Vec<Vec<f64>> =
        points.iter().zip(&estimates).filter(|(_, e)| !e.converged).take(8).map(|(p, _)| p.clone()).collect();
    let max_estimate_width = estimates.iter().map(|e| e.terminal_width()).fold(0.0, f64::max);
    let mut reconstruction = Reconstruction {
        lattice_points: points.len(),
        converged_points: converged,
        unconverged,
        max_estimate_width,
        interpolation_bound: 0.0,
        samples: 0,
        max_error: 0.0,
        max_excess: 0.0,
        passed: None,
    };
    let mut rho_hat = None;
    if converged == points.len() {
        let interp = Interpolant::new(s.clone(), config.lattice_per_axis, estimates.iter().map(|e| e.value).collect())?;
        reconstruction.interpolation_bound = interp.error_bound();
        let interp: SharedFn = Arc::new(interp);
        let range = RangeEstimator::new(interp.clone(), s, RangeMethod::Enclosure)?;
        let max_depth = 16 / n as u32;
        let rows: Vec<(f64, f64)> = (0..config.samples)
            .into_par_iter()
            .map(|i| {
                let a = random_box_in(&mut sample_rng(config.seed, i), s);
                let v = nu.eval(&a)?;
                let target = (0.01 * tol * v).max(f64::MIN_POSITIVE);
                let r = integrate(&range, nu.as_ref(), &a, target, max_depth)?;
                let err = (mu.eval(&a)? - 0.5 * (r.lower + r.upper)).abs();
                let excess = if v > 0.0 { (err - r.gap()) / v } else { 0.0 };
                Ok((err, excess))
            })
            .collect::<Result<_>>()?;
        reconstruction.samples = rows.len();
        reconstruction.max_error = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        reconstruction.max_excess = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max).max(0.0);
        let allowance = tol + reconstruction.interpolation_bound + 0.5 * max_estimate_width;
        reconstruction.passed = Some(reconstruction.max_excess <= allowance);
        rho_hat = Some(interp);
    }
    let recovery = match rho.or(rho_hat) {
        Some(g) => Some(recover(g, nu, s, config)?),
        None => None,
    };
    let verdict = match (&reconstruction.passed, &recovery) {
        (None, _) => Verdict::Inapplicable,
        (Some(true), Some(r)) if r.passed => Verdict::Equivalent,
        _ => Verdict::Failed,
    };
    Ok(PeanodevReport { verdict, reconstruction, recovery })
}

fn recover(g: SharedFn, nu: SharedSetFn, s: &Interval, config: &PeanodevConfig) -> Result<Recovery> {
    let n = s.dim();
    let per_axis = ((config.recovery_per_axis as f64).powf(1.0 / n as f64).round() as usize).max(1);
    let points = sample_grid(s, per_axis);
    let range = RangeEstimator::new(g.clone(), s, RangeMethod::Auto)?;
    let mu = integral_as_setfunction(range, nu.clone(), config.integral_depth, Bound::Lower)?;
    let rows: Vec<(f64, bool)> = points
        .par_iter()
        .map(|p| {
            let e = estimate_strict_derivative(&mu, nu.as_ref(), p, config.tol, &config.schedule)?;
            Ok(((e.value - g.eval(p)?).abs(), e.converged))
        })
        .collect::<Result<_>>()?;
    let (mut worst, mut max_error) = (0, 0.0);
    for (i, r) in rows.iter().enumerate() {
        if r.0 > max_error {
            max_error = r.0;
            worst = i;
        }
    }
    let unconverged = rows.iter().filter(|r| !r.1).count();
    Ok(Recovery {
        points: points.len(),
        max_error,
        worst_point: points[worst].clone(),
        unconverged,
        passed: unconverged == 0 && max_error < config.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::interval_decompose;
    use crate::decomposition::Cut;
    use crate::expr::parse_expression;
    use crate::setfunc::{Density, Volume};

    fn est(src: &str, b: &Interval) -> RangeEstimator {
        RangeEstimator::new(Arc::new(parse_expression(src).unwrap()), b, RangeMethod::Auto).unwrap()
    }

    #[test]
    fn halves_of_the_unit_interval() {
        let b = Interval::unit(1);
        let h = interval_decompose(&b, &[Cut::all(0, 0.5)]).unwrap();
        let s = darboux_sums(&est("x", &b), &Volume::new(1), &h).unwrap();
        assert_eq!((s.lower, s.upper), (0.25, 0.75));
        let one = darboux_sums(&est("1", &b), &Volume::new(1), &h).unwrap();
        assert_eq!((one.lower, one.upper), (1.0, 1.0));
    }

    #[test]
    fn constant_is_proper_at_depth_zero() {
        let b = Interval::cube(0.0, 2.0, 2).unwrap();
        let r = integrate(&est("3", &b), &Volume::new(2), &b, 1e-9, 10).unwrap();
        assert_eq!(r.proper, Some(12.0));
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn cosine_against_length() {
        let b = Interval::from_sides(&[(0.0, std::f64::consts::FRAC_PI_2)]).unwrap();
        let r = integrate(&est("cos(x)", &b), &Volume::new(1), &b, 1e-4, 20).unwrap();
        assert!((r.proper.unwrap() - 1.0).abs() < 1e-4);
        assert!(r.history.windows(2).all(|w| w[1].gap <= w[0].gap));
    }

    #[test]
    fn unbounded_integrand_is_reported() {
        let b = Interval::from_sides(&[(-1.0, 1.0)]).unwrap();
        let err = integrate(&est("1/x", &b), &Volume::new(1), &b, 1e-3, 4).unwrap_err();
        assert!(matches!(err, Error::Unbounded { .. } | Error::Eval(_)), "{err:?}");
    }

    #[test]
    fn interpolant_range_is_exact() {
        let b = Interval::unit(1);
        let f = Interpolant::new(b.clone(), 3, vec![0.0, 1.0, 0.0]).unwrap();
        let e = f.enclose(&Interval::from_sides(&[(0.25, 0.75)]).unwrap()).unwrap().unwrap();
        assert_eq!((e.lo, e.hi), (0.5, 1.0));
        assert_eq!(f.eval(&[0.25]).unwrap(), 0.5);
    }

    #[test]
    fn density_round_trip() {
        let s = Interval::unit(1);
        let g: SharedFn = Arc::new(parse_expression("1 + x^2").unwrap());
        let mu = Density::new(g.clone(), 1);
        let config = PeanodevConfig { lattice_per_axis: 9, samples: 20, recovery_per_axis: 5, ..Default::default() };
        let r = peanodev_check(&mu, Arc::new(Volume::new(1)), &s, Some(g), &config).unwrap();
        assert_eq!(r.verdict, Verdict::Equivalent, "{r:?}");
    }
}

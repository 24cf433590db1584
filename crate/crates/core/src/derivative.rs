//! Strict (Peano), Cauchy and uniform derivatives of set functions, and the
//! checks built on them.
//!
//! The limit of `μ(A)/ν(A)` over sets `A` near `x` is approximated by the
//! range of the ratio over dyadic cells of an absolute grid (side `2^-depth`)
//! and over runs of up to `cluster` adjacent cells along one axis. The range
//! found is a subset of the true oscillation: a reported width is a lower
//! bound on it.

use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::SemiDistributivePredicate;
use crate::error::{invalid, Error, Result};
use crate::func::{RangeEstimator, RangeMethod, SharedFn};
use crate::geometry::{DyadicGrid, Interval};
use crate::setfunc::{sample_rng, SetFunction};

/// Sets with `ν(A)` at or below this are not admissible.
pub const NU_FLOOR: f64 = 1e-300;

// Sets scanned per parallel task.
const CHUNK: u64 = 4096;
// Refuse scans larger than this many sets.
const MAX_SETS: u64 = 1 << 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `A ⊂ B_δ(x)`.
    Peano,
    /// `x ∈ A ⊂ B_δ(x)`.
    Cauchy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioBounds {
    pub lo: f64,
    pub hi: f64,
    pub delta: f64,
    pub depth: u32,
    pub mode: Mode,
    pub cells_examined: u64,
    pub lo_witness: Interval,
    pub hi_witness: Interval,
}

impl RatioBounds {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Radii `δ_k = 2^-k` for `k = k_min..=k_max`, scanned at grid depth
/// `depth_slope · k + depth_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub k_min: u32,
    pub k_max: u32,
    pub depth_slope: u32,
    pub depth_offset: u32,
    /// Largest run of adjacent cells scanned as one set.
    pub cluster: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { k_min: 3, k_max: 16, depth_slope: 1, depth_offset: 4, cluster: 3 }
    }
}

impl Schedule {
    pub fn stages(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        (self.k_min..=self.k_max).map(|k| ((-(k as f64)).exp2(), self.depth_slope * k + self.depth_offset))
    }

    fn validate(&self) -> Result<()> {
        if self.k_min > self.k_max {
            return Err(invalid("schedule", format!("k_min {} > k_max {}", self.k_min, self.k_max)));
        }
        if self.cluster == 0 {
            return Err(invalid("cluster", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Extreme {
    ratio: f64,
    index: u64,
    axis: usize,
    len: usize,
}

#[derive(Clone, Copy)]
struct Scan {
    lo: Option<Extreme>,
    hi: Option<Extreme>,
    count: u64,
}

impl Scan {
    const EMPTY: Scan = Scan { lo: None, hi: None, count: 0 };

    fn push(&mut self, e: Extreme) {
        self.count += 1;
        if self.lo.is_none_or(|l| e.ratio < l.ratio) {
            self.lo = Some(e);
        }
        if self.hi.is_none_or(|h| e.ratio > h.ratio) {
            self.hi = Some(e);
        }
    }

    // `other` comes later in canonical order, so it only wins strictly.
    fn merge(mut self, other: Scan) -> Scan {
        self.count += other.count;
        if let Some(l) = other.lo {
            if self.lo.is_none_or(|s| l.ratio < s.ratio) {
                self.lo = Some(l);
            }
        }
        if let Some(h) = other.hi {
            if self.hi.is_none_or(|s| h.ratio > s.ratio) {
                self.hi = Some(h);
            }
        }
        self
    }
}

struct CellGrid {
    h: f64,
    start: Vec<i64>,
    counts: Vec<u64>,
    total: u64,
}

impl CellGrid {
    fn new(x: &[f64], reach: f64, depth: u32) -> Result<Self> {
        let h = (-(depth as f64)).exp2();
        let start: Vec<i64> = x.iter().map(|c| ((c - reach) / h).floor() as i64).collect();
        let counts: Vec<u64> = x.iter().zip(&start).map(|(c, s)| (((c + reach) / h).ceil() as i64 - s).max(0) as u64).collect();
        let total = counts.iter().try_fold(1u64, |acc, &c| acc.checked_mul(c)).filter(|&t| t <= MAX_SETS);
        let total = total.ok_or_else(|| invalid("depth", format!("scan at depth {depth} is too large")))?;
        Ok(Self { h, start, counts, total })
    }

    fn index(&self, mut linear: u64, out: &mut [i64]) {
        for i in (0..out.len()).rev() {
            out[i] = self.start[i] + (linear % self.counts[i]) as i64;
            linear /= self.counts[i];
        }
    }

    fn run(&self, idx: &[i64], axis: usize, len: usize) -> Interval {
        let lo: Vec<f64> = idx.iter().map(|&j| j as f64 * self.h).collect();
        let mut hi: Vec<f64> = idx.iter().map(|&j| (j + 1) as f64 * self.h).collect();
        hi[axis] = (idx[axis] + len as i64) as f64 * self.h;
        Interval::from_raw(lo, hi)
    }
}

fn inside_ball(b: &Interval, x: &[f64], delta: f64) -> bool {
    let far: f64 = x
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let d = (c - b.lo()[i]).abs().max((b.hi()[i] - c).abs());
            d * d
        })
        .sum();
    far <= delta * delta
}

/// Range of `μ(A)/ν(A)` over admissible cells and cell runs at `depth`
/// within the ball `B_δ(x)`.
pub fn ratio_bounds(
    mu: &dyn SetFunction,
    nu: &dyn SetFunction,
    x: &[f64],
    delta: f64,
    depth: u32,
    mode: Mode,
    cluster: usize,
) -> Result<RatioBounds> {
    let n = x.len();
    if mu.dim() != n || nu.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: if mu.dim() != n { mu.dim() } else { nu.dim() } });
    }
    if !(delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    let cluster = cluster.max(1);
    let h = (-(depth as f64)).exp2();
    let reach = match mode {
        Mode::Peano => delta,
        Mode::Cauchy => delta.min(cluster as f64 * h),
    };
    let grid = CellGrid::new(x, reach, depth)?;
    let chunks = grid.total.div_ceil(CHUNK);
    let scans: Vec<Scan> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Scan> {
            let mut scan = Scan::EMPTY;
            let mut idx = vec![0i64; n];
            for linear in c * CHUNK..((c + 1) * CHUNK).min(grid.total) {
                grid.index(linear, &mut idx);
                for len in 1..=cluster {
                    for axis in 0..if len == 1 { 1 } else { n } {
                        let b = grid.run(&idx, axis, len);
                        if !inside_ball(&b, x, delta) || (mode == Mode::Cauchy && !b.contains_point(x)) {
                            continue;
                        }
                        let v = nu.eval(&b)?;
                        if v <= NU_FLOOR {
                            continue;
                        }
                        scan.push(Extreme { ratio: mu.eval(&b)? / v, index: linear, axis, len });
                    }
                }
            }
            Ok(scan)
        })
        .collect::<Result<_>>()?;
    let scan = scans.into_iter().fold(Scan::EMPTY, Scan::merge);
    let (Some(lo), Some(hi)) = (scan.lo, scan.hi) else {
        return Err(Error::NoAdmissibleCell { delta, depth });
    };
    let witness = |e: Extreme| {
        let mut idx = vec![0i64; n];
        grid.index(e.index, &mut idx);
        grid.run(&idx, e.axis, e.len)
    };
    Ok(RatioBounds {
        lo: lo.ratio,
        hi: hi.ratio,
        delta,
        depth,
        mode,
        cells_examined: scan.count,
        lo_witness: witness(lo),
        hi_witness: witness(hi),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub delta: f64,
    pub depth: u32,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub converged: bool,
    pub tol: f64,
    pub width_history: Vec<Stage>,
}

impl DerivativeEstimate {
    fn from_stages(stages: Vec<Stage>, tol: f64) -> Self {
        let last = stages.last().expect("at least one stage");
        DerivativeEstimate {
            value: 0.5 * (last.lo + last.hi),
            lo: last.lo,
            hi: last.hi,
            converged: last.width < tol,
            tol,
            width_history: stages,
        }
    }

    pub fn terminal_width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Smallest width seen at any stage.
    pub fn min_width(&self) -> f64 {
        self.width_history.iter().map(|s| s.width).fold(f64::INFINITY, f64::min)
    }
}

/// Runs the schedule until the ratio bounds are narrower than `tol`.
/// Non-convergence is a result, not an error.
pub fn estimate_derivative(
    mu: &dyn SetFunction,
    nu: &dyn SetFunction,
    x: &[f64],
    tol: f64,
    schedule: &Schedule,
    mode: Mode,
) -> Result<DerivativeEstimate> {
    schedule.validate()?;
    let mut stages = Vec::new();
    for (delta, depth) in schedule.stages() {
        let b = ratio_bounds(mu, nu, x, delta, depth, mode, schedule.cluster)?;
        stages.push(Stage { delta, depth, lo: b.lo, hi: b.hi, width: b.width() });
        if b.width() < tol {
            break;
        }
    }
    Ok(DerivativeEstimate::from_stages(stages, tol))
}

pub fn estimate_strict_derivative(
    mu: &dyn SetFunction,
    nu: &dyn SetFunction,
    x: &[f64],
    tol: f64,
    schedule: &Schedule,
) -> Result<DerivativeEstimate> {
    estimate_derivative(mu, nu, x, tol, schedule, Mode::Peano)
}

// Offsets in [0, δ]: a linear ladder plus a geometric one towards 0.
fn offsets(delta: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=64).map(|i| delta * i as f64 / 64.0).collect();
    v.extend((1..=20).map(|j| delta * (-(j as f64)).exp2()));
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Bounds of `(f(x+h) − f(x−k))/(h+k)` over `h, k ∈ [0, δ]`, `h + k > 0`,
/// for each radius of the schedule.
pub fn estimate_cauchy_derivative_1d(f: &SharedFn, x: f64, tol: f64, schedule: &Schedule) -> Result<DerivativeEstimate> {
    schedule.validate()?;
    let mut stages = Vec::new();
    let fx = f.eval(&[x])?;
    for (delta, depth) in schedule.stages() {
        let off = offsets(delta);
        let right: Vec<f64> = off.iter().map(|&h| if h == 0.0 { Ok(fx) } else { f.eval(&[x + h]) }).collect::<Result<_>>()?;
        let left: Vec<f64> = off.iter().map(|&k| if k == 0.0 { Ok(fx) } else { f.eval(&[x - k]) }).collect::<Result<_>>()?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, h) in off.iter().enumerate() {
            for (j, k) in off.iter().enumerate() {
                if h + k > 0.0 {
                    let q = (right[i] - left[j]) / (h + k);
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
            }
        }
        stages.push(Stage { delta, depth, lo, hi, width: hi - lo });
        if hi - lo < tol {
            break;
        }
    }
    Ok(DerivativeEstimate::from_stages(stages, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEstimate {
    pub point: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformStage {
    pub delta: f64,
    pub depth: u32,
    pub max_width: f64,
    /// Sample point with the widest bounds (first on ties).
    pub worst_point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformReport {
    pub uniform: bool,
    /// Shared radius that worked at every point.
    pub eta: Option<f64>,
    pub tol: f64,
    pub stages: Vec<UniformStage>,
    /// Cauchy-mode estimates at the last stage.
    pub estimates: Vec<PointEstimate>,
    /// `max |μ(A)| / vol(A)` over sets seen at the last stage.
    pub bounded_ratio: f64,
}

/// Regular grid of `per_axis` points per side of `k` (cell centers).
pub fn sample_grid(k: &Interval, per_axis: usize) -> Vec<Vec<f64>> {
    let n = k.dim();
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|mut linear| {
            let mut p = vec![0.0; n];
            for i in (0..n).rev() {
                let j = linear % per_axis;
                linear /= per_axis;
                p[i] = k.lo()[i] + k.side(i) * (j as f64 + 0.5) / per_axis as f64;
            }
            p
        })
        .collect()
}

/// Grid points including the faces: `per_axis` points per side from `lo`
/// to `hi`.
pub fn lattice(k: &Interval, per_axis: usize) -> Vec<Vec<f64>> {
    let n = k.dim();
    let per = per_axis.max(2);
    (0..per.pow(n as u32))
        .map(|mut linear| {
            let mut p = vec![0.0; n];
            for i in (0..n).rev() {
                let j = linear % per;
                linear /= per;
                p[i] = if j + 1 == per { k.hi()[i] } else { k.lo()[i] + k.side(i) * j as f64 / (per - 1) as f64 };
            }
            p
        })
        .collect()
}

/// Cauchy-mode bounds at `points` with one radius per stage; uniform when a
/// single radius gives width below `tol` everywhere.
pub fn estimate_uniform_derivative(
    mu: &dyn SetFunction,
    nu: &dyn SetFunction,
    points: &[Vec<f64>],
    tol: f64,
    schedule: &Schedule,
) -> Result<UniformReport> {
    schedule.validate()?;
    if points.is_empty() {
        return Err(invalid("points", "need at least one sample point"));
    }
    let mut stages = Vec::new();
    let mut estimates = Vec::new();
    let mut eta = None;
    let mut last_depth = 0;
    for (delta, depth) in schedule.stages() {
        let bounds: Vec<RatioBounds> = points
            .par_iter()
            .map(|p| ratio_bounds(mu, nu, p, delta, depth, Mode::Cauchy, schedule.cluster))
            .collect::<Result<_>>()?;
        let (mut worst, mut max_width) = (0, f64::NEG_INFINITY);
        for (i, b) in bounds.iter().enumerate() {
            if b.width() > max_width {
                max_width = b.width();
                worst = i;
            }
        }
        stages.push(UniformStage { delta, depth, max_width, worst_point: points[worst].clone() });
        estimates = points
            .iter()
            .zip(&bounds)
            .map(|(p, b)| PointEstimate { point: p.clone(), lo: b.lo, hi: b.hi, value: 0.5 * (b.lo + b.hi) })
            .collect();
        last_depth = depth;
        if max_width < tol {
            eta = Some(delta);
            break;
        }
    }
    let h = (-(last_depth as f64)).exp2();
    let ratios: Vec<f64> = points
        .par_iter()
        .map(|p| -> Result<f64> {
            let mut m: f64 = 0.0;
            for c in cells_around(p, h, schedule.cluster) {
                let v = c.volume();
                if v > 0.0 {
                    m = m.max(mu.eval(&c)?.abs() / v);
                }
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let bounded_ratio = ratios.into_iter().fold(0.0, f64::max);
    Ok(UniformReport { uniform: eta.is_some(), eta, tol, stages, estimates, bounded_ratio })
}

// Grid cells of side h whose closure contains p, and runs through them.
fn cells_around(p: &[f64], h: f64, cluster: usize) -> Vec<Interval> {
    let n = p.len();
    let base: Vec<i64> = p.iter().map(|c| (c / h).floor() as i64).collect();
    let mut out = Vec::new();
    for bits in 0..1u64 << n {
        let idx: Vec<i64> = (0..n).map(|i| base[i] - ((bits >> i) & 1) as i64).collect();
        let cell = Interval::from_raw(
            idx.iter().map(|&j| j as f64 * h).collect(),
            idx.iter().map(|&j| (j + 1) as f64 * h).collect(),
        );
        if cell.contains_point(p) {
            for axis in 0..n {
                for len in 2..=cluster {
                    let mut hi = cell.hi().to_vec();
                    hi[axis] += (len - 1) as f64 * h;
                    out.push(Interval::from_raw(cell.lo().to_vec(), hi));
                }
            }
            out.push(cell);
        }
    }
    out
}

/// The family `F_a = {A : μ(A) > a ν(A)}`, scored by `μ(A)/ν(A) − a`.
pub struct LevelPredicate<'a> {
    pub mu: &'a dyn SetFunction,
    pub nu: &'a dyn SetFunction,
    pub level: f64,
}

impl SemiDistributivePredicate for LevelPredicate<'_> {
    fn holds(&self, b: &Interval) -> Result<bool> {
        Ok(self.mu.eval(b)? > self.level * self.nu.eval(b)?)
    }

    fn score(&self, b: &Interval) -> Result<Option<f64>> {
        let v = self.nu.eval(b)?;
        Ok((v > NU_FLOOR).then_some(self.mu.eval(b)? / v - self.level))
    }
}

/// Range of the fine-scale ratio `μ/ν` over `s`: cells of a uniform mesh
/// with about 2^16 cells, then repeated zooms around the extreme cells.
pub fn ratio_range(mu: &dyn SetFunction, nu: &dyn SetFunction, s: &Interval) -> Result<(f64, f64)> {
    let n = s.dim();
    let depth = (16 / n as u32).max(1);
    let grid = DyadicGrid::new(s.clone(), depth);
    let per = grid.cells_per_axis();
    let total = per.pow(n as u32);
    let cell_at = |grid: &DyadicGrid, mut linear: u64| {
        let mut idx = vec![0u64; n];
        for i in (0..n).rev() {
            idx[i] = linear % per;
            linear /= per;
        }
        grid.cell(&idx)
    };
    let scan = |cells: &mut dyn Iterator<Item = Interval>| -> Result<(f64, Interval, f64, Interval)> {
        let mut best: Option<(f64, Interval, f64, Interval)> = None;
        for c in cells {
            let v = nu.eval(&c)?;
            if v <= NU_FLOOR {
                continue;
            }
            let r = mu.eval(&c)? / v;
            best = Some(match best {
                None => (r, c.clone(), r, c),
                Some((lo, lc, hi, hc)) => {
                    let (lo, lc) = if r < lo { (r, c.clone()) } else { (lo, lc) };
                    let (hi, hc) = if r > hi { (r, c) } else { (hi, hc) };
                    (lo, lc, hi, hc)
                }
            });
        }
        best.ok_or_else(|| invalid("s", "no cell with positive reference measure"))
    };
    let parts: Vec<(f64, Interval, f64, Interval)> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| scan(&mut (c * CHUNK..((c + 1) * CHUNK).min(total)).map(|l| cell_at(&grid, l))))
        .collect::<Result<_>>()?;
    let (mut lo, mut lo_cell, mut hi, mut hi_cell) = parts[0].clone();
    for (l, lc, h, hc) in parts.into_iter().skip(1) {
        if l < lo {
            (lo, lo_cell) = (l, lc);
        }
        if h > hi {
            (hi, hi_cell) = (h, hc);
        }
    }
    // zoom: rescan the neighbourhood of each extreme at a finer scale
    for _ in 0..6 {
        for (target, is_lo) in [(lo_cell.clone(), true), (hi_cell.clone(), false)] {
            let sides: Vec<(f64, f64)> = (0..n)
                .map(|i| {
                    let w = target.side(i);
                    ((target.lo()[i] - w).max(s.lo()[i]), (target.hi()[i] + w).min(s.hi()[i]))
                })
                .collect();
            let hood = Interval::from_sides(&sides)?;
            let fine = DyadicGrid::new(hood, (12 / n as u32).max(1));
            let (l, lc, h, hc) = scan(&mut fine.cells().into_iter())?;
            if is_lo && l < lo {
                (lo, lo_cell) = (l, lc);
            } else if !is_lo && h > hi {
                (hi, hi_cell) = (h, hc);
            }
        }
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanValueViolation {
    pub set: Interval,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanValueReport {
    pub g_inf: f64,
    pub g_sup: f64,
    pub samples: usize,
    pub tol: f64,
    pub violations: usize,
    pub worst: Option<MeanValueViolation>,
}

/// `inf ĝ − tol ≤ μ(A)/ν(A) ≤ sup ĝ + tol` on random sub-boxes `A ⊆ S`.
pub fn mean_value_check(
    mu: &dyn SetFunction,
    nu: &dyn SetFunction,
    s: &Interval,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<MeanValueReport> {
    let (g_inf, g_sup) = ratio_range(mu, nu, s)?;
    let ratios: Vec<Option<(Interval, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let a = random_box_in(&mut rng, s);
            let v = nu.eval(&a)?;
            if v <= NU_FLOOR {
                return Ok(None);
            }
            Ok(Some((a.clone(), mu.eval(&a)? / v)))
        })
        .collect::<Result<_>>()?;
    let mut violations = 0;
    let mut worst: Option<(f64, MeanValueViolation)> = None;
    for (a, r) in ratios.into_iter().flatten() {
        let excess = (g_inf - tol - r).max(r - g_sup - tol);
        if excess > 0.0 {
            violations += 1;
            if worst.as_ref().is_none_or(|(e, _)| excess > *e) {
                worst = Some((excess, MeanValueViolation { set: a, ratio: r }));
            }
        }
    }
    Ok(MeanValueReport { g_inf, g_sup, samples, tol, violations, worst: worst.map(|w| w.1) })
}

/// Sub-box of `s` with uniformly random corners.
pub(crate) fn random_box_in(rng: &mut rand_chacha::ChaCha8Rng, s: &Interval) -> Interval {
    use rand::Rng;
    let sides: Vec<(f64, f64)> = (0..s.dim())
        .map(|i| {
            let a = rng.gen_range(s.lo()[i]..=s.hi()[i]);
            let b = rng.gen_range(s.lo()[i]..=s.hi()[i]);
            (a.min(b), a.max(b))
        })
        .collect();
    Interval::from_raw(sides.iter().map(|x| x.0).collect(), sides.iter().map(|x| x.1).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCheck {
    pub level: f64,
    /// Cells certified inside `{g ≥ a}` / `{g ≤ a}`.
    pub cells_above: usize,
    pub cells_below: usize,
    pub violations: usize,
    /// Most negative slack `μ(A) − a ν(A)` (above) or `a ν(A) − μ(A)` (below).
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RnReport {
    pub depth: u32,
    pub tol: f64,
    pub levels: Vec<LevelCheck>,
}

impl RnReport {
    pub fn passed(&self) -> bool {
        self.levels.iter().all(|l| l.violations == 0)
    }
}

/// `μ(A) ≥ a ν(A)` on cells certified inside `{g ≥ a}` and `μ(A) ≤ a ν(A)`
/// on cells inside `{g ≤ a}`, each up to `tol`.
pub fn rn_inequality_check(
    mu: &dyn SetFunction,
    nu: &dyn SetFunction,
    g: SharedFn,
    domain: &Interval,
    levels: &[f64],
    depth: u32,
    tol: f64,
) -> Result<RnReport> {
    let est = RangeEstimator::new(g, domain, RangeMethod::Auto)?;
    let cells = DyadicGrid::new(domain.clone(), depth).cells();
    let data: Vec<(f64, f64, f64, f64)> = cells
        .par_iter()
        .map(|c| {
            let r = est.range(c)?;
            Ok((r.lo, r.hi, mu.eval(c)?, nu.eval(c)?))
        })
        .collect::<Result<_>>()?;
    let levels = levels
        .iter()
        .map(|&a| {
            let mut check = LevelCheck { level: a, cells_above: 0, cells_below: 0, violations: 0, min_slack: f64::INFINITY };
            for &(lo, hi, m, v) in &data {
                for (above, certified, slack) in [(true, lo >= a, m - a * v), (false, hi <= a, a * v - m)] {
                    if certified {
                        if above {
                            check.cells_above += 1;
                        } else {
                            check.cells_below += 1;
                        }
                        check.min_slack = check.min_slack.min(slack);
                        if slack < -tol {
                            check.violations += 1;
                        }
                    }
                }
            }
            check
        })
        .collect();
    Ok(RnReport { depth, tol, levels })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    /// `(h, ω(h))`, `ω(h) = max |ĝ(x) − ĝ(y)|` over pairs with `|x − y| ≤ h`.
    pub ladder: Vec<(f64, f64)>,
    pub nondecreasing: bool,
    /// `ω(h/2) ≤ ω(h) + 2 tol` along the ladder.
    pub shrinking: bool,
}

/// Empirical modulus of continuity of point estimates.
pub fn continuity_probe(estimates: &[PointEstimate], ladder: &[f64], tol: f64) -> ContinuityReport {
    let omega = |h: f64| -> f64 {
        let mut w: f64 = 0.0;
        for (i, a) in estimates.iter().enumerate() {
            for b in &estimates[i + 1..] {
                let d: f64 = a.point.iter().zip(&b.point).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                if d <= h {
                    w = w.max((a.value - b.value).abs());
                }
            }
        }
        w
    };
    let mut hs = ladder.to_vec();
    hs.sort_by(f64::total_cmp);
    let points: Vec<(f64, f64)> = hs.iter().map(|&h| (h, omega(h))).collect();
    let nondecreasing = points.windows(2).all(|w| w[0].1 <= w[1].1);
    let shrinking = hs.iter().all(|&h| omega(h / 2.0) <= omega(h) + 2.0 * tol);
    ContinuityReport { ladder: points, nondecreasing, shrinking }
}

/// Strict-derivative estimates at each point, in point order.
pub fn estimate_on_points(
    mu: &dyn SetFunction,
    nu: &dyn SetFunction,
    points: &[Vec<f64>],
    tol: f64,
    schedule: &Schedule,
) -> Result<Vec<(PointEstimate, DerivativeEstimate)>> {
    points
        .par_iter()
        .map(|p| {
            let e = estimate_strict_derivative(mu, nu, p, tol, schedule)?;
            Ok((PointEstimate { point: p.clone(), lo: e.lo, hi: e.hi, value: e.value }, e))
        })
        .collect()
}

//! Peano–Jordan inner and outer measure on dyadic grids.
//!
//! Cells of the depth-`d` grid over a region's bounds are counted with a
//! hierarchical descent: a coarse cell classified Inside contributes all its
//! depth-`d` sub-cells at once, an Outside cell contributes none, and only
//! Indeterminate cells are refined. Counts are integers, so results are exact
//! multiples of the cell volume and independent of scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{DyadicGrid, Hyperplane, Interval};
use crate::region::{Classification, Region};

// Levels of the descent that fan out over the thread pool.
const PARALLEL_LEVELS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    pub inner: f64,
    pub outer: f64,
    pub depth: u32,
    pub cells_inside: u64,
    pub cells_indeterminate: u64,
}

impl MeasureReport {
    pub fn gap(&self) -> f64 {
        self.outer - self.inner
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    inside: u64,
    indeterminate: u64,
    // volume from cells cut by a window that is not grid-aligned
    part_inner: f64,
    part_outer: f64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.inside += o.inside;
        self.indeterminate += o.indeterminate;
        self.part_inner += o.part_inner;
        self.part_outer += o.part_outer;
        self
    }
}

enum Window {
    Whole,
    // depth-d index range [lo, hi) per axis
    Aligned(Vec<(u64, u64)>),
    Free(Interval),
}

struct Walk<'a> {
    region: &'a Region,
    domain: &'a Interval,
    depth: u32,
    window: Window,
}

impl Walk<'_> {
    fn cell(&self, level: u32, idx: &[u64]) -> Interval {
        DyadicGrid::new(self.domain.clone(), level).cell(idx)
    }

    fn visit(&self, level: u32, idx: &[u64]) -> Tally {
        let n = idx.len();
        let shift = self.depth - level;
        let cell = self.cell(level, idx);
        let mut tally = Tally::default();
        // number of depth-d sub-cells in the window, or None if the cell is
        // only partly covered by a free window
        let covered: Option<u64> = match &self.window {
            Window::Whole => Some(1u64 << (n as u32 * shift)),
            Window::Aligned(range) => {
                let mut count = 1u64;
                for (i, &(wl, wh)) in range.iter().enumerate() {
                    let (cl, ch) = (idx[i] << shift, (idx[i] + 1) << shift);
                    count *= ch.min(wh).saturating_sub(cl.max(wl));
                }
                Some(count)
            }
            Window::Free(w) => {
                if !cell.overlaps_interior(w) {
                    Some(0)
                } else if w.contains(&cell) {
                    Some(1u64 << (n as u32 * shift))
                } else {
                    None
                }
            }
        };
        if covered == Some(0) {
            return tally;
        }
        match self.region.classify(&cell) {
            Classification::Outside => {}
            Classification::Inside => match covered {
                Some(c) => tally.inside += c,
                None => {
                    let v = self.clipped(&cell).volume();
                    tally.part_inner += v;
                    tally.part_outer += v;
                }
            },
            Classification::Indeterminate if level < self.depth => {
                let children = children(idx);
                let visit = |c: &Vec<u64>| self.visit(level + 1, c);
                tally = if level < PARALLEL_LEVELS {
                    let parts: Vec<Tally> = children.par_iter().map(visit).collect();
                    parts.into_iter().fold(Tally::default(), Tally::merge)
                } else {
                    children.iter().map(visit).fold(Tally::default(), Tally::merge)
                };
            }
            Classification::Indeterminate => match covered {
                Some(c) => tally.indeterminate += c,
                None => {
                    let part = self.clipped(&cell);
                    let v = part.volume();
                    match self.region.classify(&part) {
                        Classification::Inside => {
                            tally.part_inner += v;
                            tally.part_outer += v;
                        }
                        Classification::Indeterminate => tally.part_outer += v,
                        Classification::Outside => {}
                    }
                }
            },
        }
        tally
    }

    fn clipped(&self, cell: &Interval) -> Interval {
        match &self.window {
            Window::Free(w) => cell.intersection(w).unwrap_or_else(|| Interval::point(cell.lo())),
            _ => cell.clone(),
        }
    }

    fn run(self) -> MeasureReport {
        let n = self.domain.dim();
        let t = self.visit(0, &vec![0; n]);
        let cell_volume = DyadicGrid::new(self.domain.clone(), self.depth).cell_volume();
        let inner = t.inside as f64 * cell_volume + t.part_inner;
        let outer = (t.inside + t.indeterminate) as f64 * cell_volume + t.part_outer;
        MeasureReport { inner, outer, depth: self.depth, cells_inside: t.inside, cells_indeterminate: t.indeterminate }
    }
}

fn children(idx: &[u64]) -> Vec<Vec<u64>> {
    let n = idx.len();
    (0..1u64 << n)
        .map(|bits| (0..n).map(|i| 2 * idx[i] + ((bits >> (n - 1 - i)) & 1)).collect())
        .collect()
}

fn check_depth(dim: usize, depth: u32) -> Result<()> {
    if dim as u64 * depth as u64 > 62 {
        return Err(invalid("depth", format!("depth {depth} in dimension {dim} exceeds 2^62 cells")));
    }
    Ok(())
}

fn empty_report(depth: u32) -> MeasureReport {
    MeasureReport { inner: 0.0, outer: 0.0, depth, cells_inside: 0, cells_indeterminate: 0 }
}

/// Inner and outer measure at dyadic depth `depth` over the region's bounds.
pub fn measure(r: &Region, depth: u32) -> Result<MeasureReport> {
    check_depth(r.dim(), depth)?;
    if r.bounds().volume() == 0.0 {
        return Ok(empty_report(depth));
    }
    Ok(Walk { region: r, domain: r.bounds(), depth, window: Window::Whole }.run())
}

pub fn outer_measure(r: &Region, depth: u32) -> Result<f64> {
    Ok(measure(r, depth)?.outer)
}

pub fn inner_measure(r: &Region, depth: u32) -> Result<f64> {
    Ok(measure(r, depth)?.inner)
}

/// Measure of `r ∩ window` on the grid of `r`'s bounds.
///
/// When the window's faces lie on grid lines the result is an exact sub-sum
/// of [`measure`], so windows that partition the bounds add up exactly.
/// Otherwise cells cut by the window contribute the volume of their part
/// inside it, classified on that part.
pub fn measure_within(r: &Region, window: &Interval, depth: u32) -> Result<MeasureReport> {
    check_depth(r.dim(), depth)?;
    if window.dim() != r.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), found: window.dim() });
    }
    let Some(w) = window.intersection(r.bounds()) else {
        return Ok(empty_report(depth));
    };
    if w.volume() == 0.0 {
        return Ok(empty_report(depth));
    }
    let walk = |window| Walk { region: r, domain: r.bounds(), depth, window }.run();
    Ok(match aligned_range(r.bounds(), &w, depth) {
        Some(range) => walk(Window::Aligned(range)),
        None => walk(Window::Free(w)),
    })
}

fn aligned_range(domain: &Interval, w: &Interval, depth: u32) -> Option<Vec<(u64, u64)>> {
    let grid = DyadicGrid::new(domain.clone(), depth);
    (0..domain.dim())
        .map(|i| Some((grid.line_index(i, w.lo()[i])?, grid.line_index(i, w.hi()[i])?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurability {
    pub measurable: bool,
    /// First depth at which the gap fell below the tolerance.
    pub depth: Option<u32>,
    pub report: MeasureReport,
}

/// Refines until `outer − inner < tol` or `max_depth` is exhausted.
pub fn is_measurable(r: &Region, tol: f64, max_depth: u32) -> Result<Measurability> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "tolerance must be positive"));
    }
    let mut last = None;
    for d in 0..=max_depth {
        let report = measure(r, d)?;
        if report.gap() < tol {
            return Ok(Measurability { measurable: true, depth: Some(d), report });
        }
        last = Some(report);
    }
    Ok(Measurability { measurable: false, depth: None, report: last.expect("loop runs at least once") })
}

/// Convergence table for depths `d0..=d1`.
pub fn measure_table(r: &Region, d0: u32, d1: u32) -> Result<Vec<MeasureReport>> {
    if d0 > d1 {
        return Err(invalid("table", format!("empty depth range {d0}..{d1}")));
    }
    (d0..=d1).map(|d| measure(r, d)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutResidual {
    pub outer_residual: f64,
    pub inner_residual: f64,
    pub whole: MeasureReport,
    pub below: MeasureReport,
    pub above: MeasureReport,
}

/// `|μ(r ∩ H⁻) + μ(r ∩ H⁺) − μ(r)|` for inner and outer measure.
pub fn cut_additivity_check(r: &Region, h: &Hyperplane, depth: u32) -> Result<CutResidual> {
    let b = r.bounds();
    if h.axis >= r.dim() {
        return Err(Error::InvalidAxis { axis: h.axis, dim: r.dim() });
    }
    let grid = DyadicGrid::new(b.clone(), depth);
    if grid.line_index(h.axis, h.offset).is_none() {
        return Err(Error::NotGridAligned { axis: h.axis, offset: h.offset, depth });
    }
    let whole = measure(r, depth)?;
    let below = measure_within(r, &b.with_side(h.axis, b.lo()[h.axis], h.offset), depth)?;
    let above = measure_within(r, &b.with_side(h.axis, h.offset, b.hi()[h.axis]), depth)?;
    // aligned windows have no partial cells, so compare integer counts
    let cv = grid.cell_volume();
    let outer = |m: &MeasureReport| m.cells_inside as i128 + m.cells_indeterminate as i128;
    let inner = |m: &MeasureReport| m.cells_inside as i128;
    Ok(CutResidual {
        outer_residual: (outer(&below) + outer(&above) - outer(&whole)).unsigned_abs() as f64 * cv,
        inner_residual: (inner(&below) + inner(&above) - inner(&whole)).unsigned_abs() as f64 * cv,
        whole,
        below,
        above,
    })
}

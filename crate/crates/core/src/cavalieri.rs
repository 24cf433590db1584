//! Volumes by slicing: `∫ μ(F_x) dx` over sections perpendicular to an axis.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::measure::measure;
use crate::region::Region;

/// Largest boundary share of a section, relative to the volume of its
/// bounding box, for which the section measure is trusted.
pub const BOUNDARY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceReport {
    pub at: f64,
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavalieriResult {
    /// Midpoint rule on `½(inner + outer)` of each section.
    pub value: f64,
    pub inner_sum: f64,
    pub outer_sum: f64,
    pub axis: usize,
    pub slices: usize,
    pub slice_depth: u32,
    /// Every section had `outer − inner` below the threshold share of its
    /// bounding box: the empirical form of "the boundary of each section has
    /// measure zero".
    pub boundary_condition: bool,
    pub max_boundary_fraction: f64,
    pub worst_slice: f64,
}

/// Slices `r` at the midpoints of `2^slices_log2` equal steps along `axis`
/// and measures each section at `slice_depth`.
pub fn slice_integral(r: &Region, axis: usize, slices_log2: u32, slice_depth: u32) -> Result<CavalieriResult> {
    if slices_log2 > 20 {
        return Err(invalid("slices", "at most 2^20 slices"));
    }
    let b = r.bounds();
    if axis >= b.dim() {
        return Err(crate::error::Error::InvalidAxis { axis, dim: b.dim() });
    }
    let count = 1usize << slices_log2;
    let (lo, step) = (b.lo()[axis], b.side(axis) / count as f64);
    let sections: Vec<(SliceReport, f64)> = (0..count)
        .into_par_iter()
        .map(|j| {
            let at = lo + step * (j as f64 + 0.5);
            let s = Region::section(r.clone(), axis, at)?;
            let m = measure(&s, slice_depth)?;
            let room = s.bounds().volume();
            let fraction = if room > 0.0 { m.gap() / room } else { 0.0 };
            Ok((SliceReport { at, inner: m.inner, outer: m.outer }, fraction))
        })
        .collect::<Result<_>>()?;
    let (mut inner_sum, mut outer_sum) = (0.0, 0.0);
    let (mut worst, mut worst_at) = (0.0, lo);
    for (s, f) in &sections {
        inner_sum += s.inner * step;
        outer_sum += s.outer * step;
        if *f > worst {
            worst = *f;
            worst_at = s.at;
        }
    }
    Ok(CavalieriResult {
        value: 0.5 * (inner_sum + outer_sum),
        inner_sum,
        outer_sum,
        axis,
        slices: count,
        slice_depth,
        boundary_condition: worst <= BOUNDARY_THRESHOLD,
        max_boundary_fraction: worst,
        worst_slice: worst_at,
    })
}

/// Section measures `½(inner + outer)` at the slice midpoints.
pub fn slice_profile(r: &Region, axis: usize, slices_log2: u32, slice_depth: u32) -> Result<Vec<SliceReport>> {
    let b = r.bounds();
    let count = 1usize << slices_log2;
    let (lo, step) = (b.lo()[axis], b.side(axis) / count as f64);
    (0..count)
        .into_par_iter()
        .map(|j| {
            let at = lo + step * (j as f64 + 0.5);
            let m = measure(&Region::section(r.clone(), axis, at)?, slice_depth)?;
            Ok(SliceReport { at, inner: m.inner, outer: m.outer })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Interval, Point};

    #[test]
    fn unit_square_and_disk() {
        let sq = Region::cuboid(Interval::unit(2));
        let r = slice_integral(&sq, 0, 4, 6).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.boundary_condition);
        let disk = Region::ball(&Point::new(vec![0.0, 0.0]).unwrap(), 1.0).unwrap();
        let r = slice_integral(&disk, 0, 8, 12).unwrap();
        assert!((r.value - std::f64::consts::PI).abs() < 0.01, "{r:?}");
    }
}

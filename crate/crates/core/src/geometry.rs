//! Axis-aligned boxes ("n-intervals"), points and coordinate hyperplanes.
//!
//! Every grid the library generates has dyadic-rational endpoints relative to
//! its domain, so volumes of cells are exact in binary floating point whenever
//! the domain endpoints are themselves dyadic.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of n-dimensional space with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInterval("a point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInterval(format!("non-finite coordinate in {coords:?}")));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The hyperplane `{x : x[axis] = offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub axis: usize,
    pub offset: f64,
}

impl Hyperplane {
    pub fn new(axis: usize, offset: f64) -> Self {
        Self { axis, offset }
    }
}

/// A closed axis-aligned box `[lo_0, hi_0] x ... x [lo_{n-1}, hi_{n-1}]`.
///
/// Degenerate boxes (some side of length zero) are legal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Interval {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        if lo.is_empty() {
            return Err(Error::InvalidInterval("dimension must be at least 1".into()));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidInterval(format!("non-finite endpoint on axis {i}")));
            }
            if a > b {
                return Err(Error::InvalidInterval(format!("lo > hi on axis {i}: {a} > {b}")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Builds a box from `(lo, hi)` pairs, one per axis.
    pub fn from_sides(sides: &[(f64, f64)]) -> Result<Self> {
        Self::new(sides.iter().map(|s| s.0).collect(), sides.iter().map(|s| s.1).collect())
    }

    /// `[lo, hi]^n`.
    pub fn cube(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    /// `[0, 1]^n`.
    pub fn unit(n: usize) -> Self {
        Self { lo: vec![0.0; n], hi: vec![1.0; n] }
    }

    /// The degenerate box holding a single point.
    pub fn point(p: &[f64]) -> Self {
        Self { lo: p.to_vec(), hi: p.to_vec() }
    }

    // Only for callers that already hold validated endpoints.
    pub(crate) fn from_raw(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert!(lo.len() == hi.len() && lo.iter().zip(&hi).all(|(a, b)| a <= b));
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i) * self.side(i)).sum::<f64>().sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn is_degenerate(&self) -> bool {
        (0..self.dim()).any(|i| self.side(i) == 0.0)
    }

    /// Index of the longest side; the lowest index wins ties.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for i in 1..self.dim() {
            if self.side(i) > self.side(best) {
                best = i;
            }
        }
        best
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && (0..self.dim()).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    /// Closed containment `other ⊆ self`.
    pub fn contains(&self, other: &Interval) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Closed intersection; `None` when the boxes do not meet at all.
    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        if other.dim() != self.dim() {
            return None;
        }
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let a = self.lo[i].max(other.lo[i]);
            let b = self.hi[i].min(other.hi[i]);
            if a > b {
                return None;
            }
            lo.push(a);
            hi.push(b);
        }
        Some(Interval { lo, hi })
    }

    /// True when the intersection has positive volume.
    pub fn overlaps_interior(&self, other: &Interval) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| self.lo[i].max(other.lo[i]) < self.hi[i].min(other.hi[i]))
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    /// Cartesian product `self x other`.
    pub fn product(&self, other: &Interval) -> Interval {
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&other.lo);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&other.hi);
        Interval { lo, hi }
    }

    /// The sub-box made of axes `range`.
    pub fn project(&self, axes: std::ops::Range<usize>) -> Interval {
        Interval { lo: self.lo[axes.clone()].to_vec(), hi: self.hi[axes].to_vec() }
    }

    /// Copy with axis `axis` replaced by `[lo, hi]`.
    pub fn with_side(&self, axis: usize, lo: f64, hi: f64) -> Interval {
        let mut out = self.clone();
        out.lo[axis] = lo;
        out.hi[axis] = hi;
        out
    }

    /// Splits along `h` into `(b ∩ H⁻, b ∩ H⁺)`.
    ///
    /// A side is absent when it would be flat in the cutting direction; when
    /// both are present they share exactly the cutting face.
    pub fn cut(&self, h: &Hyperplane) -> Result<(Option<Interval>, Option<Interval>)> {
        if h.axis >= self.dim() {
            return Err(Error::InvalidAxis { axis: h.axis, dim: self.dim() });
        }
        let (a, b) = (self.lo[h.axis], self.hi[h.axis]);
        let lower = (h.offset > a).then(|| self.with_side(h.axis, a, h.offset.min(b)));
        let upper = (h.offset < b).then(|| self.with_side(h.axis, h.offset.max(a), b));
        Ok((lower, upper))
    }

    /// True when `h` passes through the interior of the box.
    pub fn crossed_by(&self, h: &Hyperplane) -> bool {
        h.axis < self.dim() && self.lo[h.axis] < h.offset && h.offset < self.hi[h.axis]
    }

    /// The `2^n` boxes obtained by bisecting every axis at its midpoint, in
    /// lexicographic order (axis 0 most significant).
    pub fn dyadic_children(&self) -> Vec<Interval> {
        let n = self.dim();
        let mid = self.center();
        (0..1usize << n)
            .map(|code| {
                let mut lo = self.lo.clone();
                let mut hi = self.hi.clone();
                for i in 0..n {
                    if code >> (n - 1 - i) & 1 == 1 {
                        lo[i] = mid[i];
                    } else {
                        hi[i] = mid[i];
                    }
                }
                Interval { lo, hi }
            })
            .collect()
    }

    /// Halves of the box along `axis`.
    pub fn bisect(&self, axis: usize) -> (Interval, Interval) {
        let m = 0.5 * (self.lo[axis] + self.hi[axis]);
        (self.with_side(axis, self.lo[axis], m), self.with_side(axis, m, self.hi[axis]))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{}, {}]", self.lo[i], self.hi[i])?;
        }
        Ok(())
    }
}

/// The uniform grid of `2^depth` cells per axis over `domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicGrid {
    pub domain: Interval,
    pub depth: u32,
}

impl DyadicGrid {
    pub fn new(domain: Interval, depth: u32) -> Self {
        Self { domain, depth }
    }

    pub fn cells_per_axis(&self) -> u64 {
        1u64 << self.depth
    }

    pub fn cell_side(&self, axis: usize) -> f64 {
        self.domain.side(axis) / self.cells_per_axis() as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.domain.dim()).map(|i| self.cell_side(i)).product()
    }

    /// Grid line coordinate `k` on `axis` (exact for dyadic domains).
    pub fn line(&self, axis: usize, k: u64) -> f64 {
        let n = self.cells_per_axis();
        if k == n {
            return self.domain.hi()[axis];
        }
        self.domain.lo()[axis] + self.domain.side(axis) * (k as f64 / n as f64)
    }

    pub fn cell(&self, index: &[u64]) -> Interval {
        let lo = index.iter().enumerate().map(|(i, &k)| self.line(i, k)).collect();
        let hi = index.iter().enumerate().map(|(i, &k)| self.line(i, k + 1)).collect();
        Interval { lo, hi }
    }

    /// Index of the grid line equal to `offset` on `axis`, if any.
    pub fn line_index(&self, axis: usize, offset: f64) -> Option<u64> {
        let n = self.cells_per_axis();
        let t = (offset - self.domain.lo()[axis]) / self.domain.side(axis) * n as f64;
        if !(0.0..=n as f64).contains(&t) {
            return None;
        }
        let k = t.round() as u64;
        (self.line(axis, k) == offset).then_some(k)
    }

    /// All cells in lexicographic index order.
    pub fn cells(&self) -> Vec<Interval> {
        let n = self.domain.dim();
        let per = self.cells_per_axis();
        let total = per.pow(n as u32);
        let mut out = Vec::with_capacity(total as usize);
        let mut index = vec![0u64; n];
        for _ in 0..total {
            out.push(self.cell(&index));
            for i in (0..n).rev() {
                index[i] += 1;
                if index[i] < per {
                    break;
                }
                index[i] = 0;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(sides: &[(f64, f64)]) -> Interval {
        Interval::from_sides(sides).unwrap()
    }

    #[test]
    fn cut_examples() {
        let (l, r) = iv(&[(0.0, 1.0)]).cut(&Hyperplane::new(0, 0.5)).unwrap();
        assert_eq!(l.unwrap(), iv(&[(0.0, 0.5)]));
        assert_eq!(r.unwrap(), iv(&[(0.5, 1.0)]));

        let sq = Interval::unit(2);
        let (l, r) = sq.cut(&Hyperplane::new(1, 0.0)).unwrap();
        assert!(l.is_none());
        assert_eq!(r.unwrap(), sq);

        let b = iv(&[(0.0, 2.0), (0.0, 1.0)]);
        let (l, r) = b.cut(&Hyperplane::new(0, 0.5)).unwrap();
        assert_eq!(l.unwrap(), iv(&[(0.0, 0.5), (0.0, 1.0)]));
        assert_eq!(r.unwrap(), iv(&[(0.5, 2.0), (0.0, 1.0)]));
    }

    #[test]
    fn cut_rejects_bad_axis() {
        let err = Interval::unit(2).cut(&Hyperplane::new(2, 0.5)).unwrap_err();
        assert_eq!(err, Error::InvalidAxis { axis: 2, dim: 2 });
    }

    #[test]
    fn volumes_and_diameters() {
        assert_eq!(Interval::unit(3).volume(), 1.0);
        assert_eq!(iv(&[(0.0, 0.5), (0.0, 2.0)]).volume(), 1.0);
        assert_eq!(iv(&[(0.0, 0.0), (0.0, 1.0)]).volume(), 0.0);
        assert!((Interval::unit(2).diameter() - 1.414_213_56).abs() < 1e-8);
        assert_eq!(iv(&[(0.0, 3.0)]).diameter(), 3.0);
        assert_eq!(iv(&[(1.0, 1.0), (2.0, 2.0)]).diameter(), 0.0);
    }

    #[test]
    fn children_examples() {
        let c = Interval::unit(1).dyadic_children();
        assert_eq!(c, vec![iv(&[(0.0, 0.5)]), iv(&[(0.5, 1.0)])]);
        let c = Interval::unit(2).dyadic_children();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|b| b.side(0) == 0.5 && b.side(1) == 0.5));
        assert_eq!(c[1], iv(&[(0.0, 0.5), (0.5, 1.0)]));
        let c = iv(&[(0.0, 2.0), (0.0, 1.0)]).dyadic_children();
        assert!(c.iter().all(|b| b.volume() == 0.5));
    }

    #[test]
    fn rejects_malformed() {
        assert!(Interval::new(vec![1.0], vec![0.0]).is_err());
        assert!(Interval::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(Interval::new(vec![], vec![]).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn grid_lines_are_exact() {
        let g = DyadicGrid::new(Interval::cube(-1.0, 1.0, 2).unwrap(), 3);
        assert_eq!(g.line(0, 4), 0.0);
        assert_eq!(g.line_index(0, 0.25), Some(5));
        assert_eq!(g.line_index(0, 0.3), None);
        assert_eq!(g.cells().len(), 64);
        let total: f64 = g.cells().iter().map(Interval::volume).sum();
        assert_eq!(total, 4.0);
    }
}

//! Figures as three-valued oracles over boxes.
//!
//! A [`Region`] answers, for any box, whether the box lies wholly inside the
//! figure, wholly outside it, or neither can be certified. `Indeterminate` is
//! always a safe answer; the other two must be sound.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::expr::Enclosure;
use crate::func::{RangeBound, RangeEstimator, RangeMethod, SharedFn};
use crate::geometry::{Interval, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Inside,
    Outside,
    Indeterminate,
}

use Classification::*;

impl Classification {
    pub fn negate(self) -> Self {
        match self {
            Inside => Outside,
            Outside => Inside,
            Indeterminate => Indeterminate,
        }
    }

    pub fn or(self, other: Self) -> Self {
        match (self, other) {
            (Inside, _) | (_, Inside) => Inside,
            (Outside, Outside) => Outside,
            _ => Indeterminate,
        }
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (Outside, _) | (_, Outside) => Outside,
            (Inside, Inside) => Inside,
            _ => Indeterminate,
        }
    }
}

// Relative slack for floating-point distance and angle comparisons.
const SLACK: f64 = 1e-12;

#[derive(Debug)]
enum Node {
    Empty,
    Cuboid(Interval),
    Ball { center: Vec<f64>, radius: f64 },
    Hypograph { f: RangeEstimator, a: f64, b: f64 },
    PolarStar { rho: RangeEstimator },
    Union(Vec<Region>),
    Intersect(Vec<Region>),
    Complement { of: Region, within: Interval },
    Dense,
    Product(Vec<Region>),
    Section { of: Region, axis: usize, at: f64 },
}

/// A figure in `R^n` with a bounding box.
#[derive(Clone)]
pub struct Region {
    node: Arc<Node>,
    bounds: Interval,
    label: String,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Region({} in {})", self.label, self.bounds)
    }
}

impl Region {
    fn make(node: Node, bounds: Interval, label: String) -> Region {
        Region { node: Arc::new(node), bounds, label }
    }

    /// The figure with no points.
    pub fn empty(bounds: Interval) -> Region {
        Self::make(Node::Empty, bounds, "empty".into())
    }

    pub fn cuboid(b: Interval) -> Region {
        let label = format!("box {b}");
        Self::make(Node::Cuboid(b.clone()), b, label)
    }

    /// Closed ball.
    pub fn ball(center: &Point, radius: f64) -> Result<Region> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", "radius must be positive"));
        }
        let c = center.coords().to_vec();
        let bounds = Interval::new(c.iter().map(|x| x - radius).collect(), c.iter().map(|x| x + radius).collect())?;
        let label = format!("ball({center}, {radius})");
        Ok(Self::make(Node::Ball { center: c, radius }, bounds, label))
    }

    /// `{(x, y) : a ≤ x ≤ b, 0 ≤ y ≤ f(x)}`.
    pub fn hypograph(f: SharedFn, a: f64, b: f64, method: RangeMethod) -> Result<Region> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid("a", format!("need a < b, got [{a}, {b}]")));
        }
        let domain = Interval::from_sides(&[(a, b)])?;
        let f = RangeEstimator::new(f, &domain, method)?;
        let mut top: f64 = 0.0;
        for piece in split(a, b, 64) {
            top = top.max(f.range(&Interval::from_raw(vec![piece.0], vec![piece.1]))?.hi);
        }
        let label = format!("hypograph({} on [{a}, {b}])", f.function().label());
        Ok(Self::make(Node::Hypograph { f, a, b }, Interval::from_sides(&[(a, b), (0.0, top)])?, label))
    }

    /// `{(r cos θ, r sin θ) : 0 ≤ r ≤ ρ(θ)}` for `θ ∈ [0, 2π]`.
    pub fn polar_star(rho: SharedFn, method: RangeMethod) -> Result<Region> {
        for k in 0..=1024 {
            let t = TAU * k as f64 / 1024.0;
            let v = rho.eval(&[t])?;
            if v < 0.0 {
                return Err(invalid("rho", format!("rho({t}) = {v} is negative")));
            }
        }
        let rho = RangeEstimator::new(rho, &Interval::from_raw(vec![0.0], vec![TAU]), method)?;
        let mut hull: Option<(Enclosure, Enclosure)> = None;
        for (t0, t1) in split(0.0, TAU, 256) {
            let r = rho.range(&Interval::from_raw(vec![t0], vec![t1]))?;
            let r = Enclosure::new(0.0, r.hi.max(0.0));
            let theta = Enclosure::new(t0, t1);
            let (x, y) = (r.mul(theta.cos()), r.mul(theta.sin()));
            hull = Some(match hull {
                None => (x, y),
                Some((hx, hy)) => (hx.hull(&x), hy.hull(&y)),
            });
        }
        let (x, y) = hull.expect("non-empty split");
        let bounds = Interval::from_sides(&[(x.lo, x.hi), (y.lo, y.hi)])?;
        let label = format!("polar_star({})", rho.function().label());
        Ok(Self::make(Node::PolarStar { rho }, bounds, label))
    }

    pub fn union(parts: Vec<Region>) -> Result<Region> {
        let bounds = common_dim(&parts)?.iter().skip(1).fold(parts[0].bounds.clone(), |b, r| b.hull(&r.bounds));
        let label = join("union", &parts);
        Ok(Self::make(Node::Union(parts), bounds, label))
    }

    pub fn intersect(parts: Vec<Region>) -> Result<Region> {
        common_dim(&parts)?;
        let mut bounds = Some(parts[0].bounds.clone());
        for r in &parts[1..] {
            bounds = bounds.and_then(|b| b.intersection(&r.bounds));
        }
        let label = join("intersect", &parts);
        match bounds {
            Some(b) => Ok(Self::make(Node::Intersect(parts), b, label)),
            None => Ok(Self::make(Node::Empty, Interval::point(parts[0].bounds.lo()), label)),
        }
    }

    /// `within \ r`.
    pub fn complement_within(r: Region, within: Interval) -> Result<Region> {
        check_dim(within.dim(), r.dim())?;
        let label = format!("complement({} within {within})", r.label);
        Ok(Self::make(Node::Complement { of: r, within: within.clone() }, within, label))
    }

    /// A dense set with empty interior in `bounds`: every box meeting the
    /// bounds is Indeterminate.
    pub fn dense(bounds: Interval) -> Region {
        let label = format!("dense({bounds})");
        Self::make(Node::Dense, bounds, label)
    }

    /// Cartesian product; coordinates of the factors are concatenated.
    pub fn product(parts: Vec<Region>) -> Result<Region> {
        if parts.is_empty() {
            return Err(invalid("of", "product needs at least one factor"));
        }
        let bounds = parts[1..].iter().fold(parts[0].bounds.clone(), |b, r| b.product(&r.bounds));
        let label = join("product", &parts);
        Ok(Self::make(Node::Product(parts), bounds, label))
    }

    /// The slice `{p : (p with x[axis] = at) ∈ r}`, one dimension lower.
    pub fn section(r: Region, axis: usize, at: f64) -> Result<Region> {
        let n = r.dim();
        if axis >= n {
            return Err(Error::InvalidAxis { axis, dim: n });
        }
        if n < 2 {
            return Err(invalid("axis", "cannot slice a one-dimensional region"));
        }
        let b = &r.bounds;
        let keep = |v: &[f64]| -> Vec<f64> { v.iter().enumerate().filter(|(i, _)| *i != axis).map(|(_, x)| *x).collect() };
        let bounds = Interval::from_raw(keep(b.lo()), keep(b.hi()));
        let label = format!("section({} at x{} = {at})", r.label, axis + 1);
        Ok(Self::make(Node::Section { of: r, axis, at }, bounds, label))
    }

    /// Restricts the figure to `bounds`, which become the new bounding box.
    pub fn with_bounds(self, bounds: Interval) -> Result<Region> {
        check_dim(bounds.dim(), self.dim())?;
        let label = self.label.clone();
        let inner = Region::intersect(vec![self, Region::cuboid(bounds.clone())])?;
        Ok(Region { node: inner.node, bounds, label })
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Interval {
        &self.bounds
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn classify(&self, b: &Interval) -> Classification {
        if b.dim() != self.dim() || self.bounds.intersection(b).is_none() {
            return Outside;
        }
        match &*self.node {
            Node::Empty => Outside,
            Node::Cuboid(c) => {
                if c.contains(b) {
                    Inside
                } else {
                    Indeterminate
                }
            }
            Node::Ball { center, radius } => classify_ball(center, *radius, b),
            Node::Hypograph { f, a, b: right } => classify_hypograph(f, *a, *right, b),
            Node::PolarStar { rho } => classify_polar(rho, b),
            Node::Union(parts) => parts.iter().fold(Outside, |c, r| c.or(r.classify(b))),
            Node::Intersect(parts) => parts.iter().fold(Inside, |c, r| c.and(r.classify(b))),
            Node::Complement { of, within } => match of.classify(b) {
                Inside => Outside,
                Outside if within.contains(b) => Inside,
                _ => Indeterminate,
            },
            Node::Dense => Indeterminate,
            Node::Product(parts) => {
                let mut offset = 0;
                let mut out = Inside;
                for r in parts {
                    let n = r.dim();
                    out = out.and(r.classify(&b.project(offset..offset + n)));
                    offset += n;
                }
                out
            }
            Node::Section { of, axis, at } => of.classify(&insert_axis(b, *axis, *at, *at)),
        }
    }

    /// Ground-truth membership of a point, where it can be decided
    /// (`None` for dense sets and for points where a function fails).
    pub fn contains_point(&self, p: &[f64]) -> Option<bool> {
        if p.len() != self.dim() {
            return Some(false);
        }
        if !self.bounds.contains_point(p) {
            return Some(false);
        }
        match &*self.node {
            Node::Empty => Some(false),
            Node::Cuboid(c) => Some(c.contains_point(p)),
            Node::Ball { center, radius } => {
                let d2: f64 = center.iter().zip(p).map(|(c, x)| (x - c).powi(2)).sum();
                Some(d2 <= radius * radius)
            }
            Node::Hypograph { f, a, b } => {
                let (x, y) = (p[0], p[1]);
                if x < *a || x > *b || y < 0.0 {
                    return Some(false);
                }
                f.function().eval(&[x]).ok().map(|v| y <= v)
            }
            Node::PolarStar { rho } => {
                let r = p[0].hypot(p[1]);
                if r == 0.0 {
                    return Some(true);
                }
                let t = p[1].atan2(p[0]).rem_euclid(TAU);
                rho.function().eval(&[t]).ok().map(|v| r <= v)
            }
            Node::Union(parts) => {
                let mut unknown = false;
                for r in parts {
                    match r.contains_point(p) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(false)
                }
            }
            Node::Intersect(parts) => {
                let mut unknown = false;
                for r in parts {
                    match r.contains_point(p) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(true)
                }
            }
            Node::Complement { of, within } => {
                if !within.contains_point(p) {
                    return Some(false);
                }
                of.contains_point(p).map(|v| !v)
            }
            Node::Dense => None,
            Node::Product(parts) => {
                let mut offset = 0;
                let mut all = Some(true);
                for r in parts {
                    let n = r.dim();
                    match r.contains_point(&p[offset..offset + n]) {
                        Some(false) => return Some(false),
                        None => all = None,
                        Some(true) => {}
                    }
                    offset += n;
                }
                all
            }
            Node::Section { of, axis, at } => {
                let mut q = p.to_vec();
                q.insert(*axis, *at);
                of.contains_point(&q)
            }
        }
    }
}

fn classify_ball(center: &[f64], radius: f64, b: &Interval) -> Classification {
    let mut near = 0.0;
    let mut far = 0.0;
    for (i, c) in center.iter().enumerate() {
        let (lo, hi) = (b.lo()[i], b.hi()[i]);
        let d_near = if *c < lo {
            lo - c
        } else if *c > hi {
            c - hi
        } else {
            0.0
        };
        let d_far = (c - lo).abs().max((hi - c).abs());
        near += d_near * d_near;
        far += d_far * d_far;
    }
    let r2 = radius * radius;
    if far <= r2 * (1.0 - SLACK) {
        Inside
    } else if near > r2 * (1.0 + SLACK) {
        Outside
    } else {
        Indeterminate
    }
}

fn classify_hypograph(f: &RangeEstimator, a: f64, right: f64, b: &Interval) -> Classification {
    let (x0, x1, y0, y1) = (b.lo()[0], b.hi()[0], b.lo()[1], b.hi()[1]);
    if x1 < a || x0 > right || y1 < 0.0 {
        return Outside;
    }
    let clipped = Interval::from_raw(vec![x0.max(a)], vec![x1.min(right)]);
    let Ok(RangeBound { lo, hi, .. }) = f.range(&clipped) else {
        return Indeterminate;
    };
    if y0 > hi || hi < 0.0 {
        Outside
    } else if x0 >= a && x1 <= right && y0 >= 0.0 && y1 <= lo {
        Inside
    } else {
        Indeterminate
    }
}

fn classify_polar(rho: &RangeEstimator, b: &Interval) -> Classification {
    let (x0, x1, y0, y1) = (b.lo()[0], b.hi()[0], b.lo()[1], b.hi()[1]);
    let corners = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)];
    let r_max = corners.iter().map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max);
    let contains_origin = x0 <= 0.0 && x1 >= 0.0 && y0 <= 0.0 && y1 >= 0.0;
    let (r_min, pieces) = if contains_origin {
        (0.0, vec![(0.0, TAU)])
    } else {
        let cx = if x0 > 0.0 { x0 } else if x1 < 0.0 { x1 } else { 0.0 };
        let cy = if y0 > 0.0 { y0 } else if y1 < 0.0 { y1 } else { 0.0 };
        let pad = 1e-12;
        let angle = |x: f64, y: f64| y.atan2(x).rem_euclid(TAU);
        let pieces = if x0 > 0.0 && y0 < 0.0 && y1 >= 0.0 {
            // the box meets the ray θ = 0; split the angular range there
            let low = corners.iter().filter(|c| c.1 < 0.0).map(|c| angle(c.0, c.1)).fold(TAU, f64::min);
            let high = corners.iter().filter(|c| c.1 >= 0.0).map(|c| angle(c.0, c.1)).fold(0.0, f64::max);
            vec![((low - pad).max(0.0), TAU), (0.0, (high + pad).min(TAU))]
        } else {
            let a: Vec<f64> = corners.iter().map(|c| angle(c.0, c.1)).collect();
            let lo = a.iter().copied().fold(TAU, f64::min);
            let hi = a.iter().copied().fold(0.0, f64::max);
            vec![((lo - pad).max(0.0), (hi + pad).min(TAU))]
        };
        (cx.hypot(cy), pieces)
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (t0, t1) in pieces {
        match rho.range(&Interval::from_raw(vec![t0], vec![t1])) {
            Ok(r) => {
                lo = lo.min(r.lo);
                hi = hi.max(r.hi);
            }
            Err(_) => return Indeterminate,
        }
    }
    if r_max * (1.0 + SLACK) <= lo {
        Inside
    } else if r_min * (1.0 - SLACK) > hi {
        Outside
    } else {
        Indeterminate
    }
}

fn insert_axis(b: &Interval, axis: usize, lo: f64, hi: f64) -> Interval {
    let mut l = b.lo().to_vec();
    let mut h = b.hi().to_vec();
    l.insert(axis, lo);
    h.insert(axis, hi);
    Interval::from_raw(l, h)
}

fn split(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let lo = a + (b - a) * k as f64 / n as f64;
            let hi = if k + 1 == n { b } else { a + (b - a) * (k + 1) as f64 / n as f64 };
            (lo, hi)
        })
        .collect()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn common_dim(parts: &[Region]) -> Result<&[Region]> {
    let first = parts.first().ok_or_else(|| invalid("of", "needs at least one region"))?;
    for r in &parts[1..] {
        check_dim(first.dim(), r.dim())?;
    }
    Ok(parts)
}

fn join(op: &str, parts: &[Region]) -> String {
    let inner: Vec<&str> = parts.iter().map(|r| r.label.as_str()).collect();
    format!("{op}({})", inner.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn f(src: &str) -> SharedFn {
        Arc::new(parse_expression(src).unwrap())
    }

    fn bx(s: &[(f64, f64)]) -> Interval {
        Interval::from_sides(s).unwrap()
    }

    fn disk() -> Region {
        Region::ball(&Point::new(vec![0.0, 0.0]).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn ball_examples() {
        let d = disk();
        assert_eq!(d.classify(&bx(&[(5.0, 6.0), (5.0, 6.0)])), Outside);
        assert_eq!(d.classify(&bx(&[(-0.1, 0.1), (-0.1, 0.1)])), Inside);
        assert_eq!(d.classify(&bx(&[(0.9, 1.1), (-0.1, 0.1)])), Indeterminate);
        assert!(Region::ball(&Point::new(vec![0.0]).unwrap(), -1.0).is_err());
    }

    #[test]
    fn hypograph_examples() {
        let sq = Region::hypograph(f("1"), 0.0, 1.0, RangeMethod::Auto).unwrap();
        assert_eq!(sq.classify(&bx(&[(0.2, 0.4), (0.1, 0.9)])), Inside);
        let h = Region::hypograph(f("x^2"), 0.0, 1.0, RangeMethod::Auto).unwrap();
        assert_eq!(h.classify(&bx(&[(0.0, 0.5), (0.5, 1.0)])), Outside);
        assert_eq!(h.classify(&bx(&[(0.4, 0.6), (0.2, 0.3)])), Indeterminate);
        assert!(Region::hypograph(f("x"), 1.0, 0.0, RangeMethod::Auto).is_err());
    }

    #[test]
    fn polar_examples() {
        let circle = Region::polar_star(f("1"), RangeMethod::Auto).unwrap();
        assert_eq!(circle.classify(&bx(&[(0.3, 0.5), (0.1, 0.4)])), Inside);
        assert_eq!(circle.classify(&bx(&[(-0.6, -0.5), (-0.6, -0.5)])), Inside);
        let cardioid = Region::polar_star(f("1+cos(theta)"), RangeMethod::Auto).unwrap();
        assert_eq!(cardioid.classify(&bx(&[(-0.6, -0.4), (-0.1, 0.1)])), Outside);
        assert_eq!(cardioid.classify(&bx(&[(0.3, 0.4), (-0.1, 0.1)])), Inside);
        let blob = Region::polar_star(f("1.5+sin(3*theta)"), RangeMethod::Auto).unwrap();
        assert_eq!(blob.classify(&bx(&[(-0.2, 0.2), (-0.2, 0.2)])), Inside);
        assert!((cardioid.bounds().hi()[0] - 2.0).abs() < 0.05);
        assert!(Region::polar_star(f("cos(theta)"), RangeMethod::Auto).is_err());
    }

    #[test]
    fn boolean_examples() {
        let d = disk();
        let u = Region::union(vec![d.clone(), d.clone()]).unwrap();
        for b in [bx(&[(0.9, 1.1), (-0.1, 0.1)]), bx(&[(-0.1, 0.1), (-0.1, 0.1)]), bx(&[(1.5, 1.9), (0.0, 1.0)])] {
            assert_eq!(u.classify(&b), d.classify(&b));
        }
        let c = Region::complement_within(d.clone(), bx(&[(-2.0, 2.0), (-2.0, 2.0)])).unwrap();
        assert_eq!(c.classify(&bx(&[(1.4, 1.6), (1.4, 1.6)])), Inside);
        let none = Region::empty(bx(&[(-2.0, 2.0), (-2.0, 2.0)]));
        let i = Region::intersect(vec![d, none]).unwrap();
        assert_eq!(i.classify(&bx(&[(-0.1, 0.1), (-0.1, 0.1)])), Outside);
        assert!(Region::union(vec![disk(), Region::cuboid(Interval::unit(3))]).is_err());
    }

    #[test]
    fn dense_is_indeterminate() {
        let s = Region::dense(Interval::unit(1));
        assert_eq!(s.classify(&bx(&[(0.25, 0.5)])), Indeterminate);
        assert_eq!(s.classify(&bx(&[(2.0, 3.0)])), Outside);
    }

    #[test]
    fn product_and_section() {
        let ball = disk();
        let prism = Region::product(vec![ball, Region::cuboid(bx(&[(0.0, 2.0)]))]).unwrap();
        assert_eq!(prism.dim(), 3);
        assert_eq!(prism.classify(&bx(&[(-0.1, 0.1), (-0.1, 0.1), (0.5, 1.0)])), Inside);
        let slice = Region::section(prism, 2, 1.0).unwrap();
        assert_eq!(slice.dim(), 2);
        assert_eq!(slice.classify(&bx(&[(-0.1, 0.1), (-0.1, 0.1)])), Inside);
        assert_eq!(slice.contains_point(&[0.0, 0.0]), Some(true));
    }
}

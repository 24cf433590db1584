//! Finite decompositions of boxes, decomposition families and the Cantor
//! bisection search.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{DyadicGrid, Hyperplane, Interval};

/// A finite family of boxes tiling `parent`, tagged with the family that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    parent: Interval,
    cells: Vec<Interval>,
    family: String,
}

impl Decomposition {
    /// Wraps cells without checking that they tile the parent; see
    /// [`Decomposition::tiles`].
    pub fn new(parent: Interval, cells: Vec<Interval>, family: impl Into<String>) -> Self {
        Self { parent, cells, family: family.into() }
    }

    /// `{A}`.
    pub fn trivial(parent: &Interval, family: impl Into<String>) -> Self {
        Self::new(parent.clone(), vec![parent.clone()], family)
    }

    pub fn parent(&self) -> &Interval {
        &self.parent
    }

    pub fn cells(&self) -> &[Interval] {
        &self.cells
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn max_diameter(&self) -> f64 {
        self.cells.iter().map(Interval::diameter).fold(0.0, f64::max)
    }

    /// Cells lie in the parent, have pairwise disjoint interiors and their
    /// volumes add up to the parent's.
    pub fn tiles(&self) -> bool {
        if self.cells.iter().any(|c| c.dim() != self.parent.dim() || !self.parent.contains(c)) {
            return false;
        }
        for (i, a) in self.cells.iter().enumerate() {
            if self.cells[i + 1..].iter().any(|b| a.overlaps_interior(b)) {
                return false;
            }
        }
        let total: f64 = self.cells.iter().map(Interval::volume).sum();
        let v = self.parent.volume();
        (total - v).abs() <= 1e-12 * v.max(1.0)
    }

    /// True when the cells arise from the parent by repeatedly cutting one
    /// cell with a hyperplane.
    pub fn is_interval_decomposition(&self) -> bool {
        self.tiles() && guillotine(&self.parent, &self.cells.iter().collect::<Vec<_>>())
    }

    /// Hyperplane cuts used, one per extra cell, when the decomposition is an
    /// interval decomposition.
    pub fn cut_count(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

fn guillotine(parent: &Interval, cells: &[&Interval]) -> bool {
    if cells.len() == 1 {
        return cells[0] == parent;
    }
    for axis in 0..parent.dim() {
        let mut offsets: Vec<f64> = cells.iter().map(|c| c.lo()[axis]).filter(|&x| x > parent.lo()[axis]).collect();
        offsets.sort_by(f64::total_cmp);
        offsets.dedup();
        for t in offsets {
            let (below, above): (Vec<&Interval>, Vec<&Interval>) = cells.iter().partition(|c| c.hi()[axis] <= t);
            if above.iter().all(|c| c.lo()[axis] >= t) && !below.is_empty() && !above.is_empty() {
                let lower = parent.with_side(axis, parent.lo()[axis], t);
                let upper = parent.with_side(axis, t, parent.hi()[axis]);
                return guillotine(&lower, &below) && guillotine(&upper, &above);
            }
        }
    }
    false
}

pub const INTERVAL_FAMILY: &str = "interval";
pub const MESH_FAMILY: &str = "mesh";

/// A hyperplane cut. With `target = Some(i)` it splits cell `i` of the
/// current list; with `None` it splits every cell whose interior it crosses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cut {
    pub plane: Hyperplane,
    pub target: Option<usize>,
}

impl Cut {
    pub fn all(axis: usize, offset: f64) -> Self {
        Self { plane: Hyperplane::new(axis, offset), target: None }
    }

    pub fn on(cell: usize, axis: usize, offset: f64) -> Self {
        Self { plane: Hyperplane::new(axis, offset), target: Some(cell) }
    }
}

impl From<Hyperplane> for Cut {
    fn from(plane: Hyperplane) -> Self {
        Self { plane, target: None }
    }
}

/// Applies the cuts in order. A split cell is replaced in place by its lower
/// and upper halves.
pub fn interval_decompose(b: &Interval, cuts: &[Cut]) -> Result<Decomposition> {
    let mut cells = vec![b.clone()];
    for (k, cut) in cuts.iter().enumerate() {
        if cut.plane.axis >= b.dim() {
            return Err(Error::InvalidAxis { axis: cut.plane.axis, dim: b.dim() });
        }
        let targets: Vec<usize> = match cut.target {
            Some(i) if i < cells.len() && cells[i].crossed_by(&cut.plane) => vec![i],
            Some(_) => return Err(Error::CutMissesCell { index: k }),
            None => (0..cells.len()).filter(|&i| cells[i].crossed_by(&cut.plane)).collect(),
        };
        if targets.is_empty() {
            return Err(Error::CutMissesCell { index: k });
        }
        for &i in targets.iter().rev() {
            let (lo, hi) = cells[i].cut(&cut.plane)?;
            let (lo, hi) = (lo.expect("crossing cut"), hi.expect("crossing cut"));
            cells[i] = lo;
            cells.insert(i + 1, hi);
        }
    }
    Ok(Decomposition::new(b.clone(), cells, INTERVAL_FAMILY))
}

/// Uniform dyadic refinement of `b` with every cell diameter below `eps`.
pub fn mesh_decompose(b: &Interval, eps: f64) -> Result<Decomposition> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "mesh size must be positive"));
    }
    let mut depth = 0;
    while b.diameter() / (1u64 << depth) as f64 >= eps {
        depth += 1;
        if depth as usize * b.dim() > 24 {
            return Err(invalid("eps", format!("mesh {eps} needs more than 2^24 cells")));
        }
    }
    Ok(Decomposition::new(b.clone(), DyadicGrid::new(b.clone(), depth).cells(), MESH_FAMILY))
}

/// `{H ∩ G}` with degenerate intersections dropped. The result carries the
/// family tag of `h`.
pub fn common_refinement(h: &Decomposition, g: &Decomposition) -> Result<Decomposition> {
    if h.parent != g.parent {
        return Err(Error::ParentMismatch);
    }
    Ok(Decomposition::new(h.parent.clone(), intersections(&h.cells, &g.cells), h.family.clone()))
}

fn intersections(h: &[Interval], g: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    for a in h {
        for b in g {
            if a.overlaps_interior(b) {
                out.push(a.intersection(b).expect("overlapping boxes intersect"));
            }
        }
    }
    out
}

/// A family of finite decompositions of boxes: a sampler for member
/// decompositions and a membership test.
pub trait DecompositionFamily: Send + Sync {
    fn name(&self) -> &str;
    fn sample(&self, b: &Interval, rng: &mut ChaCha8Rng) -> Decomposition;
    fn contains(&self, d: &Decomposition) -> bool;
}

/// All interval decompositions: repeated hyperplane cuts.
#[derive(Debug, Clone, Copy)]
pub struct IntervalFamily {
    pub max_cuts: usize,
}

impl Default for IntervalFamily {
    fn default() -> Self {
        Self { max_cuts: 6 }
    }
}

// Cuts at dyadic fractions of a side, so intersections stay exact.
fn random_cut(rng: &mut ChaCha8Rng, cells: &[Interval]) -> Cut {
    let i = rng.gen_range(0..cells.len());
    let axis = rng.gen_range(0..cells[i].dim());
    let c = &cells[i];
    let offset = c.lo()[axis] + c.side(axis) * rng.gen_range(1..8) as f64 / 8.0;
    Cut::on(i, axis, offset)
}

fn random_cuts(b: &Interval, rng: &mut ChaCha8Rng, count: usize) -> Decomposition {
    let mut d = Decomposition::trivial(b, INTERVAL_FAMILY);
    for _ in 0..count {
        let cut = random_cut(rng, &d.cells);
        if d.cells[cut.target.unwrap()].crossed_by(&cut.plane) {
            d = interval_decompose_from(d, &cut);
        }
    }
    d
}

fn interval_decompose_from(mut d: Decomposition, cut: &Cut) -> Decomposition {
    let i = cut.target.expect("targeted cut");
    let (lo, hi) = d.cells[i].cut(&cut.plane).expect("axis checked");
    d.cells[i] = lo.expect("crossing cut");
    d.cells.insert(i + 1, hi.expect("crossing cut"));
    d
}

impl DecompositionFamily for IntervalFamily {
    fn name(&self) -> &str {
        INTERVAL_FAMILY
    }

    fn sample(&self, b: &Interval, rng: &mut ChaCha8Rng) -> Decomposition {
        let count = rng.gen_range(0..=self.max_cuts);
        random_cuts(b, rng, count)
    }

    fn contains(&self, d: &Decomposition) -> bool {
        d.is_interval_decomposition()
    }
}

/// Only `{A}` for each `A`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrivialFamily;

impl DecompositionFamily for TrivialFamily {
    fn name(&self) -> &str {
        "trivial"
    }

    fn sample(&self, b: &Interval, _rng: &mut ChaCha8Rng) -> Decomposition {
        Decomposition::trivial(b, "trivial")
    }

    fn contains(&self, d: &Decomposition) -> bool {
        d.cells.len() == 1 && d.cells[0] == d.parent
    }
}

/// Interval decompositions with at most one cut. Not closed under common
/// refinement, so it is not a family of decompositions.
#[derive(Debug, Clone, Copy, Default)]
pub struct SingleCutFamily;

impl DecompositionFamily for SingleCutFamily {
    fn name(&self) -> &str {
        "single_cut"
    }

    fn sample(&self, b: &Interval, rng: &mut ChaCha8Rng) -> Decomposition {
        let count = rng.gen_range(0..=1);
        let mut d = random_cuts(b, rng, count);
        d.family = "single_cut".into();
        d
    }

    fn contains(&self, d: &Decomposition) -> bool {
        d.cells.len() <= 2 && d.is_interval_decomposition()
    }
}

/// Uniform dyadic meshes `{cells of depth k}`. Closed under refinement and
/// restriction, but gluing meshes of different depths leaves the family.
#[derive(Debug, Clone, Copy)]
pub struct MeshFamily {
    pub max_depth: u32,
}

impl Default for MeshFamily {
    fn default() -> Self {
        Self { max_depth: 3 }
    }
}

impl DecompositionFamily for MeshFamily {
    fn name(&self) -> &str {
        MESH_FAMILY
    }

    fn sample(&self, b: &Interval, rng: &mut ChaCha8Rng) -> Decomposition {
        let depth = rng.gen_range(0..=self.max_depth);
        Decomposition::new(b.clone(), DyadicGrid::new(b.clone(), depth).cells(), MESH_FAMILY)
    }

    fn contains(&self, d: &Decomposition) -> bool {
        if !d.tiles() {
            return false;
        }
        let n = d.parent.dim();
        let per_axis = (d.cells.len() as f64).powf(1.0 / n as f64).round() as u64;
        if !per_axis.is_power_of_two() || per_axis.pow(n as u32) != d.cells.len() as u64 {
            return false;
        }
        let depth = per_axis.trailing_zeros();
        let mut expected = DyadicGrid::new(d.parent.clone(), depth).cells();
        let mut actual = d.cells.clone();
        let key = |c: &Interval| c.lo().to_vec();
        expected.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        actual.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        expected.iter().zip(&actual).all(|(e, a)| boxes_close(e, a))
    }
}

fn boxes_close(a: &Interval, b: &Interval) -> bool {
    let tol = 1e-12 * (1.0 + a.diameter());
    a.lo().iter().zip(b.lo()).chain(a.hi().iter().zip(b.hi())).all(|(x, y)| (x - y).abs() <= tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub axiom: u8,
    pub sample: usize,
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub family: String,
    pub samples: usize,
    /// Whether each of the axioms (1)–(4) held on every sample.
    pub holds: [bool; 4],
    /// First violation found for each failing axiom, in axiom order.
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|&h| h)
    }
}

fn check_sample(fam: &dyn DecompositionFamily, domain: &Interval, seed: u64, index: usize) -> [Option<String>; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let sides: Vec<(f64, f64)> = (0..domain.dim())
        .map(|i| {
            let (lo, side) = (domain.lo()[i], domain.side(i));
            let a = lo + side * rng.gen_range(0..4) as f64 / 8.0;
            let b = lo + side * rng.gen_range(5..=8) as f64 / 8.0;
            (a, b)
        })
        .collect();
    let a = Interval::from_sides(&sides).expect("ordered sides");
    let ok = |d: &Decomposition| fam.contains(d) && d.tiles();
    let mut out: [Option<String>; 4] = Default::default();

    let trivial = Decomposition::trivial(&a, fam.name());
    if !ok(&trivial) {
        out[0] = Some(format!("{{A}} is not a member for A = {a}"));
    }

    let h = fam.sample(&a, &mut rng);
    let g = fam.sample(&a, &mut rng);
    let refined = Decomposition::new(a.clone(), intersections(&h.cells, &g.cells), fam.name());
    if !ok(&refined) {
        out[1] = Some(format!("H = {h}, G = {g}: common refinement {refined} is not a member"));
    }

    for cell in &g.cells {
        let restricted = Decomposition::new(cell.clone(), intersections(&h.cells, std::slice::from_ref(cell)), fam.name());
        if !ok(&restricted) {
            out[2] = Some(format!("H = {h}, G-cell {cell}: restriction {restricted} is not a member"));
            break;
        }
    }

    let mut glued = Vec::new();
    for cell in &h.cells {
        glued.extend(fam.sample(cell, &mut rng).cells);
    }
    let glued = Decomposition::new(a.clone(), glued, fam.name());
    if !ok(&glued) {
        out[3] = Some(format!("H = {h}: composed decomposition {glued} is not a member"));
    }
    out
}

/// Checks axioms (1)–(4) of a family of decompositions on `samples` random
/// sub-boxes of `domain`.
pub fn verify_family_axioms(
    fam: &dyn DecompositionFamily,
    domain: &Interval,
    samples: usize,
    seed: u64,
) -> AxiomReport {
    let results: Vec<[Option<String>; 4]> =
        (0..samples).into_par_iter().map(|i| check_sample(fam, domain, seed, i)).collect();
    let mut holds = [true; 4];
    let mut violations = Vec::new();
    for axiom in 0..4 {
        if let Some((sample, w)) = results.iter().enumerate().find_map(|(i, r)| r[axiom].clone().map(|w| (i, w))) {
            holds[axiom] = false;
            violations.push(AxiomViolation { axiom: axiom as u8 + 1, sample, witness: w });
        }
    }
    AxiomReport { family: fam.name().to_string(), samples, holds, violations }
}

/// A family of boxes that should be semi-distributive under bisection.
pub trait SemiDistributivePredicate {
    fn holds(&self, b: &Interval) -> Result<bool>;

    /// Preference between two member halves; larger wins.
    fn score(&self, _b: &Interval) -> Result<Option<f64>> {
        Ok(None)
    }
}

/// A predicate given by a closure.
pub struct FnPredicate<F>(pub F);

impl<F: Fn(&Interval) -> bool> SemiDistributivePredicate for FnPredicate<F> {
    fn holds(&self, b: &Interval) -> Result<bool> {
        Ok((self.0)(b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CantorPoint {
    pub point: Vec<f64>,
    /// `S = B_0 ⊇ B_1 ⊇ …`, each a member of the family.
    pub chain: Vec<Interval>,
}

/// Nested bisection: halves the longest axis at its midpoint and keeps a
/// half that satisfies the predicate, until the diameter is below `eps`.
pub fn cantor_point(pred: &dyn SemiDistributivePredicate, s: &Interval, eps: f64) -> Result<CantorPoint> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    if !pred.holds(s)? {
        return Err(Error::PredicateFails);
    }
    let mut chain = vec![s.clone()];
    let mut current = s.clone();
    let mut step = 0;
    while current.diameter() >= eps {
        step += 1;
        let (a, b) = current.bisect(current.longest_axis());
        let next = match (pred.holds(&a)?, pred.holds(&b)?) {
            (true, true) => match (pred.score(&a)?, pred.score(&b)?) {
                (Some(sa), Some(sb)) if sb > sa => b,
                _ => a,
            },
            (true, false) => a,
            (false, true) => b,
            (false, false) => return Err(Error::SemiDistributivity { step, cell: current }),
        };
        chain.push(next.clone());
        current = next;
    }
    Ok(CantorPoint { point: current.center(), chain })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(s: &[(f64, f64)]) -> Interval {
        Interval::from_sides(s).unwrap()
    }

    #[test]
    fn unit_interval_cuts() {
        let d = interval_decompose(&Interval::unit(1), &[Cut::all(0, 0.25), Cut::all(0, 0.5)]).unwrap();
        assert_eq!(d.cells(), &[iv(&[(0.0, 0.25)]), iv(&[(0.25, 0.5)]), iv(&[(0.5, 1.0)])]);
        assert!(d.is_interval_decomposition());
        let none = interval_decompose(&Interval::unit(2), &[]).unwrap();
        assert_eq!(none.cells(), &[Interval::unit(2)]);
    }

    #[test]
    fn square_cut_on_left_half() {
        let d = interval_decompose(&Interval::unit(2), &[Cut::all(0, 0.5), Cut::on(0, 1, 0.5)]).unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.tiles() && d.is_interval_decomposition());
        let err = interval_decompose(&Interval::unit(1), &[Cut::all(0, 2.0)]).unwrap_err();
        assert_eq!(err, Error::CutMissesCell { index: 0 });
    }

    #[test]
    fn mesh_examples() {
        let d = mesh_decompose(&Interval::unit(1), 0.3).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.cells().iter().all(|c| c.side(0) == 0.25));
        assert_eq!(mesh_decompose(&Interval::unit(2), 2.0).unwrap().len(), 1);
        assert!(mesh_decompose(&Interval::unit(1), 0.0).is_err());
    }

    #[test]
    fn refinement_examples() {
        let u = Interval::unit(1);
        let h = interval_decompose(&u, &[Cut::all(0, 0.5)]).unwrap();
        let g = interval_decompose(&u, &[Cut::all(0, 0.25)]).unwrap();
        let r = common_refinement(&h, &g).unwrap();
        assert_eq!(r.cells(), &[iv(&[(0.0, 0.25)]), iv(&[(0.25, 0.5)]), iv(&[(0.5, 1.0)])]);
        assert_eq!(common_refinement(&h, &h).unwrap().cells(), h.cells());
        let t = Decomposition::trivial(&u, INTERVAL_FAMILY);
        assert_eq!(common_refinement(&t, &g).unwrap().cells(), g.cells());
        let other = Decomposition::trivial(&iv(&[(0.0, 2.0)]), INTERVAL_FAMILY);
        assert_eq!(common_refinement(&h, &other).unwrap_err(), Error::ParentMismatch);
    }

    #[test]
    fn non_guillotine_tiling_is_rejected() {
        // pinwheel: five boxes tiling the square with no full cut
        let cells = vec![
            iv(&[(0.0, 2.0), (0.0, 1.0)]),
            iv(&[(2.0, 3.0), (0.0, 2.0)]),
            iv(&[(1.0, 3.0), (2.0, 3.0)]),
            iv(&[(0.0, 1.0), (1.0, 3.0)]),
            iv(&[(1.0, 2.0), (1.0, 2.0)]),
        ];
        let d = Decomposition::new(iv(&[(0.0, 3.0), (0.0, 3.0)]), cells, "pinwheel");
        assert!(d.tiles());
        assert!(!d.is_interval_decomposition());
    }

    #[test]
    fn cantor_point_examples() {
        let p = [0.3, 0.7];
        let contains = FnPredicate(|b: &Interval| b.contains_point(&p));
        let c = cantor_point(&contains, &Interval::unit(2), 1e-6).unwrap();
        assert!((c.point[0] - 0.3).abs() < 1e-6 && (c.point[1] - 0.7).abs() < 1e-6);
        for w in c.chain.windows(2) {
            assert!(w[0].contains(&w[1]));
            assert!((w[1].diameter() - w[0].diameter() / 2.0).abs() < 1e-12 || w[0].dim() > 1);
        }

        let s = Interval::unit(1);
        let big = FnPredicate(|b: &Interval| b.volume() > 0.9 * s.volume());
        assert_eq!(cantor_point(&big, &s, 0.1).unwrap_err(), Error::SemiDistributivity { step: 1, cell: s.clone() });
    }
}

use std::f64::consts::PI;

use coexist::measure::{cut_additivity_check, is_measurable, measure, measure_within};
use coexist::{parse_region, Hyperplane, Interval, Region};

fn disk() -> Region {
    parse_region(r#"{"kind":"ball","center":[0,0],"radius":1}"#).unwrap()
}

fn hypograph() -> Region {
    parse_region(r#"{"kind":"hypograph","f":"x^2","a":0,"b":1}"#).unwrap()
}

#[test]
fn unit_disk_at_depth_ten() {
    let m = measure(&disk(), 10).unwrap();
    assert!(m.inner <= PI && PI <= m.outer);
    assert!((m.outer - PI).abs() < 0.02, "outer {}", m.outer);
    assert!((PI - m.inner) < 0.02, "inner {}", m.inner);
    assert!((m.outer - m.inner - m.cells_indeterminate as f64 * 4.0 / (1u64 << 20) as f64).abs() < 1e-12);
}

#[test]
fn depth_monotonicity_is_exact() {
    for r in [disk(), hypograph(), parse_region(r#"{"kind":"polar_star","rho":"1+cos(theta)"}"#).unwrap()] {
        let mut prev = measure(&r, 0).unwrap();
        for d in 1..=9 {
            let m = measure(&r, d).unwrap();
            assert!(prev.inner <= m.inner && m.inner <= m.outer && m.outer <= prev.outer, "{r:?} at {d}");
            prev = m;
        }
    }
}

#[test]
fn hypograph_of_square_is_measurable() {
    let m = is_measurable(&hypograph(), 1e-2, 14).unwrap();
    assert!(m.measurable);
    let mid = 0.5 * (m.report.inner + m.report.outer);
    assert!((mid - 1.0 / 3.0).abs() < 1e-2);
    assert!(m.report.inner <= 1.0 / 3.0 && 1.0 / 3.0 <= m.report.outer);
}

#[test]
fn box_is_measurable_at_depth_zero() {
    let r = Region::cuboid(Interval::unit(3));
    assert_eq!(is_measurable(&r, 1e-9, 4).unwrap().depth, Some(0));
}

#[test]
fn dense_set_never_measurable() {
    let r = Region::dense(Interval::unit(1));
    let m = is_measurable(&r, 0.5, 12).unwrap();
    assert!(!m.measurable);
    assert_eq!(m.report.gap(), 1.0);
}

#[test]
fn grid_cuts_are_exactly_additive() {
    let c = cut_additivity_check(&disk(), &Hyperplane::new(0, 0.0), 8).unwrap();
    assert_eq!((c.outer_residual, c.inner_residual), (0.0, 0.0));
    let c = cut_additivity_check(&hypograph(), &Hyperplane::new(0, 0.5), 8).unwrap();
    assert_eq!((c.outer_residual, c.inner_residual), (0.0, 0.0));
    let dense = Region::dense(Interval::unit(1));
    for k in 1..16 {
        let c = cut_additivity_check(&dense, &Hyperplane::new(0, k as f64 / 16.0), 4).unwrap();
        assert_eq!(c.outer_residual, 0.0);
    }
}

#[test]
fn dense_set_and_complement_are_not_additive() {
    let s = Region::dense(Interval::unit(1));
    let sc = Region::complement_within(s.clone(), Interval::unit(1)).unwrap();
    let whole = Region::union(vec![s.clone(), sc.clone()]).unwrap();
    for d in 0..10 {
        let total = measure(&s, d).unwrap().outer + measure(&sc, d).unwrap().outer;
        assert_eq!(total, 2.0);
        assert_eq!(measure(&Region::cuboid(Interval::unit(1)), d).unwrap().outer, 1.0);
        assert_eq!(measure(&whole, d).unwrap().outer, 1.0);
    }
}

#[test]
fn windows_partition_the_measure() {
    let r = disk();
    let d = 6;
    let whole = measure(&r, d).unwrap();
    let step = 2.0 / 4.0;
    let mut inner = 0.0;
    let mut outer = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let w = Interval::from_sides(&[
                (-1.0 + i as f64 * step, -1.0 + (i + 1) as f64 * step),
                (-1.0 + j as f64 * step, -1.0 + (j + 1) as f64 * step),
            ])
            .unwrap();
            let m = measure_within(&r, &w, d).unwrap();
            inner += m.inner;
            outer += m.outer;
        }
    }
    assert_eq!((inner, outer), (whole.inner, whole.outer));
}

#[test]
fn smaller_region_has_smaller_outer_measure() {
    let small = parse_region(r#"{"kind":"ball","center":[0,0],"radius":0.5}"#).unwrap();
    let big = disk();
    let small = small.with_bounds(big.bounds().clone()).unwrap();
    for d in 0..9 {
        assert!(measure(&small, d).unwrap().outer <= measure(&big, d).unwrap().outer);
    }
}

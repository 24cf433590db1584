use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use coexist::decomposition::IntervalFamily;
use coexist::setfunc::{
    check_distributive, check_proportionality, parse_number, Arclength, Density, Increment, PolarSector, Scaled,
    Sum, Volume,
};
use coexist::{parse_expression, parse_setfunc, parse_setfunc_on, Error, Interval, SetFunction, SharedFn};

fn f(src: &str) -> SharedFn {
    Arc::new(parse_expression(src).unwrap())
}

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::from_sides(&[(lo, hi)]).unwrap()
}

#[test]
fn closed_form_values() {
    let sin = Density::new(f("sin(x)"), 1);
    assert!((sin.eval(&iv(0.0, PI)).unwrap() - 2.0).abs() < 1e-10);
    let cardioid = PolarSector::new(f("1 + cos(t)")).unwrap();
    assert!((cardioid.eval(&iv(0.0, 2.0 * PI)).unwrap() - 1.5 * PI).abs() < 1e-9);
    let line = Arclength::new(f("x"), 0.0, 1.0).unwrap();
    assert!((line.eval(&iv(0.0, 1.0)).unwrap() - SQRT_2).abs() < 1e-9);
    let plane = Density::new(f("x*y"), 2);
    let sq = Interval::from_sides(&[(0.0, 1.0), (0.0, 2.0)]).unwrap();
    assert!((plane.eval(&sq).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn increment_telescopes() {
    let mu = Increment::new(f("sin(x)"));
    for c in [0.1, 0.37, 0.5, 0.999] {
        let whole = mu.eval(&iv(0.0, 1.0)).unwrap();
        let parts = mu.eval(&iv(0.0, c)).unwrap() + mu.eval(&iv(c, 1.0)).unwrap();
        assert!((whole - parts).abs() < 1e-15);
    }
}

#[test]
fn builtins_are_distributive_over_interval_decompositions() {
    let fam = IntervalFamily::default();
    let cases: Vec<(Box<dyn SetFunction>, Interval, f64)> = vec![
        (Box::new(Volume::new(2)), Interval::unit(2), 1e-15),
        (Box::new(Increment::new(f("x^3 - x"))), iv(-1.0, 2.0), 1e-12),
        (Box::new(Density::new(f("exp(x)*cos(y)"), 2)), Interval::unit(2), 1e-10),
        (Box::new(Arclength::new(f("x^2"), 0.0, 1.0).unwrap()), iv(0.0, 1.0), 1e-8),
    ];
    for (sf, domain, bound) in cases {
        let r = check_distributive(sf.as_ref(), &fam, &domain, 200, 3).unwrap();
        assert!(r.max_residual < bound, "{}: {}", sf.label(), r.max_residual);
    }
}

#[test]
fn non_additive_function_is_caught() {
    let sqrt_len = coexist::setfunc::FnSetFunction::new(1, "sqrt length", true, |b: &Interval| b.volume().sqrt());
    let r = check_distributive(&sqrt_len, &IntervalFamily::default(), &iv(0.0, 1.0), 50, 0).unwrap();
    assert!(r.max_residual > 0.1);
    assert!(r.witness.is_some());
}

#[test]
fn proportionality_separates_volume_from_density() {
    let vol = check_proportionality(&Volume::new(1), &iv(0.0, 4.0), 300, 1).unwrap();
    assert!(vol.translation_invariant);
    assert!((vol.constant - 1.0).abs() < 1e-12);
    let sector = parse_setfunc("sector", 1).unwrap();
    let r = check_proportionality(sector.as_ref(), &iv(0.0, 6.0), 300, 1).unwrap();
    assert!((r.constant - 0.5).abs() < 1e-12);
    let skewed = check_proportionality(&Density::new(f("x^2"), 1), &iv(0.0, 4.0), 300, 1).unwrap();
    assert!(!skewed.translation_invariant);
    assert!(skewed.witness.is_some());
}

#[test]
fn scaling_and_sums() {
    let base: Arc<dyn SetFunction> = Arc::new(Density::new(f("1 + x"), 1).positive());
    let b = iv(0.0, 2.0);
    let twice = Scaled { c: 2.0, inner: base.clone() };
    assert_eq!(twice.eval(&b).unwrap(), 2.0 * base.eval(&b).unwrap());
    assert!(twice.is_positive());
    assert!(!Scaled { c: -1.0, inner: base.clone() }.is_positive());
    let both = Sum::new(base.clone(), Arc::new(Volume::new(1))).unwrap();
    assert!((both.eval(&b).unwrap() - 6.0).abs() < 1e-12);
    assert!(Sum::new(base, Arc::new(Volume::new(2))).is_err());
}

#[test]
fn specs() {
    assert_eq!(parse_number("pi/2").unwrap(), PI / 2.0);
    assert!(parse_number("x").is_err());
    let mu = parse_setfunc("density:cos(x)", 1).unwrap();
    assert!((mu.eval(&iv(0.0, PI / 2.0)).unwrap() - 1.0).abs() < 1e-10);
    assert!(!mu.is_positive());
    let on = parse_setfunc_on("density:cos(x)", &iv(0.0, 1.5)).unwrap();
    assert!(on.is_positive());
    let off = parse_setfunc_on("density:cos(x)", &iv(0.0, 2.0)).unwrap();
    assert!(!off.is_positive());
    let arc = parse_setfunc("arclength:x^2:0:1", 1).unwrap();
    assert!((arc.eval(&iv(0.0, 1.0)).unwrap() - 1.478_942_857_5).abs() < 1e-8);
    assert!(matches!(parse_setfunc("density:x*y", 1), Err(Error::SetFunctionSpec { .. })));
    assert!(matches!(parse_setfunc("mass", 1), Err(Error::SetFunctionSpec { .. })));
    assert!(matches!(parse_setfunc("sector", 2), Err(Error::SetFunctionSpec { .. })));
}

#[test]
fn dimension_is_checked() {
    let vol = Volume::new(2);
    assert!(matches!(vol.eval(&iv(0.0, 1.0)), Err(Error::DimensionMismatch { expected: 2, found: 1 })));
}

use std::collections::BTreeSet;
use std::f64::consts::PI;

use coexist::catalog::{quotient_scan, run_catalog, run_scenario, scenarios, CatalogOptions, Check, Provenance, Verdict};
use coexist::Error;

#[test]
fn ids_are_unique_and_grouped() {
    let all = scenarios();
    let ids: BTreeSet<&str> = all.iter().map(|s| s.id).collect();
    assert_eq!(ids.len(), all.len());
    let families: BTreeSet<&str> = all.iter().map(|s| s.family()).collect();
    for f in ["hypograph_measurability", "star_area", "cavalieri_planar", "cavalieri_volume", "arc_length", "ftc", "cauchy_vs_peano"] {
        assert!(families.contains(f), "{f}");
    }
    for s in all.iter().filter_map(|s| s.oracle) {
        assert!(!s.procedure.is_empty() && s.error >= 0.0);
    }
    assert!(all.iter().any(|s| s.provenance == Provenance::Derived && s.oracle.is_some()));
    assert!(all.iter().any(|s| matches!(s.check, Check::AtLeast)));
}

#[test]
fn frozen_expectations() {
    let want = [
        ("star_area/unit_circle", PI),
        ("star_area/cardioid", 1.5 * PI),
        ("cavalieri_volume/unit_ball", 4.0 * PI / 3.0),
        ("arc_length/line_derivative", std::f64::consts::SQRT_2),
        ("arc_length/parabola", 1.478_942_857_544_597),
        ("ftc/sin", 1.0),
    ];
    let all = scenarios();
    for (id, v) in want {
        let s = all.iter().find(|s| s.id == id).unwrap();
        assert!((s.expected - v).abs() < 1e-12, "{id}");
    }
}

#[test]
fn single_scenarios() {
    let opts = CatalogOptions::default();
    let r = run_scenario("arc_length/line_derivative", &opts).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!((r.computed.unwrap() - std::f64::consts::SQRT_2).abs() < 1e-6);
    assert!(matches!(run_scenario("arc_length/helix", &opts), Err(Error::UnknownScenario(_))));
}

#[test]
fn families_pass_with_and_without_oracles() {
    for recompute_oracles in [false, true] {
        let opts = CatalogOptions { recompute_oracles, seed: 0 };
        let r = run_catalog(Some("arc_length"), &opts).unwrap();
        assert!(r.all_gating_pass());
        assert_eq!(r.records.len(), 3);
        let r = run_catalog(Some("star_area"), &opts).unwrap();
        assert!(r.all_gating_pass(), "{:?}", r.records.iter().map(|x| (&x.id, x.verdict)).collect::<Vec<_>>());
        if recompute_oracles {
            assert!(r.records.iter().any(|x| x.oracle.is_some()));
        }
    }
}

#[test]
fn reports_serialize_and_repeat() {
    let opts = CatalogOptions::default();
    let a = serde_json::to_string(&run_catalog(Some("cavalieri_planar"), &opts).unwrap()).unwrap();
    let b = serde_json::to_string(&run_catalog(Some("cavalieri_planar"), &opts).unwrap()).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["records"][0]["family"], "cavalieri_planar");
    assert!(v["records"][0]["check"]["kind"].is_string());
}

#[test]
fn quotient_scan_sees_the_kink() {
    assert!((quotient_scan(f64::abs, 0.125) - 2.0).abs() < 1e-6);
    // quotients over steps of 1e-9 carry rounding of order 1e-7
    assert!(quotient_scan(|x| 3.0 * x, 0.125) < 1e-6);
}

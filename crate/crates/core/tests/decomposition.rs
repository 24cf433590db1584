use coexist::decomposition::{
    verify_family_axioms, IntervalFamily, MeshFamily, SingleCutFamily, TrivialFamily,
};
use coexist::{common_refinement, interval_decompose, mesh_decompose, Cut, Interval};
use proptest::prelude::*;

#[test]
fn interval_family_satisfies_all_axioms() {
    let report = verify_family_axioms(&IntervalFamily::default(), &Interval::unit(1), 100, 1);
    assert!(report.all_hold(), "{:?}", report.violations);
    let report = verify_family_axioms(&IntervalFamily::default(), &Interval::unit(2), 100, 2);
    assert!(report.all_hold(), "{:?}", report.violations);
}

#[test]
fn trivial_family_passes() {
    let report = verify_family_axioms(&TrivialFamily, &Interval::unit(2), 50, 3);
    assert!(report.all_hold());
}

#[test]
fn single_cut_family_breaks_refinement() {
    let report = verify_family_axioms(&SingleCutFamily, &Interval::unit(1), 100, 4);
    assert!(!report.holds[1]);
    let v = report.violations.iter().find(|v| v.axiom == 2).unwrap();
    assert!(v.witness.contains("common refinement"));
    assert!(report.holds[0]);
}

#[test]
fn mesh_family_breaks_composition_only() {
    let report = verify_family_axioms(&MeshFamily::default(), &Interval::unit(2), 100, 5);
    assert_eq!(report.holds, [true, true, true, false]);
}

#[test]
fn axiom_reports_do_not_depend_on_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| verify_family_axioms(&SingleCutFamily, &Interval::unit(2), 64, 9))
    };
    assert_eq!(run(1), run(4));
}

fn cuts_strategy() -> impl Strategy<Value = Vec<(usize, usize, u8)>> {
    prop::collection::vec((0usize..16, 0usize..2, 1u8..8), 0..10)
}

proptest! {
    #[test]
    fn decompositions_tile_their_parent(raw in cuts_strategy()) {
        let b = Interval::from_sides(&[(0.0, 2.0), (-1.0, 1.0)]).unwrap();
        let mut d = interval_decompose(&b, &[]).unwrap();
        let mut cuts = Vec::new();
        for (cell, axis, k) in raw {
            let i = cell % d.len();
            let c = &d.cells()[i];
            let cut = Cut::on(i, axis, c.lo()[axis] + c.side(axis) * k as f64 / 8.0);
            cuts.push(cut);
            d = interval_decompose(&b, &cuts).unwrap();
        }
        let total: f64 = d.cells().iter().map(Interval::volume).sum();
        prop_assert_eq!(total, b.volume());
        prop_assert!(d.tiles());
        prop_assert!(d.is_interval_decomposition());
        let mesh = mesh_decompose(&b, 0.7).unwrap();
        let r = common_refinement(&d, &mesh).unwrap();
        prop_assert!(r.tiles() && r.is_interval_decomposition());
        prop_assert!(mesh.max_diameter() < 0.7);
    }
}

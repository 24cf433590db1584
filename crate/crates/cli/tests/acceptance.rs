//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Library checks run in-process. Every `coexist` invocation is recorded
//! and replayed under a different thread count for the determinism check.

use std::collections::BTreeSet;
use std::f64::consts::{PI, SQRT_2};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use coexist::decomposition::{verify_family_axioms, IntervalFamily, SingleCutFamily};
use coexist::derivative::LevelPredicate;
use coexist::func::{RangeEstimator, RangeMethod};
use coexist::measure::{cut_additivity_check, outer_measure};
use coexist::{
    cantor_point, common_refinement, darboux_sums, interval_decompose, measure, parse_expression, parse_setfunc_on,
    Cut, Hyperplane, Interval, Point, Region,
};

const BIN: &str = env!("CARGO_BIN_EXE_coexist");

struct Run {
    args: Vec<String>,
    code: i32,
    stdout: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or(Value::Null)
    }

    fn result(&self) -> Value {
        self.json()["result"].clone()
    }
}

struct Suite {
    dir: PathBuf,
    runs: Vec<Run>,
}

fn invoke(args: &[String], threads: u32) -> (i32, String) {
    let out = Command::new(BIN)
        .args(args)
        .env("COEXIST_THREADS", threads.to_string())
        .output()
        .expect("coexist binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

impl Suite {
    fn cli(&mut self, args: &[&str]) -> &Run {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let (code, stdout) = invoke(&args, 1);
        self.runs.push(Run { args, code, stdout });
        self.runs.last().unwrap()
    }

    fn file(&self, name: &str, body: &str) -> String {
        let p = self.dir.join(name);
        std::fs::write(&p, body).expect("scratch file");
        p.to_string_lossy().into_owned()
    }
}

/// Accumulates the individual checks of one criterion.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    facts: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn fact(&mut self, f: impl Into<String>) {
        self.facts.push(f.into());
    }
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::from_sides(&[(lo, hi)]).unwrap()
}

fn measure_convergence(s: &mut Suite, c: &mut Checks) {
    let disk = Region::ball(&Point::new(vec![0.0, 0.0]).unwrap(), 1.0).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for d in 0..=12 {
        let m = measure(&disk, d).unwrap();
        if let Some((inner, outer)) = prev {
            c.check(m.inner >= inner && m.outer <= outer, format!("depth {d}: not monotone"));
        }
        prev = Some((m.inner, m.outer));
    }
    let (inner, outer) = prev.unwrap();
    c.check(inner <= PI && PI <= outer, "depth 12 does not bracket pi");
    c.check(outer - inner < 0.01, format!("depth 12 gap {}", outer - inner));
    c.fact(format!("depth 12: [{inner:.6}, {outer:.6}]"));

    let path = s.file("disk.json", r#"{"kind":"ball","center":[0,0],"radius":1}"#);
    let run = s.cli(&["measure", "--region", &path, "--table", "0..12"]);
    let rows: Vec<Vec<f64>> = run
        .stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    c.check(run.code == 0 && rows.len() == 13, "measure --table output");
    c.check(rows.windows(2).all(|w| w[1][1] >= w[0][1] && w[1][2] <= w[0][2]), "csv table not monotone");
    s.cli(&["measure", "--region", &path, "--depth", "12"]);
}

fn distributive_not_additive(s: &mut Suite, c: &mut Checks) {
    let dense = Region::dense(Interval::unit(1));
    let rest = Region::complement_within(dense.clone(), Interval::unit(1)).unwrap();
    for d in 0..=12 {
        let m = measure(&dense, d).unwrap();
        c.check(m.outer == 1.0 && m.inner == 0.0, format!("depth {d}: ({}, {})", m.inner, m.outer));
    }
    let depth = 8;
    let mut cuts = 0;
    for k in 1..(1 << depth) {
        let r = cut_additivity_check(&dense, &Hyperplane::new(0, k as f64 / 256.0), depth).unwrap();
        c.check(r.outer_residual == 0.0 && r.inner_residual == 0.0, format!("cut {k}/256 residual"));
        cuts += 1;
    }
    let sum = outer_measure(&dense, 10).unwrap() + outer_measure(&rest, 10).unwrap();
    let whole = outer_measure(&Region::cuboid(Interval::unit(1)), 10).unwrap();
    c.check(sum == 2.0 && whole == 1.0, format!("outer(S) + outer(S^c) = {sum}, outer([0,1]) = {whole}"));
    c.fact(format!("{cuts} cuts exact; outer(S)+outer(S^c) = {sum} vs {whole}"));

    let path = s.file("dense.json", r#"{"kind":"dense","lo":[0],"hi":[1]}"#);
    let run = s.cli(&["measure", "--region", &path, "--depth", "12"]);
    let r = run.result();
    c.check(num(&r["inner"]) == 0.0 && num(&r["outer"]) == 1.0, "cli dense measure");
    let run = s.cli(&["measure", "--region", &path, "--depth", "8", "--cut", "1:0.375"]);
    c.check(num(&run.result()["outer_residual"]) == 0.0, "cli cut residual");
}

fn decomposition_axioms(s: &mut Suite, c: &mut Checks) {
    for n in [1, 2] {
        let r = verify_family_axioms(&IntervalFamily::default(), &Interval::unit(n), 1000, 0);
        c.check(r.all_hold() && r.violations.is_empty(), format!("interval family in {n}-D: {:?}", r.violations));
    }
    let faulty = verify_family_axioms(&SingleCutFamily, &Interval::unit(1), 1000, 0);
    c.check(!faulty.all_hold(), "fault-injected family not caught");
    c.check(faulty.violations.iter().all(|v| !v.witness.is_empty()), "violation without witness");
    if let Some(v) = faulty.violations.first() {
        c.fact(format!("fault caught at axiom {}", v.axiom));
    }
    let ok = s.cli(&["verify", "axioms", "--family", "interval", "--samples", "1000"]).code;
    let bad = s.cli(&["verify", "axioms", "--family", "single-cut", "--samples", "1000"]).code;
    c.check(ok == 0 && bad == 1, format!("cli exit codes {ok}, {bad}"));
}

fn cantor(s: &mut Suite, c: &mut Checks) {
    let (level, eps) = (0.9, 1e-6);
    let start = iv(0.125, 0.5);
    let mu = parse_setfunc_on("density:1-abs(x-0.3)", &start).unwrap();
    let nu = parse_setfunc_on("volume", &start).unwrap();
    let pred = LevelPredicate { mu: mu.as_ref(), nu: nu.as_ref(), level };
    let p = cantor_point(&pred, &start, eps).unwrap();
    let x = p.point[0];
    // g is 1-Lipschitz, so omega(eps) = eps
    let g = 1.0 - (x - 0.3).abs();
    c.check(g >= level - eps, format!("g(x) = {g}"));
    c.check((x - 0.3).abs() <= 0.1 + eps, format!("|x - 0.3| = {}", (x - 0.3).abs()));
    for b in &p.chain {
        c.check(mu.eval(b).unwrap() > level * nu.eval(b).unwrap(), format!("chain element {b} fails"));
    }
    for w in p.chain.windows(2) {
        c.check(w[0].contains(&w[1]) && w[1].side(0) == 0.5 * w[0].side(0), "chain does not halve");
    }
    c.fact(format!("x = {x:.7} after {} bisections", p.chain.len() - 1));
    let run = s.cli(&["cantor", "--mu", "density:1-abs(x-0.3)", "--level", "0.9", "--box", "0.125:0.5", "--eps", "1e-6"]);
    c.check(run.code == 0 && num(&run.result()["point"][0]) == x, "cli cantor point differs");
}

fn random_density(rng: &mut ChaCha8Rng, two_d: bool) -> String {
    let mut k = || rng.gen_range(-200..=200) as f64 / 100.0;
    let mut g = format!("{} + ({})*x + ({})*x^2 + ({})*sin({}*x)", k(), k(), k(), k(), k() * 3.0);
    if two_d {
        g += &format!(" + ({})*cos({}*y) + ({})*x*y", k(), k() * 3.0, k());
    }
    g
}

fn mean_value(s: &mut Suite, c: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut total, mut violations) = (0, 0);
    for i in 0..10 {
        let two_d = i % 2 == 1;
        let g = random_density(&mut rng, two_d);
        let mu = format!("density:{g}");
        let region_box = if two_d { "0:1,-0.5:1" } else { "-1:2" };
        let run = s.cli(&["verify", "meanvalue", "--mu", &mu, &format!("--box={region_box}"), "--samples", "500", "--tol", "1e-6"]);
        let r = run.result();
        total += r["samples"].as_u64().unwrap_or(0);
        violations += r["violations"].as_u64().unwrap_or(u64::MAX);
        c.check(run.code == 0 && r["violations"] == 0, format!("{g}: {}", r["worst"]));
    }
    c.fact(format!("{violations} violations over {total} boxes"));
}

fn strict_recovery(s: &mut Suite, c: &mut Checks) {
    let cases = [("cos(x)", "0:1", 1.0), ("1+x^2", "0:1", 2.0), ("x+y", "0:1,0:1", SQRT_2)];
    for (g, region_box, lipschitz) in cases {
        let mu = format!("density:{g}");
        let l = lipschitz.to_string();
        let run = s.cli(&["verify", "continuity", "--mu", &mu, "--box", region_box, "--points", "25", "--g", g, "--lipschitz", &l]);
        let r = run.result();
        c.check(r["points"] == 25 && r["converged"] == 25, format!("{g}: {} of {} converged", r["converged"], r["points"]));
        c.check(num(&r["max_error"]) < 1e-3, format!("{g}: max error {}", r["max_error"]));
        c.check(r["lipschitz_bound_holds"] == true, format!("{g}: modulus {}", r["modulus"]["ladder"]));
        c.check(run.code == 0, format!("{g}: exit {}", run.code));
        c.fact(format!("{g}: max error {:.1e}", num(&r["max_error"])));
    }
}

fn separation(s: &mut Suite, c: &mut Checks) {
    for extra in [None, Some("--recompute-oracles")] {
        let mut args = vec!["verify", "all", "--only", "cauchy_vs_peano"];
        args.extend(extra);
        let run = s.cli(&args);
        let records = run.result()["records"].as_array().cloned().unwrap_or_default();
        let get = |id: &str| records.iter().find(|r| r["id"] == id).cloned().unwrap_or(Value::Null);
        let cauchy = get("cauchy_vs_peano/oscillating_cauchy");
        let width = get("cauchy_vs_peano/oscillating_peano_width");
        c.check(num(&cauchy["computed"]).abs() <= 1e-3, format!("cauchy estimate {}", cauchy["computed"]));
        c.check(num(&width["computed"]) >= 1.5, format!("peano terminal width {}", width["computed"]));
        c.check(run.code == 0 && records.iter().all(|r| r["verdict"] != "fail"), "separation scenarios");
        if extra.is_some() {
            c.check(num(&width["oracle"]) >= 1.5, format!("quotient scan oracle {}", width["oracle"]));
            c.fact(format!(
                "cauchy {:.1e}, peano width {:.3}, oracle {:.3}",
                num(&cauchy["computed"]),
                num(&width["computed"]),
                num(&width["oracle"])
            ));
        }
    }
    let run = s.cli(&["derive", "--mode", "quotient", "--f", "x^2*sin(1/x)", "--fx", "0", "--at", "0"]);
    c.check(num(&run.result()["value"]).abs() <= 1e-3, "cli quotient estimate");
}

fn random_decomposition(rng: &mut ChaCha8Rng, b: &Interval) -> coexist::Decomposition {
    // dyadic offsets keep cell volumes exact
    let cuts: BTreeSet<(usize, u32)> =
        (0..rng.gen_range(1..8)).map(|_| (rng.gen_range(0..b.dim()), rng.gen_range(1..1024))).collect();
    let cuts: Vec<Cut> = cuts
        .into_iter()
        .map(|(axis, k)| Cut::all(axis, b.lo()[axis] + b.side(axis) * k as f64 / 1024.0))
        .collect();
    interval_decompose(b, &cuts).unwrap()
}

fn darboux(s: &mut Suite, c: &mut Checks) {
    let b = Interval::from_sides(&[(0.0, 2.0), (-1.0, 1.0)]).unwrap();
    let f = parse_expression("sin(3*x) + x^2*y").unwrap();
    let rho = RangeEstimator::new(std::sync::Arc::new(f), &b, RangeMethod::Enclosure).unwrap();
    let nu = parse_setfunc_on("volume", &b).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0;
    for _ in 0..1000 {
        let h = random_decomposition(&mut rng, &b);
        let g = common_refinement(&h, &random_decomposition(&mut rng, &b)).unwrap();
        let (sh, sg) = (darboux_sums(&rho, nu.as_ref(), &h).unwrap(), darboux_sums(&rho, nu.as_ref(), &g).unwrap());
        if !(sh.lower <= sg.lower && sg.upper <= sh.upper && sg.lower <= sg.upper) {
            bad += 1;
        }
    }
    c.check(bad == 0, format!("{bad} of 1000 refinement pairs not monotone"));

    let run = s.cli(&["integrate", "--rho", "cos(x)", "--nu", "volume", "--box", "0:pi/2", "--tol", "1e-4"]);
    let cos = num(&run.result()["proper"]);
    c.check(run.code == 0 && (cos - 1.0).abs() <= 1e-4, format!("int cos = {cos}"));
    let run = s.cli(&["integrate", "--rho", "x", "--nu", "density:2", "--box", "0:1", "--tol", "1e-6"]);
    let x = num(&run.result()["proper"]);
    c.check(run.code == 0 && (x - 1.0).abs() <= 1e-6, format!("int x d(2 vol) = {x}"));
    c.fact(format!("int cos = {cos:.9}, int x d(2 vol) = {x:.9}"));
}

fn round_trip(s: &mut Suite, c: &mut Checks) {
    let run = s.cli(&["verify", "peanodev", "--mu", "density:1+x^2", "--box", "0:1", "--samples", "200", "--tol", "1e-3"]);
    let r = run.result();
    let (rec, back) = (&r["reconstruction"], &r["recovery"]);
    c.check(run.code == 0 && r["verdict"] == "equivalent", format!("verdict {}", r["verdict"]));
    c.check(rec["passed"] == true && rec["samples"] == 200, format!("reconstruction excess {}", rec["max_excess"]));
    c.check(num(&back["max_error"]) < 1e-3, format!("recovery error {}", back["max_error"]));
    c.fact(format!(
        "reconstruction error {:.1e}, recovery error {:.1e}",
        num(&rec["max_error"]),
        num(&back["max_error"])
    ));
}

fn catalog(s: &mut Suite, c: &mut Checks) {
    for extra in [None, Some("--recompute-oracles")] {
        let mut args = vec!["verify", "all", "--seed", "0"];
        args.extend(extra);
        let run = s.cli(&args);
        let r = run.result();
        c.check(run.code == 0 && r["failed"] == 0, format!("{} scenarios failed", r["failed"]));
        let records = r["records"].as_array().cloned().unwrap_or_default();
        for rec in records.iter().filter(|x| x["gating"] == true) {
            c.check(rec["verdict"] != "fail", format!("{} failed", rec["id"]));
        }
        let value = |id: &str| records.iter().find(|x| x["id"] == id).map_or(f64::NAN, |x| num(&x["computed"]));
        let want = [
            ("star_area/unit_circle", PI, 0.01),
            ("star_area/cardioid", 1.5 * PI, 0.01),
            ("cavalieri_volume/unit_ball", 4.0 * PI / 3.0, 0.02),
            ("arc_length/line_derivative", SQRT_2, 1e-6),
            ("arc_length/parabola", 5f64.sqrt() / 2.0 + 2f64.asinh() / 4.0, 1e-4),
            ("ftc/sin", 1.0, 1e-3),
        ];
        for (id, expected, tol) in want {
            c.check((value(id) - expected).abs() <= tol, format!("{id} = {}", value(id)));
        }
        if extra.is_none() {
            c.fact(format!("{} passed, {} skipped", r["passed"], r["skipped"]));
        }
    }
}

fn determinism(s: &mut Suite, c: &mut Checks) {
    for run in &s.runs {
        let (code, stdout) = invoke(&run.args, 4);
        c.check(code == run.code && stdout == run.stdout, format!("differs: coexist {}", run.args.join(" ")));
    }
    c.fact(format!("{} invocations byte-identical", s.runs.len()));
}

type Criterion = fn(&mut Suite, &mut Checks);

fn main() {
    let dir = std::env::temp_dir().join(format!("coexist-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    let mut suite = Suite { dir: dir.clone(), runs: Vec::new() };
    let criteria: [(&str, Criterion); 11] = [
        ("measure convergence", measure_convergence),
        ("distributive but not additive", distributive_not_additive),
        ("decomposition axioms", decomposition_axioms),
        ("cantor point", cantor),
        ("mean value", mean_value),
        ("strict-derivative recovery", strict_recovery),
        ("peano vs cauchy separation", separation),
        ("darboux sums and integrals", darboux),
        ("derivative-integral round trip", round_trip),
        ("catalog", catalog),
        ("determinism across thread counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let mut checks = Checks::default();
        run(&mut suite, &mut checks);
        let secs = started.elapsed().as_secs_f64();
        let verdict = if checks.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} ({secs:.1}s): {}", i + 1, checks.facts.join("; "));
        for f in checks.failures.iter().take(5) {
            println!("    {f}");
        }
        failed += usize::from(!checks.failures.is_empty());
    }
    let _ = std::fs::remove_dir_all(&dir);
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

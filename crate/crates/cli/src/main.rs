//! `coexist`: measure, differentiate and integrate with set functions from
//! the command line.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use coexist::catalog::{run_catalog, CatalogOptions};
use coexist::decomposition::{
    verify_family_axioms, DecompositionFamily, IntervalFamily, MeshFamily, SingleCutFamily, TrivialFamily,
};
use coexist::derivative::{
    continuity_probe, estimate_derivative, estimate_on_points, estimate_uniform_derivative, mean_value_check,
    rn_inequality_check, sample_grid, LevelPredicate, Mode,
};
use coexist::func::{NativeFn, RangeEstimator};
use coexist::integral::{peanodev_check, PeanodevConfig, Verdict};
use coexist::measure::{cut_additivity_check, is_measurable, measure_table};
use coexist::setfunc::parse_number;
use coexist::{
    cantor_point, integrate, measure, parse_expression, parse_region, parse_setfunc, parse_setfunc_on, Error, Hyperplane, Interval,
    RangeMethod, Schedule, SharedFn, SharedSetFn,
};

const SCHEMA: &str = "coexist/1";

#[derive(Parser, Serialize)]
#[command(name = "coexist", version, about = "Peano-Jordan measure, strict derivatives and integrals of set functions")]
struct Cli {
    /// Output format; `measure --table` defaults to csv, everything else to json.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum Command {
    /// Inner and outer measure of a region.
    Measure(MeasureArgs),
    /// Strict, Cauchy or uniform derivative of one set function by another.
    Derive(DeriveArgs),
    /// Lower, upper and proper integral of an expression against a set function.
    Integrate(IntegrateArgs),
    /// Nested-bisection point of the family {A : mu(A) > level * nu(A)}.
    Cantor(CantorArgs),
    /// Property checks and the scenario catalog.
    Verify(VerifyArgs),
}

#[derive(Args, Serialize)]
struct MeasureArgs {
    /// Region document (JSON).
    #[arg(long)]
    region: PathBuf,
    #[arg(long, default_value_t = 10)]
    depth: u32,
    /// Convergence table over depths `d0..d1`.
    #[arg(long)]
    table: Option<String>,
    /// Refine until outer - inner < tol, up to --depth.
    #[arg(long)]
    tol: Option<f64>,
    /// Additivity residual across the grid hyperplane `axis:offset` (axes from 1).
    #[arg(long)]
    cut: Option<String>,
}

#[derive(Args, Serialize)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 3)]
    k_min: u32,
    #[arg(long, default_value_t = 16)]
    k_max: u32,
    #[arg(long, default_value_t = 1)]
    depth_slope: u32,
    #[arg(long, default_value_t = 4)]
    depth_offset: u32,
    #[arg(long, default_value_t = 3)]
    cluster: usize,
}

impl ScheduleArgs {
    fn schedule(&self) -> Schedule {
        Schedule {
            k_min: self.k_min,
            k_max: self.k_max,
            depth_slope: self.depth_slope,
            depth_offset: self.depth_offset,
            cluster: self.cluster,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DeriveMode {
    Peano,
    Cauchy,
    Uniform,
    /// One-dimensional difference quotients of `--f`.
    Quotient,
}

#[derive(Args, Serialize)]
struct DeriveArgs {
    #[arg(long)]
    mu: Option<String>,
    #[arg(long, default_value = "volume")]
    nu: String,
    /// Point `x[,y,..]`.
    #[arg(long)]
    at: Option<String>,
    #[arg(long, value_enum, default_value_t = DeriveMode::Peano)]
    mode: DeriveMode,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Box `lo:hi,..` sampled in uniform mode.
    #[arg(long = "box")]
    region_box: Option<String>,
    /// Sample points in uniform mode.
    #[arg(long, default_value_t = 25)]
    points: usize,
    /// Function for quotient mode.
    #[arg(long)]
    f: Option<String>,
    /// Value of `--f` at the point, for removable singularities.
    #[arg(long)]
    fx: Option<String>,
    #[command(flatten)]
    schedule: ScheduleArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum RangeArg {
    Auto,
    Enclosure,
    Sampled,
}

impl RangeArg {
    fn method(self) -> RangeMethod {
        match self {
            RangeArg::Auto => RangeMethod::Auto,
            RangeArg::Enclosure => RangeMethod::Enclosure,
            RangeArg::Sampled => RangeMethod::Sampled { per_axis: 5, lipschitz_factor: 2.0 },
        }
    }
}

#[derive(Args, Serialize)]
struct IntegrateArgs {
    #[arg(long)]
    rho: String,
    #[arg(long, default_value = "volume")]
    nu: String,
    #[arg(long = "box")]
    region_box: String,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 24)]
    max_depth: u32,
    #[arg(long, value_enum, default_value_t = RangeArg::Auto)]
    range: RangeArg,
}

#[derive(Args, Serialize)]
struct CantorArgs {
    #[arg(long)]
    mu: String,
    #[arg(long, default_value = "volume")]
    nu: String,
    #[arg(long)]
    level: f64,
    #[arg(long = "box")]
    region_box: String,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[command(subcommand)]
    check: VerifyCommand,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum FamilyArg {
    Interval,
    Trivial,
    SingleCut,
    Mesh,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "check", rename_all = "snake_case")]
enum VerifyCommand {
    /// Run the scenario catalog.
    All {
        /// Only scenarios whose id starts with this prefix.
        #[arg(long)]
        only: Option<String>,
        #[arg(long)]
        recompute_oracles: bool,
    },
    /// inf g - tol <= mu(A)/nu(A) <= sup g + tol on random sub-boxes.
    Meanvalue {
        #[arg(long)]
        mu: String,
        #[arg(long, default_value = "volume")]
        nu: String,
        #[arg(long = "box")]
        region_box: String,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// mu(A) >= a nu(A) on cells inside {g >= a}, and dually.
    Rn {
        #[arg(long)]
        mu: String,
        #[arg(long, default_value = "volume")]
        nu: String,
        #[arg(long)]
        g: String,
        #[arg(long = "box")]
        region_box: String,
        /// Comma-separated levels.
        #[arg(long)]
        levels: String,
        #[arg(long, default_value_t = 8)]
        depth: u32,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Strict-derivative estimates on a grid and their modulus of continuity.
    Continuity {
        #[arg(long)]
        mu: String,
        #[arg(long, default_value = "volume")]
        nu: String,
        #[arg(long = "box")]
        region_box: String,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Expected derivative, compared at every point.
        #[arg(long)]
        g: Option<String>,
        /// Check omega(h) <= (L + 0.1) h.
        #[arg(long)]
        lipschitz: Option<f64>,
    },
    /// Strict derivative and integral recover each other.
    Peanodev {
        #[arg(long)]
        mu: String,
        #[arg(long, default_value = "volume")]
        nu: String,
        #[arg(long = "box")]
        region_box: String,
        /// Density for the reverse direction; defaults to the estimated one.
        #[arg(long)]
        rho: Option<String>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 33)]
        lattice: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Axioms of a decomposition family on random sub-boxes.
    Axioms {
        #[arg(long, value_enum, default_value_t = FamilyArg::Interval)]
        family: FamilyArg,
        #[arg(long = "box", default_value = "0:1")]
        region_box: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

/// Bad input; exits with status 2.
enum Failure {
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<Output, Failure>;

enum Output {
    Json { result: Value, passed: bool },
    Table { json: Value, header: Vec<&'static str>, rows: Vec<Vec<String>>, passed: bool },
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("--{flag}: {msg}"))
}

fn parse_box(flag: &str, src: &str) -> Result<Interval, Failure> {
    let sides = src
        .split(',')
        .map(|side| {
            let (lo, hi) = side.split_once(':').ok_or_else(|| usage(flag, format!("`{side}` is not lo:hi")))?;
            Ok((parse_number(lo.trim()).map_err(|e| usage(flag, e))?, parse_number(hi.trim()).map_err(|e| usage(flag, e))?))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Interval::from_sides(&sides).map_err(|e| usage(flag, e))
}

fn parse_point(flag: &str, src: &str) -> Result<Vec<f64>, Failure> {
    src.split(',').map(|c| parse_number(c.trim()).map_err(|e| usage(flag, e))).collect()
}

fn parse_expr(flag: &str, src: &str) -> Result<SharedFn, Failure> {
    Ok(Arc::new(parse_expression(src).map_err(|e| usage(flag, e))?))
}

fn setfunc(flag: &str, spec: &str, domain: &Interval) -> Result<SharedSetFn, Failure> {
    parse_setfunc_on(spec, domain).map_err(|e| usage(flag, e))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn done(result: Value, passed: bool) -> Outcome {
    Ok(Output::Json { result, passed })
}

fn run_measure(a: &MeasureArgs) -> Outcome {
    let doc = std::fs::read_to_string(&a.region).map_err(|e| usage("region", format!("{}: {e}", a.region.display())))?;
    let region = parse_region(&doc).map_err(|e| usage("region", e))?;
    if let Some(t) = &a.table {
        let (d0, d1) = t.split_once("..").ok_or_else(|| usage("table", "expected d0..d1"))?;
        let d0: u32 = d0.parse().map_err(|e| usage("table", e))?;
        let d1: u32 = d1.parse().map_err(|e| usage("table", e))?;
        let rows = measure_table(&region, d0, d1)?;
        let csv_rows = rows
            .iter()
            .map(|m| vec![m.depth.to_string(), m.inner.to_string(), m.outer.to_string(), m.gap().to_string()])
            .collect();
        return Ok(Output::Table {
            json: json!({ "region": region.label(), "table": rows }),
            header: vec!["depth", "inner", "outer", "gap"],
            rows: csv_rows,
            passed: true,
        });
    }
    if let Some(c) = &a.cut {
        let (axis, offset) = c.split_once(':').ok_or_else(|| usage("cut", "expected axis:offset"))?;
        let axis: usize = axis.parse().map_err(|e| usage("cut", e))?;
        if axis == 0 {
            return Err(usage("cut", "axes are numbered from 1"));
        }
        let offset = parse_number(offset).map_err(|e| usage("cut", e))?;
        let r = cut_additivity_check(&region, &Hyperplane::new(axis - 1, offset), a.depth)?;
        return done(to_value(&r), true);
    }
    if let Some(tol) = a.tol {
        let m = is_measurable(&region, tol, a.depth)?;
        return done(to_value(&m), true);
    }
    let m = measure(&region, a.depth)?;
    done(json!({ "region": region.label(), "inner": m.inner, "outer": m.outer, "gap": m.gap(), "report": m }), true)
}

fn run_derive(a: &DeriveArgs) -> Outcome {
    let schedule = a.schedule.schedule();
    if a.mode == DeriveMode::Quotient {
        let f = parse_expr("f", a.f.as_deref().ok_or_else(|| usage("f", "quotient mode needs --f"))?)?;
        let x = parse_point("at", a.at.as_deref().ok_or_else(|| usage("at", "missing point"))?)?;
        let [x] = x[..] else {
            return Err(usage("at", "quotient mode is one-dimensional"));
        };
        let f = match &a.fx {
            Some(v) => {
                let (v, g) = (parse_number(v).map_err(|e| usage("fx", e))?, f.clone());
                NativeFn::shared(f.label(), move |t: &[f64]| if t[0] == x { v } else { g.eval(t).unwrap_or(f64::NAN) })
            }
            None => f,
        };
        let est = coexist::derivative::estimate_cauchy_derivative_1d(&f, x, a.tol, &schedule)?;
        return done(to_value(&est), true);
    }
    let mu_spec = a.mu.as_deref().ok_or_else(|| usage("mu", "missing set function"))?;
    if a.mode == DeriveMode::Uniform {
        let k = parse_box("box", a.region_box.as_deref().ok_or_else(|| usage("box", "uniform mode needs --box"))?)?;
        let n = k.dim();
        let (mu, nu) = (setfunc("mu", mu_spec, &k)?, setfunc("nu", &a.nu, &k)?);
        let per_axis = ((a.points as f64).powf(1.0 / n as f64).round() as usize).max(1);
        let r = estimate_uniform_derivative(mu.as_ref(), nu.as_ref(), &sample_grid(&k, per_axis), a.tol, &schedule)?;
        return done(to_value(&r), true);
    }
    let x = parse_point("at", a.at.as_deref().ok_or_else(|| usage("at", "missing point"))?)?;
    let (mu, nu) = (
        parse_setfunc(mu_spec, x.len()).map_err(|e| usage("mu", e))?,
        parse_setfunc(&a.nu, x.len()).map_err(|e| usage("nu", e))?,
    );
    let mode = if a.mode == DeriveMode::Cauchy { Mode::Cauchy } else { Mode::Peano };
    let est = estimate_derivative(mu.as_ref(), nu.as_ref(), &x, a.tol, &schedule, mode)?;
    done(to_value(&est), true)
}

fn run_integrate(a: &IntegrateArgs) -> Outcome {
    let b = parse_box("box", &a.region_box)?;
    let nu = setfunc("nu", &a.nu, &b)?;
    let rho = RangeEstimator::new(parse_expr("rho", &a.rho)?, &b, a.range.method())?;
    let r = integrate(&rho, nu.as_ref(), &b, a.tol, a.max_depth)?;
    let passed = r.proper.is_some();
    done(to_value(&r), passed)
}

fn run_cantor(a: &CantorArgs) -> Outcome {
    let b = parse_box("box", &a.region_box)?;
    let (mu, nu) = (setfunc("mu", &a.mu, &b)?, setfunc("nu", &a.nu, &b)?);
    let pred = LevelPredicate { mu: mu.as_ref(), nu: nu.as_ref(), level: a.level };
    let c = cantor_point(&pred, &b, a.eps)?;
    let last = c.chain.last().map_or(0.0, |b| b.diameter());
    done(json!({ "point": c.point, "steps": c.chain.len() - 1, "final_diameter": last, "chain": c.chain }), true)
}

fn run_verify(check: &VerifyCommand, seed: u64) -> Outcome {
    match check {
        VerifyCommand::All { only, recompute_oracles } => {
            let opts = CatalogOptions { recompute_oracles: *recompute_oracles, seed };
            let r = run_catalog(only.as_deref(), &opts)?;
            let rows = r
                .records
                .iter()
                .map(|s| {
                    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
                    vec![
                        s.id.clone(),
                        to_value(&s.verdict).as_str().unwrap_or_default().to_string(),
                        opt(s.computed),
                        s.expected.to_string(),
                        opt(s.tolerance),
                        to_value(&s.provenance).as_str().unwrap_or_default().to_string(),
                    ]
                })
                .collect();
            let passed = r.all_gating_pass();
            Ok(Output::Table {
                json: to_value(&r),
                header: vec!["id", "verdict", "computed", "expected", "tolerance", "provenance"],
                rows,
                passed,
            })
        }
        VerifyCommand::Meanvalue { mu, nu, region_box, samples, tol } => {
            let s = parse_box("box", region_box)?;
            let (mu, nu) = (setfunc("mu", mu, &s)?, setfunc("nu", nu, &s)?);
            let r = mean_value_check(mu.as_ref(), nu.as_ref(), &s, *samples, *tol, seed)?;
            let passed = r.violations == 0;
            done(to_value(&r), passed)
        }
        VerifyCommand::Rn { mu, nu, g, region_box, levels, depth, tol } => {
            let s = parse_box("box", region_box)?;
            let (mu, nu) = (setfunc("mu", mu, &s)?, setfunc("nu", nu, &s)?);
            let levels = parse_point("levels", levels)?;
            let r = rn_inequality_check(mu.as_ref(), nu.as_ref(), parse_expr("g", g)?, &s, &levels, *depth, *tol)?;
            let passed = r.passed();
            done(to_value(&r), passed)
        }
        VerifyCommand::Continuity { mu, nu, region_box, points, tol, g, lipschitz } => {
            let s = parse_box("box", region_box)?;
            let n = s.dim();
            let (mu, nu) = (setfunc("mu", mu, &s)?, setfunc("nu", nu, &s)?);
            let per_axis = ((*points as f64).powf(1.0 / n as f64).round() as usize).max(2);
            let grid = sample_grid(&s, per_axis);
            let est = estimate_on_points(mu.as_ref(), nu.as_ref(), &grid, *tol, &Schedule::default())?;
            let converged = est.iter().filter(|(_, e)| e.converged).count();
            let points_est: Vec<_> = est.iter().map(|(p, _)| p.clone()).collect();
            let spacing = (0..n).map(|i| s.side(i) / per_axis as f64).fold(f64::INFINITY, f64::min);
            let ladder: Vec<f64> = (0..8).map(|j| spacing * (1u32 << j) as f64).filter(|&h| h <= s.diameter()).collect();
            let report = continuity_probe(&points_est, &ladder, *tol);
            let mut passed = converged == grid.len() && report.nondecreasing && report.shrinking;
            let max_error = match g {
                Some(src) => {
                    let g = parse_expr("g", src)?;
                    let mut worst: f64 = 0.0;
                    for p in &points_est {
                        worst = worst.max((p.value - g.eval(&p.point)?).abs());
                    }
                    passed &= worst < *tol;
                    Some(worst)
                }
                None => None,
            };
            let lipschitz_ok = lipschitz.map(|l| report.ladder.iter().all(|&(h, w)| w <= (l + 0.1) * h));
            passed &= lipschitz_ok.unwrap_or(true);
            done(
                json!({
                    "points": grid.len(),
                    "converged": converged,
                    "estimates": points_est,
                    "max_error": max_error,
                    "modulus": report,
                    "lipschitz_bound_holds": lipschitz_ok,
                }),
                passed,
            )
        }
        VerifyCommand::Peanodev { mu, nu, region_box, rho, samples, lattice, tol } => {
            let s = parse_box("box", region_box)?;
            let (mu, nu) = (setfunc("mu", mu, &s)?, setfunc("nu", nu, &s)?);
            let rho = rho.as_deref().map(|r| parse_expr("rho", r)).transpose()?;
            let config = PeanodevConfig { lattice_per_axis: *lattice, samples: *samples, seed, tol: *tol, ..Default::default() };
            let r = peanodev_check(mu.as_ref(), nu, &s, rho, &config)?;
            let passed = r.verdict != Verdict::Failed;
            done(to_value(&r), passed)
        }
        VerifyCommand::Axioms { family, region_box, samples } => {
            let s = parse_box("box", region_box)?;
            let fam: Box<dyn DecompositionFamily> = match family {
                FamilyArg::Interval => Box::new(IntervalFamily::default()),
                FamilyArg::Trivial => Box::new(TrivialFamily),
                FamilyArg::SingleCut => Box::new(SingleCutFamily),
                FamilyArg::Mesh => Box::new(MeshFamily::default()),
            };
            let r = verify_family_axioms(fam.as_ref(), &s, *samples, seed);
            let passed = r.all_hold();
            done(to_value(&r), passed)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Measure(a) => run_measure(a),
        Command::Derive(a) => run_derive(a),
        Command::Integrate(a) => run_integrate(a),
        Command::Cantor(a) => run_cantor(a),
        Command::Verify(v) => run_verify(&v.check, cli.seed),
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<(), String> {
    let envelope = |result: &Value| json!({ "schema": SCHEMA, "config": to_value(cli), "result": result });
    let format = cli.format.unwrap_or(Format::Json);
    match out {
        Output::Table { header, rows, .. } if format == Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            w.write_record(header).map_err(|e| e.to_string())?;
            for r in rows {
                w.write_record(r).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())
        }
        Output::Table { json, .. } => print_json(format, &envelope(json)),
        Output::Json { result, .. } => print_json(format, &envelope(result)),
    }
}

fn print_json(format: Format, v: &Value) -> Result<(), String> {
    let text = if format == Format::Pretty { serde_json::to_string_pretty(v) } else { serde_json::to_string(v) };
    let text = text.map_err(|e| e.to_string())?;
    writeln!(std::io::stdout().lock(), "{text}").map_err(|e| e.to_string())
}

/// Fills in the default format and rejects csv where no table exists.
fn resolve_format(cli: &mut Cli) -> Result<(), String> {
    let tabular = match &cli.command {
        Command::Measure(a) => a.table.is_some(),
        Command::Verify(v) => matches!(v.check, VerifyCommand::All { .. }),
        _ => false,
    };
    let default = match &cli.command {
        Command::Measure(_) if tabular => Format::Csv,
        _ => Format::Json,
    };
    let format = *cli.format.get_or_insert(default);
    if format == Format::Csv && !tabular {
        return Err("--format: csv is only available for `measure --table` and `verify all`".into());
    }
    Ok(())
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("COEXIST_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| format!("COEXIST_THREADS: `{v}` is not a thread count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if let Err(e) = resolve_format(&mut cli).and_then(|_| configure_threads()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli, &out) {
                if e.contains("Broken pipe") {
                    return ExitCode::SUCCESS;
                }
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            let passed = match out {
                Output::Json { passed, .. } | Output::Table { passed, .. } => passed,
            };
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

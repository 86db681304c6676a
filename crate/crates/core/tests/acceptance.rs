//! Acceptance criteria 1–10. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion fails.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use approxsym::determine::{extract, in_solution_span, report, solve};
use approxsym::expr::{parse_with, Expr};
use approxsym::models::{builtin_source, golden_check, load_builtin, GoldenReport, Model, Status};
use approxsym::noether::{divergence_check, noether_fluxes, ConservationLaw, FluxFormula, GaugeTerm, NoetherError};
use approxsym::numverify::{drift, eps_sweep, integrate, order_ratio, prepare, Grid};
use approxsym::perturb::EpsSeries;
use approxsym::symmetry::ApproximateGenerator;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, TestRunner};

const GOLDEN_TIME: Duration = Duration::from_secs(10);
const THREE_BODY_TIME: Duration = Duration::from_secs(60);
const DRIFT_TOL: f64 = 1e-8;
const DRIFT_TIME: Duration = Duration::from_secs(5);
const ORDER_RATIO_MIN: f64 = 12.0;
/// Coarse step for the order check: at the production step the drift is at
/// the rounding floor and halving cannot reduce it further.
const ORDER_STEP: f64 = 0.1;
const SWEEP_SLOPE_MIN: f64 = 1.9;
const SWEEP_EPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
const SWEEP_TIME: Duration = Duration::from_secs(30);
const PROPERTY_CASES: u32 = 128;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn golden(name: &str) -> (Model, GoldenReport) {
    let m = load_builtin(name).unwrap();
    let r = golden_check(&m).unwrap();
    (m, r)
}

fn entries_pass(r: &GoldenReport, labels: &[&str]) -> Vec<String> {
    labels
        .iter()
        .filter(|l| !r.entries.iter().any(|e| e.label == **l && e.status == Status::Pass))
        .map(|l| l.to_string())
        .collect()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let m = load_builtin("oscillator-arbitraryF").unwrap();
    let bad: Vec<&str> = m
        .golden
        .iter()
        .filter(|g| !approxsym::noether::variational_residual(&g.generator, &m.lagrangian, &g.gauge).unwrap().is_zero())
        .map(|g| g.label.as_str())
        .collect();
    let el = t.elapsed();
    outcome(
        m.golden.len() == 6 && bad.is_empty() && el < GOLDEN_TIME,
        format!("{} pairs, nonzero residuals {bad:?}, {el:.2?}", m.golden.len()),
    )
}

fn criterion_2() -> Outcome {
    let (_, r) = golden("oscillator-arbitraryF");
    let bad = entries_pass(&r, &["Xi1", "Xi2", "Xi3", "Xi4", "Xi5", "Xi6"]);
    let div = r.entries.iter().all(|e| e.quantity_match == Some(true) && e.divergence.len() == 2 && e.divergence.iter().all(|b| *b));
    outcome(bad.is_empty() && div, format!("failing {bad:?}, divergence at both orders: {div}"))
}

fn criterion_3() -> Outcome {
    let (_, q) = golden("oscillator-quadratic");
    let (_, c) = golden("oscillator-cubic-inverse");
    let mut bad = entries_pass(&q, &["Xi7a", "Xi8a"]);
    bad.extend(entries_pass(&c, &["Xi7b", "Xi8b"]));
    outcome(bad.is_empty() && q.ok() && c.ok(), format!("failing {bad:?}"))
}

fn criterion_4() -> Outcome {
    let (m, r) = golden("coupled-system");
    let bad = entries_pass(&r, &["Xi1", "Xi2", "Xi3", "Xi4", "Xi5", "Xi6"]);
    let deps = m.check_dependencies().unwrap();
    let held = deps.iter().filter(|(_, b)| *b).count();
    outcome(bad.is_empty() && deps.len() == 3 && held == 3, format!("failing {bad:?}, eps-shift dependencies {held}/3"))
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let (m, r) = golden("three-body");
    let el = t.elapsed();
    let labels = ["Xi1", "Xi2a", "Xi2b", "Xi3a", "Xi3b", "Xi4", "Xi5", "Xi6"];
    let bad = entries_pass(&r, &labels);
    let trivial = ["Xi11", "Xi12"].iter().all(|l| {
        r.entries
            .iter()
            .any(|e| e.label == *l && e.status == Status::Pass && e.classification == Some(approxsym::noether::Classification::Trivial))
    });
    let deps = m.check_dependencies().unwrap();
    let dep_ok = deps.len() == 1 && deps[0].1;
    outcome(
        bad.is_empty() && trivial && dep_ok && r.ok() && el < THREE_BODY_TIME,
        format!("failing {bad:?}, Xi11/Xi12 trivial: {trivial}, m1m2 I6 dependency: {dep_ok}, {el:.2?}"),
    )
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, dim) in [
        ("oscillator-arbitraryF", 6),
        ("oscillator-quadratic", 8),
        ("oscillator-cubic-inverse", 8),
        ("coupled-system", 6),
    ] {
        let m = load_builtin(name).unwrap();
        let a = m.ansatz().unwrap();
        let sol = solve(&extract(&m.lagrangian, &a).unwrap()).unwrap();
        let members = m
            .golden
            .iter()
            .filter(|g| in_solution_span(&a, &sol, &g.generator, &g.gauge).unwrap())
            .count();
        let sound = report(&a, &sol)
            .unwrap()
            .iter()
            .all(|s| approxsym::noether::variational_residual(&s.generator, &m.lagrangian, &s.gauge).unwrap().is_zero());
        pass &= sol.len() == dim && members == m.golden.len() && sound;
        notes.push(format!("{name} {}/{dim} span {members}/{}", sol.len(), m.golden.len()));
    }
    outcome(pass, notes.join(", "))
}

fn energy(m: &Model) -> EpsSeries {
    m.golden_quantities().into_iter().find(|(l, _)| l == "I1").unwrap().1
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let m = load_builtin("oscillator-quadratic").unwrap();
    let (nm, y0, grid) = prepare(&m).unwrap();
    let i1 = energy(&m);
    let d = drift(&integrate(&nm, &y0, &grid).unwrap(), &nm, &i1).unwrap();
    let ratio = order_ratio(&nm, &y0, &Grid::new(grid.t0, grid.t1, ORDER_STEP), &i1).unwrap();
    let el = t.elapsed();
    outcome(
        grid.h == 1e-3 && grid.t1 == 20.0 && d.max_drift.iter().all(|x| *x <= DRIFT_TOL) && ratio >= ORDER_RATIO_MIN && el < DRIFT_TIME,
        format!("drift I0 {:.2e}, I1 {:.2e}; halving ratio {ratio:.1} at h={ORDER_STEP}; {el:.2?}", d.max_drift[0], d.max_drift[1]),
    )
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let m = load_builtin("oscillator-quadratic").unwrap();
    let (_, _, grid) = prepare(&m).unwrap();
    let r = eps_sweep(&m, &energy(&m), &SWEEP_EPS, &grid).unwrap();
    let el = t.elapsed();
    let pts: Vec<String> = r.points.iter().map(|p| format!("{:.0e}:{:.2e}", p.eps, p.drift)).collect();
    outcome(r.slope >= SWEEP_SLOPE_MIN && el < SWEEP_TIME, format!("slope {:.3} ({}); {el:.2?}", r.slope, pts.join(" ")))
}

fn run_property<S: Strategy>(strategy: S, check: impl Fn(S::Value) -> common::Check) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

fn criterion_9() -> Outcome {
    use common::*;
    let results = [
        ("R-Leibniz", run_property((any_expr(), any_expr()), |(a, b)| r_leibniz(&a, &b))),
        ("D-Leibniz", run_property((any_expr(), any_expr()), |(a, b)| d_leibniz(&a, &b))),
        ("D-commute", run_property(grow(atoms(&plane(), vec![]), true), |e| d_commute(&e))),
        (
            "gauge-shift",
            run_property((coefficients(), gauge_fn(), 0u32..=1, family_member(), family_member()), |(c, p, k, f, h)| {
                gauge_shift(&c, &p, k, &f, &h)
            }),
        ),
        ("eps-shift", run_property(coefficients(), |c| eps_shift(&c))),
        ("zeroth-order", run_property(coefficients(), |c| zeroth_order(&c))),
    ];
    let failed: Vec<String> = results.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    outcome(
        failed.is_empty(),
        format!("{} suites x {PROPERTY_CASES} cases, failures {failed:?}", results.len()),
    )
}

fn criterion_10() -> Outcome {
    // Corrupted golden record.
    let src = builtin_source("oscillator-quadratic").unwrap();
    let bad = src.replacen("\"-cos(t)*u0\"", "\"cos(t)*u0\"", 1);
    let corrupted = src != bad && !golden_check(&Model::from_json(&bad).unwrap()).unwrap().ok();
    // Non-symmetry generator.
    let m = load_builtin("oscillator-quadratic").unwrap();
    let s = m.space().clone();
    let g = ApproximateGenerator::from_exact(s.clone(), &[Expr::zero()], &[Expr::one()]).unwrap();
    let rejected = matches!(
        noether_fluxes(&g, &m.lagrangian, &GaugeTerm::zero(&s), FluxFormula::Expanded),
        Err(NoetherError::NotAVariationalSymmetry { .. })
    );
    // Non-conserved flux.
    let u0 = parse_with("u0", &m.context()).unwrap();
    let law = ConservationLaw::from_fluxes(vec![EpsSeries::new(vec![u0, Expr::zero()])]);
    let fails = !divergence_check(&law, &m.lagrangian).unwrap().iter().all(|b| *b);
    outcome(
        corrupted && rejected && fails,
        format!("corrupted record fails: {corrupted}, non-symmetry rejected: {rejected}, non-conserved flux fails: {fails}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("golden symmetries (arbitrary F)", criterion_1),
        ("golden conserved quantities (arbitrary F)", criterion_2),
        ("classification branches", criterion_3),
        ("coupled system", criterion_4),
        ("three-body", criterion_5),
        ("discovery", criterion_6),
        ("numeric drift", criterion_7),
        ("eps-sweep scaling", criterion_8),
        ("property suites", criterion_9),
        ("negative controls", criterion_10),
    ];
    let mut failed = Vec::new();
    for (n, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        // Bypasses the harness capture so the lines always reach the log.
        writeln!(std::io::stdout(), "criterion {:>2} {}: {name} — {}", n + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail).unwrap();
        if !o.pass {
            failed.push(n + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

use approxsym::determine::{extract, in_solution_span, report, solve};
use approxsym::models::load_builtin;
use approxsym::noether::variational_residual;

fn discover(name: &str, expected: usize) {
    let m = load_builtin(name).unwrap();
    let a = m.ansatz().unwrap();
    let sys = extract(&m.lagrangian, &a).unwrap();
    let sol = solve(&sys).unwrap();
    assert_eq!(sol.len(), expected, "{name}");
    for g in &m.golden {
        assert!(
            in_solution_span(&a, &sol, &g.generator, &g.gauge).unwrap(),
            "{name}: {} not in the discovered span",
            g.label
        );
    }
    for s in report(&a, &sol).unwrap() {
        assert!(variational_residual(&s.generator, &m.lagrangian, &s.gauge).unwrap().is_zero());
    }
}

#[test]
fn oscillator_arbitrary_f() {
    discover("oscillator-arbitraryF", 6);
}

#[test]
fn oscillator_quadratic() {
    discover("oscillator-quadratic", 8);
}

#[test]
fn oscillator_cubic_inverse() {
    discover("oscillator-cubic-inverse", 8);
}

#[test]
fn coupled_system() {
    discover("coupled-system", 6);
}

#[test]
fn report_is_canonical() {
    let m = load_builtin("oscillator-arbitraryF").unwrap();
    let a = m.ansatz().unwrap();
    let sol = solve(&extract(&m.lagrangian, &a).unwrap()).unwrap();
    let first = report(&a, &sol).unwrap();
    let coords: Vec<_> = first.iter().map(|s| s.coords.clone()).collect();
    let again = report(&a, &coords).unwrap();
    assert_eq!(coords, again.iter().map(|s| s.coords.clone()).collect::<Vec<_>>());
    for s in &first {
        assert!(s.coords.values().next().unwrap().is_one());
    }
}

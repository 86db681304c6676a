//! Brackets of golden symmetries are again variational symmetries, with
//! gauge `X₁(φ₂) − X₂(φ₁)`.

use approxsym::models::load_builtin;
use approxsym::noether::{variational_residual, GaugeTerm};

fn closes(name: &str) {
    let m = load_builtin(name).unwrap();
    for (i, a) in m.golden.iter().enumerate() {
        for b in &m.golden[i + 1..] {
            let g = a.generator.commutator(&b.generator).unwrap();
            let phi = a
                .gauge
                .phi
                .iter()
                .zip(&b.gauge.phi)
                .map(|(pa, pb)| a.generator.apply(pb).unwrap().sub(&b.generator.apply(pa).unwrap()).unwrap())
                .collect();
            let r = variational_residual(&g, &m.lagrangian, &GaugeTerm::new(phi).unwrap()).unwrap();
            assert!(r.is_zero(), "{name}: [{}, {}] residual {r:?}", a.label, b.label);
        }
    }
}

#[test]
fn arbitrary_f_golden_generators_close() {
    closes("oscillator-arbitraryF");
}

#[test]
fn quadratic_golden_generators_close() {
    closes("oscillator-quadratic");
}

#[test]
fn free_particle_golden_generators_close() {
    closes("free-particle");
}

#[test]
fn bracket_without_its_gauge_fails() {
    // [d/dt, eps sin(t) d/du] = eps cos(t) d/du, which needs eps sin(t) u0.
    let m = load_builtin("oscillator-quadratic").unwrap();
    let (a, b) = (&m.golden[0], &m.golden[1]);
    let g = a.generator.commutator(&b.generator).unwrap();
    assert!(!g.is_zero());
    let r = variational_residual(&g, &m.lagrangian, &GaugeTerm::zero(m.space())).unwrap();
    assert!(!r.is_zero());
}

//! Strategies and checks shared by the property suite and the acceptance
//! harness.
#![allow(dead_code)]

use approxsym::expr::{differentiate, is_zero, substitute, Expr};
use approxsym::jet::JetSpace;
use approxsym::models::load_builtin;
use approxsym::noether::{divergence_check, noether_fluxes, variational_residual, ConservationLaw, FluxFormula, GaugeTerm, PerturbedLagrangian};
use approxsym::perturb::{recursion_r, EpsSeries};
use approxsym::symmetry::ApproximateGenerator;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

pub fn osc() -> JetSpace {
    JetSpace::ode(&["u"], 1)
}

pub fn plane() -> JetSpace {
    JetSpace::new(&["t", "x"], &["u"], 1, 3)
}

pub fn grow(leaf: BoxedStrategy<Expr>, trig: bool) -> BoxedStrategy<Expr> {
    leaf.prop_recursive(3, 12, 2, move |inner| {
        let mut ops = vec![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a + &b).boxed(),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a * &b).boxed(),
            (inner.clone(), 2i64..=3).prop_map(|(a, n)| a.powi(n)).boxed(),
        ];
        if trig {
            ops.push(inner.clone().prop_map(Expr::sin).boxed());
            ops.push(inner.prop_map(Expr::cos).boxed());
        }
        proptest::strategy::Union::new(ops)
    })
    .boxed()
}

fn leaves(v: Vec<Expr>) -> BoxedStrategy<Expr> {
    prop_oneof![(-3i64..=3).prop_map(Expr::int), proptest::sample::select(v)].boxed()
}

/// Independent variables, coordinates and first derivatives of `space`.
pub fn atoms(space: &JetSpace, extra: Vec<Expr>) -> BoxedStrategy<Expr> {
    let mut v: Vec<Expr> = (0..space.n()).map(|i| space.x(i)).collect();
    for a in 0..space.m() {
        for k in 0..=space.order {
            v.push(space.coord(a, k));
            for i in 0..space.n() {
                v.push(space.deriv(a, k, &[i]));
            }
        }
    }
    v.extend(extra);
    leaves(v)
}

/// Polynomial/trigonometric expressions over the oscillator jet space and a
/// constant `a`.
pub fn any_expr() -> BoxedStrategy<Expr> {
    grow(atoms(&osc(), vec![Expr::sym("a")]), true)
}

/// Polynomials in `t`, `sin t`, `cos t` and the oscillator coordinates.
pub fn poly_trig() -> BoxedStrategy<Expr> {
    let t = Expr::sym("t");
    grow(atoms(&osc(), vec![Expr::sin(t.clone()), Expr::cos(t)]), false)
}

/// Derivative-free functions of `t`, `u0`, `u1`.
pub fn gauge_fn() -> BoxedStrategy<Expr> {
    let s = osc();
    let t = s.x(0);
    grow(leaves(vec![t.clone(), Expr::sin(t.clone()), Expr::cos(t), s.coord(0, 0), s.coord(0, 1)]), false)
}

/// Polynomials in `t` and `u0` only.
pub fn family_member() -> BoxedStrategy<Expr> {
    let s = osc();
    let leaf = prop_oneof![(-2i64..=2).prop_map(Expr::int), proptest::sample::select(vec![s.x(0), s.coord(0, 0)])].boxed();
    grow(leaf, false)
}

pub fn rational() -> impl Strategy<Value = Expr> {
    (-4i64..=4, 1i64..=3).prop_map(|(n, d)| Expr::rational(n, d))
}

pub fn coefficients() -> impl Strategy<Value = Vec<Expr>> {
    proptest::collection::vec(rational(), 6)
}

pub fn random_generator() -> impl Strategy<Value = ApproximateGenerator> {
    proptest::collection::vec(family_member(), 4).prop_map(|m| {
        ApproximateGenerator::from_matrix(osc(), vec![vec![m[0].clone()], vec![m[1].clone()]], vec![vec![m[2].clone()], vec![m[3].clone()]]).unwrap()
    })
}

pub fn series_eq(a: &EpsSeries, b: &EpsSeries) -> bool {
    a.sub(b).map(|d| d.is_zero()).unwrap_or(false)
}

pub fn gen_eq(a: &ApproximateGenerator, b: &ApproximateGenerator) -> bool {
    a.xi.iter().zip(&b.xi).chain(a.eta.iter().zip(&b.eta)).all(|(x, y)| series_eq(x, y))
}

fn vanishes(e: &Expr) -> bool {
    is_zero(e).is_zero()
}

/// Random constant combination of the six golden pairs of the arbitrary-F
/// oscillator: itself a variational symmetry.
pub fn golden_combination(c: &[Expr]) -> (PerturbedLagrangian, ApproximateGenerator, GaugeTerm) {
    let model = load_builtin("oscillator-arbitraryF").unwrap();
    let space = model.space().clone();
    let mut g = ApproximateGenerator::zero(space.clone());
    let mut phi = vec![EpsSeries::zero(space.order); space.n()];
    for (rec, ci) in model.golden.iter().zip(c) {
        g = g.add(&rec.generator.scale(ci)).unwrap();
        for (p, q) in phi.iter_mut().zip(&rec.gauge.phi) {
            *p = p.add(&q.scale(ci)).unwrap();
        }
    }
    (model.lagrangian.clone(), g, GaugeTerm::new(phi).unwrap())
}

pub fn r_leibniz(a: &Expr, b: &Expr) -> Check {
    let lhs = recursion_r(&(a * b)).unwrap();
    let rhs = &(&recursion_r(a).unwrap() * b) + &(a * &recursion_r(b).unwrap());
    prop_assert!(vanishes(&(&lhs - &rhs)));
    Ok(())
}

pub fn d_leibniz(a: &Expr, b: &Expr) -> Check {
    let s = osc();
    let lhs = s.total_derivative(&(a * b), 0).unwrap();
    let rhs = &(&s.total_derivative(a, 0).unwrap() * b) + &(a * &s.total_derivative(b, 0).unwrap());
    prop_assert!(vanishes(&(&lhs - &rhs)));
    Ok(())
}

pub fn d_commute(e: &Expr) -> Check {
    let s = plane();
    let tx = s.total_derivative(&s.total_derivative(e, 0).unwrap(), 1).unwrap();
    let xt = s.total_derivative(&s.total_derivative(e, 1).unwrap(), 0).unwrap();
    prop_assert!(vanishes(&(&tx - &xt)));
    Ok(())
}

/// Adding `ε^k ψ` to the gauge changes the residual by exactly `ε^k D_t ψ`;
/// adding `D_t χ` to the Lagrangian and `−Ξχ` to the gauge keeps the flux.
pub fn gauge_shift(c: &[Expr], psi: &Expr, k: u32, f: &Expr, h: &Expr) -> Check {
    let (l, g, phi) = golden_combination(c);
    let s = l.space.clone();
    let psi = if k == 0 { substitute(psi, &[(s.coord(0, 1), Expr::zero())].into_iter().collect()) } else { psi.clone() };
    let shifted = GaugeTerm::new(vec![phi.phi[0].add(&EpsSeries::monomial(psi.clone(), k, 1)).unwrap()]).unwrap();
    let r0 = variational_residual(&g, &l, &phi).unwrap();
    let r1 = variational_residual(&g, &l, &shifted).unwrap();
    let want = EpsSeries::monomial(s.total_derivative(&psi, 0).unwrap(), k, 1);
    prop_assert!(series_eq(&r1.sub(&r0).unwrap(), &want));

    let chi = EpsSeries::new(vec![f.clone(), h + &(&differentiate(f, &s.coord(0, 0)) * &s.coord(0, 1))]);
    let dchi = chi.try_map(|e| s.total_derivative(e, 0)).unwrap();
    let l2 = PerturbedLagrangian::new(s.clone(), l.l.add(&dchi).unwrap()).unwrap();
    let phi2 = GaugeTerm::new(vec![phi.phi[0].sub(&g.apply(&chi).unwrap()).unwrap()]).unwrap();
    let a = noether_fluxes(&g, &l, &phi, FluxFormula::Expanded).unwrap();
    let b = noether_fluxes(&g, &l2, &phi2, FluxFormula::Expanded).unwrap();
    prop_assert!(series_eq(&a.fluxes[0], &b.fluxes[0]));
    Ok(())
}

/// `(εg, εφ)` is a symmetry with flux `ε Φ`.
pub fn eps_shift(c: &[Expr]) -> Check {
    let (l, g, phi) = golden_combination(c);
    let law = noether_fluxes(&g, &l, &phi, FluxFormula::Expanded).unwrap();
    let shifted = noether_fluxes(&g.shift(), &l, &phi.shift(), FluxFormula::Expanded).unwrap();
    prop_assert!(series_eq(&shifted.fluxes[0], &law.fluxes[0].shift()));
    Ok(())
}

/// The order-0 flux of a verified law is conserved by `L_0` alone.
pub fn zeroth_order(c: &[Expr]) -> Check {
    let (l, g, phi) = golden_combination(c);
    let law = noether_fluxes(&g, &l, &phi, FluxFormula::Expanded).unwrap();
    let l0 = PerturbedLagrangian::new(JetSpace::ode(&["u"], 0), EpsSeries::new(vec![l.l.get(0).clone()])).unwrap();
    let q0 = ConservationLaw::from_fluxes(vec![EpsSeries::new(vec![law.fluxes[0].get(0).clone()])]);
    prop_assert!(divergence_check(&q0, &l0).unwrap().iter().all(|b| *b));
    Ok(())
}

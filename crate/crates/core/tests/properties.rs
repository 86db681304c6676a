//! Randomized invariants of the kernel, the jet operators and the
//! Noether machinery.

mod common;

use approxsym::expr::{differentiate, is_zero, parse_with, Expr, Verdict};
use approxsym::jet::JetSpace;
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_form_is_idempotent(e in any_expr()) {
        prop_assert_eq!(e.normalize(), e.clone());
        prop_assert_eq!(e.normalize().normalize(), e.normalize());
    }

    #[test]
    fn print_parse_round_trip(e in any_expr()) {
        let ctx = osc().context(&["a".to_string()]);
        prop_assert_eq!(parse_with(&e.to_string(), &ctx).unwrap(), e);
    }

    #[test]
    fn differentiation_is_linear(e1 in any_expr(), e2 in any_expr(), a in rational(), b in rational(), v in 0usize..3) {
        let s = osc();
        let var = [s.x(0), s.coord(0, 0), s.deriv(0, 1, &[0])][v].clone();
        let lhs = differentiate(&(&(&a * &e1) + &(&b * &e2)), &var);
        let rhs = &(&a * &differentiate(&e1, &var)) + &(&b * &differentiate(&e2, &var));
        prop_assert!(is_zero(&(&lhs - &rhs)).is_zero());
    }

    #[test]
    fn zero_test_is_sound(e in poly_trig()) {
        prop_assert!(is_zero(&(&e - &e.normalize())).is_zero());
        let shifted = &e + &Expr::one();
        if shifted.is_zero_literal() {
            prop_assert!(is_zero(&shifted).is_zero());
        } else {
            prop_assert_eq!(is_zero(&shifted), Verdict::NonZero);
        }
    }

    #[test]
    fn total_derivative_leibniz(a in any_expr(), b in any_expr()) {
        d_leibniz(&a, &b)?;
    }

    #[test]
    fn total_derivatives_commute(e in grow(atoms(&plane(), vec![]), true)) {
        d_commute(&e)?;
    }

    #[test]
    fn total_derivative_of_jet_free_expression_is_partial(e in grow(atoms(&JetSpace::ode(&[], 0), vec![Expr::sym("a")]), true)) {
        let s = osc();
        prop_assert_eq!(s.total_derivative(&e, 0).unwrap(), differentiate(&e, &s.x(0)));
    }

    #[test]
    fn recursion_operator_leibniz(a in any_expr(), b in any_expr()) {
        r_leibniz(&a, &b)?;
    }

    #[test]
    fn gauge_shift_invariance(c in coefficients(), psi in gauge_fn(), k in 0u32..=1, f in family_member(), h in family_member()) {
        gauge_shift(&c, &psi, k, &f, &h)?;
    }

    #[test]
    fn eps_multiple_of_a_law(c in coefficients()) {
        eps_shift(&c)?;
    }

    #[test]
    fn zeroth_order_is_exact(c in coefficients()) {
        zeroth_order(&c)?;
    }

    #[test]
    fn prolongation_commutes_with_eps_shift(g in random_generator()) {
        let a = g.shift().prolong(1).unwrap();
        let b = g.prolong(1).unwrap().shift();
        prop_assert!(series_eq(a.prolongation(0, &[0]).unwrap(), b.prolongation(0, &[0]).unwrap()));
    }

    #[test]
    fn commutator_is_antisymmetric_and_bilinear(a in random_generator(), b in random_generator(), c in random_generator()) {
        let ab = a.commutator(&b).unwrap();
        let ba = b.commutator(&a).unwrap();
        prop_assert!(gen_eq(&ab, &ba.scale(&Expr::int(-1))));
        let lhs = a.commutator(&b.add(&c).unwrap()).unwrap();
        let rhs = ab.add(&a.commutator(&c).unwrap()).unwrap();
        prop_assert!(gen_eq(&lhs, &rhs));
    }
}

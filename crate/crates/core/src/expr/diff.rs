use std::collections::HashMap;

use num_traits::One;

use super::{Elementary, Expr, Factor, Node, Q};

/// A derivation on expressions: linear, Leibniz, and chain-rule through
/// elementary and opaque function arguments.
///
/// Implementors decide the image of individual atoms; returning `Ok(None)`
/// falls back to the structural rule (zero for symbols and jet coordinates,
/// chain rule for function applications).
pub trait Derivation {
    type Error;

    fn atom(&self, atom: &Expr) -> Result<Option<Expr>, Self::Error>;
}

/// Apply a derivation to an expression.
pub fn derive<D: Derivation>(e: &Expr, d: &D) -> Result<Expr, D::Error> {
    let mut cache = HashMap::new();
    derive_cached(e, d, &mut cache)
}

fn derive_cached<D: Derivation>(
    e: &Expr,
    d: &D,
    cache: &mut HashMap<Expr, Expr>,
) -> Result<Expr, D::Error> {
    match e.node() {
        Node::Num(_) => Ok(Expr::zero()),
        Node::Poly(ts) => {
            let mut parts = Vec::new();
            for t in ts {
                for (i, f) in t.factors.iter().enumerate() {
                    let df = derive_atom(&f.base, d, cache)?;
                    if df.is_zero_literal() {
                        continue;
                    }
                    let mut factors: Vec<Factor> = t.factors.clone();
                    let exp = &f.exp - Q::one();
                    if exp == Q::from_integer(0.into()) {
                        factors.remove(i);
                    } else {
                        factors[i].exp = exp;
                    }
                    let rest = Expr::from_terms(vec![super::Term {
                        factors,
                        coef: &t.coef * &f.exp,
                    }]);
                    parts.push(&rest * &df);
                }
            }
            Ok(Expr::sum(parts))
        }
        _ => derive_atom(e, d, cache),
    }
}

fn derive_atom<D: Derivation>(
    a: &Expr,
    d: &D,
    cache: &mut HashMap<Expr, Expr>,
) -> Result<Expr, D::Error> {
    if let Some(v) = cache.get(a) {
        return Ok(v.clone());
    }
    let out = match d.atom(a)? {
        Some(v) => v,
        None => match a.node() {
            Node::Num(_) | Node::Sym(_) | Node::Jet(_) => Expr::zero(),
            Node::Poly(_) => derive_cached(a, d, cache)?,
            Node::Fun(kind, arg) => {
                let darg = derive_cached(arg, d, cache)?;
                if darg.is_zero_literal() {
                    Expr::zero()
                } else {
                    &elementary_derivative(*kind, arg) * &darg
                }
            }
            Node::Apply(app) => {
                let mut parts = Vec::new();
                for (s, arg) in app.args.iter().enumerate() {
                    let darg = derive_cached(arg, d, cache)?;
                    if darg.is_zero_literal() {
                        continue;
                    }
                    let mut derivs = app.derivs.clone();
                    derivs[s] += 1;
                    let f = Expr::apply(&app.name, app.family, derivs, app.args.clone());
                    parts.push(&f * &darg);
                }
                Expr::sum(parts)
            }
            Node::Integral(int) => {
                let darg = derive_cached(&int.arg, d, cache)?;
                if darg.is_zero_literal() {
                    Expr::zero()
                } else {
                    let f = Expr::apply(&int.name, int.family, vec![0], vec![int.arg.clone()]);
                    &f * &darg
                }
            }
        },
    };
    cache.insert(a.clone(), out.clone());
    Ok(out)
}

/// d/da f(a) for an elementary `f`.
pub(crate) fn elementary_derivative(kind: Elementary, arg: &Expr) -> Expr {
    match kind {
        Elementary::Sin => Expr::cos(arg.clone()),
        Elementary::Cos => -Expr::sin(arg.clone()),
        Elementary::Exp => Expr::exp(arg.clone()),
        Elementary::Log => arg.recip(),
    }
}

struct Partial<'a>(&'a Expr);

impl Derivation for Partial<'_> {
    type Error = std::convert::Infallible;

    fn atom(&self, atom: &Expr) -> Result<Option<Expr>, Self::Error> {
        if atom == self.0 {
            return Ok(Some(Expr::one()));
        }
        if !atom.contains(self.0) {
            return Ok(Some(Expr::zero()));
        }
        Ok(None)
    }
}

/// Partial derivative of `e` with respect to the atom `v` (a symbol, a jet
/// coordinate, or any opaque atom), all other atoms held fixed.
pub fn differentiate(e: &Expr, v: &Expr) -> Expr {
    match derive(e, &Partial(v)) {
        Ok(x) => x,
        Err(never) => match never {},
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn product_rule_on_jet_coordinates() {
        assert_eq!(differentiate(&p("u0^2*v0"), &p("u0")), p("2*u0*v0"));
    }

    #[test]
    fn antiderivative_differentiates_to_its_integrand() {
        assert_eq!(differentiate(&p("Int(F,u0)"), &p("u0")), p("F(u0)"));
    }

    #[test]
    fn opaque_function_gains_derivative_index() {
        let d = differentiate(&p("F(u0)"), &p("u0"));
        assert_eq!(d, p("F'(u0)"));
        match d.node() {
            Node::Apply(app) => assert_eq!(app.derivs, vec![1]),
            _ => panic!("expected application"),
        }
    }

    #[test]
    fn mixed_partials_commute_for_opaque_functions() {
        let f = p("G(t,u0)");
        let a = differentiate(&differentiate(&f, &p("t")), &p("u0"));
        let b = differentiate(&differentiate(&f, &p("u0")), &p("t"));
        assert_eq!(a, b);
        assert_eq!(a, p("G{1,1}(t,u0)"));
    }

    #[test]
    fn chain_rule_through_fractional_power_of_sum() {
        let e = p("(x^2+y^2)^(-1/2)");
        let d = differentiate(&e, &p("x"));
        assert_eq!(d, p("-x*(x^2+y^2)^(-3/2)"));
    }

    #[test]
    fn trig_derivatives() {
        assert_eq!(differentiate(&p("sin(t)*u0"), &p("t")), p("cos(t)*u0"));
        assert_eq!(differentiate(&p("cos(2*t)"), &p("t")), p("-2*sin(2*t)"));
    }

    #[test]
    fn free_variable_gives_zero() {
        assert!(differentiate(&p("sin(t)*u1"), &p("u0")).is_zero_literal());
    }
}

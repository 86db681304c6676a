use std::collections::BTreeMap;

use num_traits::{One, Signed};

use super::{q_is_integer, Expr, ExprError, Factor, Term, Q};

/// Split `e` into `sum(monomial * coefficient)` over the given generators.
///
/// Keys are products of generator powers (`1` for the generator-free part);
/// zero coefficients are omitted. Fails with [`ExprError::NotPolynomial`] if a
/// generator occurs with a negative or fractional exponent, or inside another
/// atom (e.g. `sin(du0#t)`).
pub fn collect(e: &Expr, generators: &[Expr]) -> Result<BTreeMap<Expr, Expr>, ExprError> {
    let mut buckets: BTreeMap<Vec<Factor>, Vec<Term>> = BTreeMap::new();
    for t in e.terms().iter() {
        let mut key = Vec::new();
        let mut rest = Vec::new();
        for f in &t.factors {
            if generators.contains(&f.base) {
                if !q_is_integer(&f.exp) || f.exp.is_negative() {
                    return Err(ExprError::NotPolynomial(f.base.to_string()));
                }
                key.push(f.clone());
            } else {
                if let Some(g) = generators.iter().find(|g| f.base.contains(g)) {
                    return Err(ExprError::NotPolynomial(g.to_string()));
                }
                rest.push(f.clone());
            }
        }
        buckets.entry(key).or_default().push(Term {
            factors: rest,
            coef: t.coef.clone(),
        });
    }
    let mut out = BTreeMap::new();
    for (key, terms) in buckets {
        let coef = Expr::from_terms(terms);
        if coef.is_zero_literal() {
            continue;
        }
        let mono = Expr::from_terms(vec![Term {
            factors: key,
            coef: Q::one(),
        }]);
        out.insert(mono, coef);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn quadratic_in_velocity() {
        let m = collect(&p("a*du0#t^2 + b*du0#t + c"), &[p("du0#t")]).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[&p("du0#t^2")], p("a"));
        assert_eq!(m[&p("du0#t")], p("b"));
        assert_eq!(m[&p("1")], p("c"));
    }

    #[test]
    fn zero_has_no_coefficients() {
        assert!(collect(&p("0"), &[p("du0#t")]).unwrap().is_empty());
    }

    #[test]
    fn nonpolynomial_occurrence_is_rejected() {
        assert!(matches!(
            collect(&p("sin(du0#t)"), &[p("du0#t")]),
            Err(ExprError::NotPolynomial(_))
        ));
        assert!(matches!(
            collect(&p("du0#t^(-1)"), &[p("du0#t")]),
            Err(ExprError::NotPolynomial(_))
        ));
    }

    #[test]
    fn reassembly_is_exact() {
        let e = p("sin(t)*du0#t*du1#t + u0*du0#t^2 - F(u0) + 3*du1#t");
        let gens = [p("du0#t"), p("du1#t")];
        let m = collect(&e, &gens).unwrap();
        let back = Expr::sum(m.iter().map(|(k, v)| k * v));
        assert_eq!(back, e);
    }
}

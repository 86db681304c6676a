use std::collections::{BTreeMap, HashMap};

use super::{Expr, Node};

/// Simultaneous replacement map from atoms to expressions.
pub type Bindings = BTreeMap<Expr, Expr>;

/// Replace atoms simultaneously; replacements are not re-substituted.
///
/// Keys are matched as whole atoms, including opaque applications such as
/// `F(u0)`. Arguments of functions are rewritten recursively, so
/// `F(u0)` under `{u0 -> u0 + d}` becomes `F(u0 + d)`.
pub fn substitute(e: &Expr, bindings: &Bindings) -> Expr {
    if bindings.is_empty() {
        return e.clone();
    }
    let mut cache = HashMap::new();
    subst_inner(e, bindings, &mut cache)
}

fn subst_inner(e: &Expr, b: &Bindings, cache: &mut HashMap<Expr, Expr>) -> Expr {
    if let Some(v) = b.get(e) {
        return v.clone();
    }
    if let Some(v) = cache.get(e) {
        return v.clone();
    }
    let out = match e.node() {
        Node::Num(_) | Node::Sym(_) | Node::Jet(_) => e.clone(),
        Node::Fun(kind, arg) => Expr::elementary(*kind, subst_inner(arg, b, cache)),
        Node::Apply(app) => Expr::apply(
            &app.name,
            app.family,
            app.derivs.clone(),
            app.args.iter().map(|a| subst_inner(a, b, cache)).collect(),
        ),
        Node::Integral(int) => {
            Expr::antiderivative(&int.name, int.family, subst_inner(&int.arg, b, cache))
        }
        Node::Poly(ts) => {
            let mut parts = Vec::with_capacity(ts.len());
            for t in ts {
                let mut acc = Expr::num(t.coef.clone());
                for f in &t.factors {
                    let base = subst_inner(&f.base, b, cache);
                    acc = &acc * &base.pow(&f.exp);
                }
                parts.push(acc);
            }
            Expr::sum(parts)
        }
    };
    cache.insert(e.clone(), out.clone());
    out
}

/// Reconstruct an expression through the public constructors.
pub(crate) fn rebuild(e: &Expr) -> Expr {
    // An identity substitution with a sentinel key forces a full rebuild.
    let mut b = Bindings::new();
    b.insert(Expr::sym("\u{0}"), Expr::sym("\u{0}"));
    substitute(e, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn bind(pairs: &[(&str, &str)]) -> Bindings {
        pairs.iter().map(|(k, v)| (p(k), p(v))).collect()
    }

    #[test]
    fn oscillator_equation_vanishes_on_shell() {
        let e = p("ddu0#t#t + u0");
        assert!(substitute(&e, &bind(&[("ddu0#t#t", "-u0")])).is_zero_literal());
    }

    #[test]
    fn argument_replacement_inside_opaque_function() {
        let e = substitute(&p("F(u0)"), &bind(&[("u0", "u0+delta")]));
        assert_eq!(e, p("F(u0+delta)"));
    }

    #[test]
    fn substitution_to_zero() {
        assert!(substitute(&p("du0#t*u1"), &bind(&[("u1", "0")])).is_zero_literal());
    }

    #[test]
    fn simultaneous_not_sequential() {
        let e = substitute(&p("x + 2*y"), &bind(&[("x", "y"), ("y", "x")]));
        assert_eq!(e, p("y + 2*x"));
    }
}

//! Jet space of the expanded dependent variables and the total derivative.

use std::sync::Arc;

use crate::expr::{derive, Context, Derivation, Expr, JetVar, Node};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JetError {
    #[error("derivative overflow: `{0}` exceeds the jet space's derivative bound")]
    DerivativeOverflow(String),
    #[error("`{0}` is not an independent variable of the jet space")]
    UnknownIndependent(String),
}

/// Independent variables `x_1..x_n`, dependent bases `u_1..u_m`, ε-order `p`
/// and maximal derivative order `r` (one more order is admitted transiently).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetSpace {
    pub independent: Vec<String>,
    pub dependent: Vec<String>,
    pub order: u32,
    pub max_derivative: u32,
}

impl JetSpace {
    pub fn new(independent: &[&str], dependent: &[&str], order: u32, max_derivative: u32) -> Self {
        JetSpace {
            independent: independent.iter().map(|s| s.to_string()).collect(),
            dependent: dependent.iter().map(|s| s.to_string()).collect(),
            order,
            max_derivative,
        }
    }

    /// One independent variable `t`, first-order Lagrangian bound (`r = 2`).
    pub fn ode(dependent: &[&str], order: u32) -> Self {
        JetSpace::new(&["t"], dependent, order, 2)
    }

    pub fn n(&self) -> usize {
        self.independent.len()
    }

    pub fn m(&self) -> usize {
        self.dependent.len()
    }

    /// Parsing context with this space's variables.
    pub fn context(&self, constants: &[String]) -> Context {
        Context {
            independents: self.independent.clone(),
            dependents: self.dependent.clone(),
            constants: constants.to_vec(),
            strict: false,
        }
    }

    pub fn x(&self, i: usize) -> Expr {
        Expr::sym(&self.independent[i])
    }

    /// `u_(k)α`.
    pub fn coord(&self, alpha: usize, k: u32) -> Expr {
        Expr::coord(&self.dependent[alpha], k)
    }

    /// `u_(k)α,J` for a multi-index given as independent-variable positions.
    pub fn deriv(&self, alpha: usize, k: u32, multi: &[usize]) -> Expr {
        let names: Vec<Arc<str>> = multi
            .iter()
            .map(|&i| Arc::from(self.independent[i].as_str()))
            .collect();
        Expr::jet(JetVar::new(&self.dependent[alpha], Some(k)).with_derivs(&names))
    }

    /// Unexpanded `u_α,J`.
    pub fn base_deriv(&self, alpha: usize, multi: &[usize]) -> Expr {
        let names: Vec<Arc<str>> = multi
            .iter()
            .map(|&i| Arc::from(self.independent[i].as_str()))
            .collect();
        Expr::jet(JetVar::new(&self.dependent[alpha], None).with_derivs(&names))
    }

    pub fn index_of_independent(&self, name: &str) -> Option<usize> {
        self.independent.iter().position(|x| x == name)
    }

    pub fn index_of_dependent(&self, name: &str) -> Option<usize> {
        self.dependent.iter().position(|x| x == name)
    }

    /// Arguments `(x_1..x_n, u_(0)1..u_(0)m)` of infinitesimal family functions.
    pub fn family_args(&self) -> Vec<Expr> {
        (0..self.n())
            .map(|i| self.x(i))
            .chain((0..self.m()).map(|a| self.coord(a, 0)))
            .collect()
    }

    /// Total derivative `D_i`.
    pub fn total_derivative(&self, e: &Expr, i: usize) -> Result<Expr, JetError> {
        let x = self
            .independent
            .get(i)
            .ok_or_else(|| JetError::UnknownIndependent(i.to_string()))?;
        derive(e, &TotalDerivative { space: self, x })
    }

    /// Total derivative with respect to a named independent variable.
    pub fn total_derivative_by(&self, e: &Expr, x: &str) -> Result<Expr, JetError> {
        let i = self
            .index_of_independent(x)
            .ok_or_else(|| JetError::UnknownIndependent(x.to_string()))?;
        self.total_derivative(e, i)
    }

    /// First-order derivative coordinates `u_(k)α,i` with `k <= eps_order`,
    /// ordered by α, then i, then k.
    pub fn first_derivatives(&self, eps_order: u32) -> Vec<Expr> {
        let mut out = Vec::new();
        for a in 0..self.m() {
            for i in 0..self.n() {
                for k in 0..=eps_order {
                    out.push(self.deriv(a, k, &[i]));
                }
            }
        }
        out
    }

    /// Monomials in first-order derivative coordinates of total degree
    /// `<= degree` and total ε-order `<= eps_order`, by increasing degree.
    pub fn enumerate_monomials(&self, degree: u32, eps_order: u32) -> Vec<Expr> {
        let gens: Vec<(Expr, u32)> = self
            .first_derivatives(eps_order)
            .into_iter()
            .map(|g| {
                let k = g.as_jet().and_then(|j| j.order).unwrap_or(0);
                (g, k)
            })
            .collect();
        let mut out = vec![Expr::one()];
        // multisets of generator indices, non-decreasing
        let mut layer: Vec<(Vec<usize>, u32)> = vec![(Vec::new(), 0)];
        for _ in 0..degree {
            let mut next = Vec::new();
            for (idx, ord) in &layer {
                let start = idx.last().copied().unwrap_or(0);
                for (g, (_, k)) in gens.iter().enumerate().skip(start) {
                    if ord + k > eps_order {
                        continue;
                    }
                    let mut v = idx.clone();
                    v.push(g);
                    next.push((v, ord + k));
                }
            }
            out.extend(
                next.iter()
                    .map(|(v, _)| Expr::product(v.iter().map(|&g| gens[g].0.clone()))),
            );
            layer = next;
        }
        out
    }
}

struct TotalDerivative<'a> {
    space: &'a JetSpace,
    x: &'a str,
}

impl Derivation for TotalDerivative<'_> {
    type Error = JetError;

    fn atom(&self, atom: &Expr) -> Result<Option<Expr>, JetError> {
        Ok(match atom.node() {
            Node::Sym(s) => Some(if &**s == self.x { Expr::one() } else { Expr::zero() }),
            Node::Jet(j) => {
                if j.derivative_order() as u32 >= self.space.max_derivative + 1 {
                    return Err(JetError::DerivativeOverflow(format!("{atom}")));
                }
                Some(Expr::jet(j.raised(self.x)))
            }
            _ => None,
        })
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
    fn chain_rule_through_coordinates() {
        let s = JetSpace::ode(&["u"], 1);
        assert_eq!(s.total_derivative(&p("u0^2"), 0).unwrap(), p("2*u0*du0#t"));
        assert_eq!(
            s.total_derivative(&p("sin(t)*u1"), 0).unwrap(),
            p("cos(t)*u1 + sin(t)*du1#t")
        );
    }

    #[test]
    fn opaque_functions_of_time_and_coordinates() {
        let s = JetSpace::ode(&["u"], 1);
        let d = s.total_derivative(&p("xi[0](t,u0)"), 0).unwrap();
        assert_eq!(d, p("xi[0]{1,0}(t,u0) + xi[0]{0,1}(t,u0)*du0#t"));
        let d = s.total_derivative(&p("Int(F,u0)"), 0).unwrap();
        assert_eq!(d, p("F(u0)*du0#t"));
    }

    #[test]
    fn overflow_beyond_transient_order() {
        let s = JetSpace::ode(&["u"], 0);
        assert!(s.total_derivative(&p("ddu0#t#t"), 0).is_ok());
        assert!(matches!(
            s.total_derivative(&p("d3u0#t3"), 0),
            Err(JetError::DerivativeOverflow(_))
        ));
    }

    #[test]
    fn monomial_enumeration() {
        let s = JetSpace::ode(&["u"], 1);
        assert_eq!(
            s.enumerate_monomials(2, 1),
            vec![p("1"), p("du0#t"), p("du1#t"), p("du0#t^2"), p("du0#t*du1#t")]
        );
        assert_eq!(s.enumerate_monomials(0, 1), vec![p("1")]);
        let s2 = JetSpace::ode(&["u", "v"], 0);
        assert_eq!(s2.enumerate_monomials(1, 0), vec![p("1"), p("du0#t"), p("dv0#t")]);
    }

    #[test]
    fn monomial_count_matches_stars_and_bars() {
        // eps_order 0, g generators, degree d: C(g + d, d)
        let s = JetSpace::new(&["t", "x"], &["u", "v"], 0, 2);
        assert_eq!(s.enumerate_monomials(3, 0).len(), 35);
    }

    #[test]
    fn mixed_partials_identified() {
        let s = JetSpace::new(&["t", "x"], &["u"], 0, 2);
        let a = s.total_derivative(&s.total_derivative(&p("u0"), 0).unwrap(), 1).unwrap();
        let b = s.total_derivative(&s.total_derivative(&p("u0"), 1).unwrap(), 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, s.deriv(0, 0, &[0, 1]));
    }
}

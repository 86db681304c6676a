//! Approximate Lie generators: prolongation, action on ε-series, brackets.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::expr::{differentiate, Expr, Node};
use crate::jet::{JetError, JetSpace};
use crate::perturb::{expand, EpsSeries, PerturbError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymmetryError {
    #[error("prolongation cache holds order {have}, but `{coordinate}` needs more")]
    CacheMissing { have: u32, coordinate: String },
    #[error("generator shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// `Ξ ≈ Σ ε^k (ξ̃_(k)i ∂_{x_i} + η̃_(k)α ∂_{u_α})` with cached prolongation.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateGenerator {
    pub space: JetSpace,
    /// ε-series `ξ̃_(·)i`, one per independent variable.
    pub xi: Vec<EpsSeries>,
    /// ε-series `η̃_(·)α`, one per dependent variable.
    pub eta: Vec<EpsSeries>,
    prolonged: u32,
    cache: BTreeMap<(usize, Vec<usize>), EpsSeries>,
}

/// Sorted multi-indices of length exactly `len` over `n` variables.
fn multi_indices(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut layer = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for v in &layer {
            let start = v.last().copied().unwrap_or(0);
            for i in start..n {
                let mut w: Vec<usize> = v.clone();
                w.push(i);
                next.push(w);
            }
        }
        layer = next;
    }
    layer
}

impl ApproximateGenerator {
    pub fn new(space: JetSpace, xi: Vec<EpsSeries>, eta: Vec<EpsSeries>) -> Result<Self, SymmetryError> {
        if xi.len() != space.n() || eta.len() != space.m() {
            return Err(SymmetryError::Shape(format!(
                "expected {} xi and {} eta components, got {} and {}",
                space.n(),
                space.m(),
                xi.len(),
                eta.len()
            )));
        }
        for s in xi.iter().chain(&eta) {
            if s.order() != space.order {
                return Err(PerturbError::OrderMismatch(s.order() as usize, space.order as usize).into());
            }
            s.validate_dependency()?;
        }
        Ok(ApproximateGenerator {
            space,
            xi,
            eta,
            prolonged: 0,
            cache: BTreeMap::new(),
        })
    }

    /// From coefficient matrices `xi[k][i]`, `eta[k][α]`.
    pub fn from_matrix(space: JetSpace, xi: Vec<Vec<Expr>>, eta: Vec<Vec<Expr>>) -> Result<Self, SymmetryError> {
        let p = space.order as usize + 1;
        if xi.len() != p || eta.len() != p {
            return Err(SymmetryError::Shape(format!("expected {p} ε-orders")));
        }
        let col = |m: &Vec<Vec<Expr>>, j: usize| -> Result<EpsSeries, SymmetryError> {
            m.iter()
                .map(|row| row.get(j).cloned().ok_or_else(|| SymmetryError::Shape("ragged matrix".into())))
                .collect::<Result<Vec<_>, _>>()
                .map(EpsSeries::new)
        };
        let xs = (0..space.n()).map(|i| col(&xi, i)).collect::<Result<_, _>>()?;
        let es = (0..space.m()).map(|a| col(&eta, a)).collect::<Result<_, _>>()?;
        ApproximateGenerator::new(space, xs, es)
    }

    /// From ε-dependent infinitesimals in the unexpanded variables.
    pub fn from_exact(space: JetSpace, xi: &[Expr], eta: &[Expr]) -> Result<Self, SymmetryError> {
        let xs = xi.iter().map(|e| expand(e, &space)).collect::<Result<_, _>>()?;
        let es = eta.iter().map(|e| expand(e, &space)).collect::<Result<_, _>>()?;
        ApproximateGenerator::new(space, xs, es)
    }

    pub fn zero(space: JetSpace) -> Self {
        let p = space.order;
        let xi = vec![EpsSeries::zero(p); space.n()];
        let eta = vec![EpsSeries::zero(p); space.m()];
        ApproximateGenerator::new(space, xi, eta).expect("zero generator is well formed")
    }

    pub fn xi_coeff(&self, k: usize, i: usize) -> &Expr {
        self.xi[i].get(k)
    }

    pub fn eta_coeff(&self, k: usize, a: usize) -> &Expr {
        self.eta[a].get(k)
    }

    pub fn is_zero(&self) -> bool {
        self.xi.iter().chain(&self.eta).all(EpsSeries::is_zero)
    }

    pub fn prolonged_order(&self) -> u32 {
        self.prolonged
    }

    fn rebuild(&self, xi: Vec<EpsSeries>, eta: Vec<EpsSeries>) -> Self {
        ApproximateGenerator {
            space: self.space.clone(),
            xi,
            eta,
            prolonged: 0,
            cache: BTreeMap::new(),
        }
    }

    /// `ε Ξ`, truncated.
    /// Prolongation is linear over constants, so the cache carries over.
    pub fn shift(&self) -> Self {
        self.map_linear(EpsSeries::shift)
    }

    pub fn scale(&self, c: &Expr) -> Self {
        self.map_linear(|s| s.scale(c))
    }

    fn map_linear(&self, f: impl Fn(&EpsSeries) -> EpsSeries) -> Self {
        let mut g = self.rebuild(self.xi.iter().map(&f).collect(), self.eta.iter().map(&f).collect());
        g.prolonged = self.prolonged;
        g.cache = self.cache.iter().map(|(k, v)| (k.clone(), f(v))).collect();
        g
    }

    pub fn add(&self, other: &Self) -> Result<Self, SymmetryError> {
        let xi = self.xi.iter().zip(&other.xi).map(|(a, b)| a.add(b)).collect::<Result<_, _>>()?;
        let eta = self.eta.iter().zip(&other.eta).map(|(a, b)| a.add(b)).collect::<Result<_, _>>()?;
        Ok(self.rebuild(xi, eta))
    }

    fn coord_series(&self, a: usize, multi: &[usize]) -> EpsSeries {
        EpsSeries::new((0..=self.space.order).map(|k| self.space.deriv(a, k, multi)).collect())
    }

    fn total_derivative_series(&self, s: &EpsSeries, i: usize) -> Result<EpsSeries, SymmetryError> {
        Ok(s.try_map(|c| self.space.total_derivative(c, i))?)
    }

    /// Fill the prolongation cache up to derivative order `order`:
    /// `η_{α,J+i} = D_i η_{α,J} − Σ_j D_i ξ_j · u_{α,J+j}` in ε-series
    /// arithmetic.
    pub fn prolong(&self, order: u32) -> Result<Self, SymmetryError> {
        let mut g = self.clone();
        let n = self.space.n();
        let dxi: Vec<Vec<EpsSeries>> = (0..n)
            .map(|i| {
                self.xi
                    .iter()
                    .map(|x| self.total_derivative_series(x, i))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        for q in (g.prolonged + 1)..=order {
            for a in 0..self.space.m() {
                for multi in multi_indices(n, q as usize) {
                    let i = *multi.last().expect("nonempty multi-index");
                    let parent = &multi[..multi.len() - 1];
                    let base = if parent.is_empty() {
                        self.eta[a].clone()
                    } else {
                        g.cache[&(a, parent.to_vec())].clone()
                    };
                    let mut acc = self.total_derivative_series(&base, i)?;
                    for (j, dxj) in dxi[i].iter().enumerate() {
                        if dxj.is_zero() {
                            continue;
                        }
                        let mut idx = parent.to_vec();
                        idx.push(j);
                        idx.sort_unstable();
                        acc = acc.sub(&dxj.mul(&self.coord_series(a, &idx))?)?;
                    }
                    g.cache.insert((a, multi), acc);
                }
            }
            g.prolonged = q;
        }
        Ok(g)
    }

    /// Cached prolongation coefficient `η_{α,J}` (`J` as sorted positions).
    pub fn prolongation(&self, a: usize, multi: &[usize]) -> Option<&EpsSeries> {
        let mut m = multi.to_vec();
        m.sort_unstable();
        self.cache.get(&(a, m))
    }

    /// Action of `Ξ̃_(l)` on one expression, differentiating with respect to
    /// `x_i`, `u_(0)α` and `u_(0)α,J`.
    fn act(&self, l: usize, f: &Expr) -> Result<Expr, SymmetryError> {
        let mut parts = Vec::new();
        let syms = f.symbols();
        for (i, x) in self.space.independent.iter().enumerate() {
            let c = self.xi[i].get(l);
            if c.is_zero_literal() || !syms.contains(x) {
                continue;
            }
            parts.push(c * &differentiate(f, &self.space.x(i)));
        }
        for j in f.jets() {
            let Some(a) = self.space.index_of_dependent(&j.base) else {
                continue;
            };
            if j.order != Some(0) {
                if j.derivative_order() as u32 > self.prolonged {
                    return Err(SymmetryError::CacheMissing {
                        have: self.prolonged,
                        coordinate: Expr::jet(j).to_string(),
                    });
                }
                continue;
            }
            let coef = if j.derivs.is_empty() {
                self.eta[a].get(l).clone()
            } else {
                let multi: Vec<usize> = j
                    .derivs
                    .iter()
                    .map(|d| self.space.index_of_independent(d).ok_or_else(|| JetError::UnknownIndependent(d.to_string())))
                    .collect::<Result<_, _>>()?;
                match self.prolongation(a, &multi) {
                    Some(s) => s.get(l).clone(),
                    None => {
                        return Err(SymmetryError::CacheMissing {
                            have: self.prolonged,
                            coordinate: Expr::jet(j).to_string(),
                        })
                    }
                }
            };
            if coef.is_zero_literal() {
                continue;
            }
            parts.push(&coef * &differentiate(f, &Expr::jet(j)));
        }
        Ok(Expr::sum(parts))
    }

    /// `k ↦ Σ_{l<=k} Ξ̃_(l)[s_{k−l}]`: the ε-expansion of `Ξ s`.
    pub fn apply(&self, s: &EpsSeries) -> Result<EpsSeries, SymmetryError> {
        if s.order() != self.space.order {
            return Err(PerturbError::OrderMismatch(s.order() as usize, self.space.order as usize).into());
        }
        let n = s.order() as usize + 1;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut parts = Vec::new();
            for l in 0..=k {
                parts.push(self.act(l, s.get(k - l))?);
            }
            out.push(Expr::sum(parts));
        }
        Ok(EpsSeries::new(out))
    }

    /// `[Ξ_1, Ξ_2]` component-wise, truncated at `p`.
    pub fn commutator(&self, other: &Self) -> Result<Self, SymmetryError> {
        let bracket = |a: &EpsSeries, b: &EpsSeries| -> Result<EpsSeries, SymmetryError> {
            Ok(self.apply(b)?.sub(&other.apply(a)?)?)
        };
        let xi = self.xi.iter().zip(&other.xi).map(|(a, b)| bracket(a, b)).collect::<Result<_, _>>()?;
        let eta = self.eta.iter().zip(&other.eta).map(|(a, b)| bracket(a, b)).collect::<Result<_, _>>()?;
        Ok(self.rebuild(xi, eta))
    }

    /// `{"xi": [[...]], "eta": [[...]]}` indexed `[k][component]`.
    pub fn to_json(&self) -> Value {
        let mat = |v: &[EpsSeries]| -> Vec<Vec<String>> {
            (0..=self.space.order as usize)
                .map(|k| v.iter().map(|s| s.get(k).to_string()).collect())
                .collect()
        };
        json!({"xi": mat(&self.xi), "eta": mat(&self.eta)})
    }

    /// All atoms the generator's infinitesimals depend on.
    pub fn jets(&self) -> BTreeSet<crate::expr::JetVar> {
        self.xi
            .iter()
            .chain(&self.eta)
            .flat_map(|s| s.coeffs().iter().flat_map(|c| c.jets()).collect::<Vec<_>>())
            .collect()
    }
}

impl std::fmt::Display for ApproximateGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        let parts = self
            .space
            .independent
            .iter()
            .zip(&self.xi)
            .chain(self.space.dependent.iter().zip(&self.eta));
        for (name, s) in parts {
            let e = s.to_expr();
            if e.is_zero_literal() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if e.is_one() {
                write!(f, "d/d{name}")?;
            } else if matches!(e.node(), Node::Poly(ts) if ts.len() > 1) {
                write!(f, "({e})*d/d{name}")?;
            } else {
                write!(f, "{e}*d/d{name}")?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Prolongation by the exact route: prolong the ε-dependent generator in the
/// unexpanded variables with the classical formula, then expand. Returns the
/// expanded `η_{α,J}` for every multi-index up to `order`.
pub fn exact_route_prolongation(
    space: &JetSpace,
    xi: &[Expr],
    eta: &[Expr],
    order: u32,
) -> Result<BTreeMap<(usize, Vec<usize>), EpsSeries>, SymmetryError> {
    let n = space.n();
    let mut exact: BTreeMap<(usize, Vec<usize>), Expr> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for q in 1..=order as usize {
        for a in 0..space.m() {
            for multi in multi_indices(n, q) {
                let i = *multi.last().expect("nonempty");
                let parent = &multi[..q - 1];
                let base = if parent.is_empty() {
                    eta[a].clone()
                } else {
                    exact[&(a, parent.to_vec())].clone()
                };
                let mut acc = space.total_derivative(&base, i)?;
                for (j, x) in xi.iter().enumerate() {
                    let mut idx = parent.to_vec();
                    idx.push(j);
                    idx.sort_unstable();
                    acc = &acc - &(&space.total_derivative(x, i)? * &space.base_deriv(a, &idx));
                }
                out.insert((a, multi.clone()), expand(&acc, space)?);
                exact.insert((a, multi), acc);
            }
        }
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

    fn ser(v: &[&str]) -> EpsSeries {
        EpsSeries::new(v.iter().map(|s| p(s)).collect())
    }

    fn osc() -> JetSpace {
        JetSpace::ode(&["u"], 1)
    }

    fn gen(xi: &[&str], eta: &[&str]) -> ApproximateGenerator {
        ApproximateGenerator::new(osc(), vec![ser(xi)], vec![ser(eta)]).unwrap()
    }

    #[test]
    fn prolongation_of_eps_sin_generator() {
        let g = gen(&["0", "0"], &["0", "sin(t)"]).prolong(1).unwrap();
        assert_eq!(g.prolongation(0, &[0]).unwrap(), &ser(&["0", "cos(t)"]));
    }

    #[test]
    fn time_translation_prolongs_to_zero() {
        let g = gen(&["1", "0"], &["0", "0"]).prolong(2).unwrap();
        assert!(g.prolongation(0, &[0]).unwrap().is_zero());
        assert!(g.prolongation(0, &[0, 0]).unwrap().is_zero());
    }

    #[test]
    fn scaling_prolongation_at_order_zero() {
        let s = JetSpace::ode(&["u"], 0);
        let g = ApproximateGenerator::new(s, vec![ser(&["t"])], vec![ser(&["u0"])])
            .unwrap()
            .prolong(1)
            .unwrap();
        assert!(g.prolongation(0, &[0]).unwrap().is_zero());
    }

    #[test]
    fn action_on_oscillator_lagrangian() {
        let l = ser(&["1/2*(du0#t^2 - u0^2)", "du0#t*du1#t - u0*u1 - Int(F,u0)"]);
        let g = gen(&["0", "0"], &["0", "sin(t)"]).prolong(1).unwrap();
        assert_eq!(g.apply(&l).unwrap(), ser(&["0", "-sin(t)*u0 + cos(t)*du0#t"]));
        let t1 = gen(&["1", "0"], &["0", "0"]).prolong(1).unwrap();
        assert!(t1.apply(&l).unwrap().is_zero());
    }

    #[test]
    fn missing_cache_is_reported() {
        let l = ser(&["du0#t^2", "0"]);
        let g = gen(&["1", "0"], &["0", "0"]);
        assert!(matches!(g.apply(&l), Err(SymmetryError::CacheMissing { .. })));
    }

    #[test]
    fn brackets() {
        let t1 = gen(&["1", "0"], &["0", "0"]);
        assert!(t1.commutator(&t1).unwrap().is_zero());
        let x2 = gen(&["0", "0"], &["0", "sin(t)"]);
        let x3 = gen(&["0", "0"], &["0", "cos(t)"]);
        assert_eq!(t1.commutator(&x2).unwrap(), x3);
    }

    #[test]
    fn coupled_system_bracket() {
        let s = JetSpace::ode(&["u", "v"], 1);
        let t1 = ApproximateGenerator::new(s.clone(), vec![ser(&["1", "0"])], vec![ser(&["0", "0"]); 2]).unwrap();
        let x2 = ApproximateGenerator::new(
            s.clone(),
            vec![ser(&["t^2", "0"])],
            vec![ser(&["t*u0", "t*u1"]), ser(&["0", "0"])],
        )
        .unwrap();
        let x3 = ApproximateGenerator::new(
            s,
            vec![ser(&["2*t", "0"])],
            vec![ser(&["u0", "u1"]), ser(&["0", "0"])],
        )
        .unwrap();
        assert_eq!(t1.commutator(&x2).unwrap(), x3);
    }

    #[test]
    fn series_route_agrees_with_exact_route() {
        let s = osc();
        let xi = [p("eps*sin(2*t) + t*u^2")];
        let eta = [p("eps*cos(2*t)*u + u^3 - eps*t*u")];
        let g = ApproximateGenerator::from_exact(s.clone(), &xi, &eta).unwrap().prolong(2).unwrap();
        let exact = exact_route_prolongation(&s, &xi, &eta, 2).unwrap();
        for ((a, multi), series) in &exact {
            assert_eq!(g.prolongation(*a, multi).unwrap(), series, "{multi:?}");
        }
    }
}

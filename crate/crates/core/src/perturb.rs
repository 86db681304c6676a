//! Truncated ε-series, expansion of expressions under `u = Σ ε^k u_(k)`,
//! and the recursion operator that generates higher-order infinitesimals.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed};

use crate::expr::{derive, differentiate, substitute, Bindings, Derivation, Expr, Node, Q};
use crate::jet::{JetError, JetSpace};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PerturbError {
    #[error("ε-series order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("expansion is singular at eps = 0: `{0}` vanishes there")]
    SingularAtEpsZero(String),
    #[error("function `{0}` has no family index")]
    MissingFamilyIndex(String),
    #[error("unexpanded variable `{0}` in an expanded context")]
    Unexpanded(String),
    #[error("coefficient {order} references `{coordinate}` of higher ε-order")]
    DependencyViolation { order: usize, coordinate: String },
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// `c_0 + ε c_1 + ... + ε^p c_p`, truncated at order `p`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EpsSeries {
    coeffs: Vec<Expr>,
}

impl std::fmt::Debug for EpsSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(&self.coeffs).finish()
    }
}

impl EpsSeries {
    /// Series from its coefficient list (length `p + 1`, at least one).
    pub fn new(coeffs: Vec<Expr>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least one coefficient");
        EpsSeries { coeffs }
    }

    pub fn zero(p: u32) -> Self {
        EpsSeries::new(vec![Expr::zero(); p as usize + 1])
    }

    pub fn constant(e: Expr, p: u32) -> Self {
        let mut s = EpsSeries::zero(p);
        s.coeffs[0] = e;
        s
    }

    /// `ε^k e`, truncated.
    pub fn monomial(e: Expr, k: u32, p: u32) -> Self {
        let mut s = EpsSeries::zero(p);
        if k <= p {
            s.coeffs[k as usize] = e;
        }
        s
    }

    pub fn order(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Expr> {
        self.coeffs
    }

    pub fn get(&self, k: usize) -> &Expr {
        &self.coeffs[k]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero_literal)
    }

    /// Whether only the ε^0 coefficient may be nonzero.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(Expr::is_zero_literal)
    }

    fn check(&self, other: &EpsSeries) -> Result<(), PerturbError> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(PerturbError::OrderMismatch(self.coeffs.len() - 1, other.coeffs.len() - 1));
        }
        Ok(())
    }

    pub fn add(&self, other: &EpsSeries) -> Result<EpsSeries, PerturbError> {
        self.check(other)?;
        Ok(EpsSeries::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &EpsSeries) -> Result<EpsSeries, PerturbError> {
        self.check(other)?;
        Ok(EpsSeries::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Cauchy product truncated at `p`.
    pub fn mul(&self, other: &EpsSeries) -> Result<EpsSeries, PerturbError> {
        self.check(other)?;
        let n = self.coeffs.len();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(Expr::sum((0..=k).filter_map(|l| {
                let (a, b) = (&self.coeffs[l], &other.coeffs[k - l]);
                if a.is_zero_literal() || b.is_zero_literal() {
                    None
                } else {
                    Some(a * b)
                }
            })));
        }
        Ok(EpsSeries::new(out))
    }

    /// Multiply every coefficient by an ε-free expression.
    pub fn scale(&self, c: &Expr) -> EpsSeries {
        self.map(|e| e * c)
    }

    /// Multiplication by ε: shift right, dropping `c_p`.
    pub fn shift(&self) -> EpsSeries {
        let mut out = vec![Expr::zero()];
        out.extend(self.coeffs[..self.coeffs.len() - 1].iter().cloned());
        EpsSeries::new(out)
    }

    pub fn neg(&self) -> EpsSeries {
        self.map(|e| -e)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> EpsSeries {
        EpsSeries::new(self.coeffs.iter().map(f).collect())
    }

    pub fn try_map<E>(&self, f: impl Fn(&Expr) -> Result<Expr, E>) -> Result<EpsSeries, E> {
        Ok(EpsSeries::new(self.coeffs.iter().map(f).collect::<Result<_, _>>()?))
    }

    /// `Σ ε^k c_k` as a single expression.
    pub fn to_expr(&self) -> Expr {
        Expr::sum(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * &Expr::eps().powi(k as i64)),
        )
    }

    /// Integer power by repeated truncated multiplication.
    pub fn powi(&self, n: u32) -> EpsSeries {
        let mut acc = EpsSeries::constant(Expr::one(), self.order());
        for _ in 0..n {
            acc = acc.mul(self).expect("same order");
        }
        acc
    }

    /// `self^q` for rational `q` via the binomial series around `c_0`.
    pub fn pow(&self, q: &Q) -> Result<EpsSeries, PerturbError> {
        let p = self.order();
        if self.is_constant() {
            let c = &self.coeffs[0];
            if c.is_zero_literal() && !q.is_positive() {
                return Err(PerturbError::SingularAtEpsZero(c.to_string()));
            }
            return Ok(EpsSeries::constant(c.pow(q), p));
        }
        if q.is_integer() && q.is_positive() {
            let n = q.to_integer().try_into().expect("exponent overflow");
            return Ok(self.powi(n));
        }
        let c0 = &self.coeffs[0];
        if c0.is_zero_literal() {
            return Err(PerturbError::SingularAtEpsZero(self.to_expr().to_string()));
        }
        // (c0 + w)^q = c0^q Σ binom(q, n) (w / c0)^n
        let inv = c0.recip();
        let mut w = self.clone();
        w.coeffs[0] = Expr::zero();
        let w = w.scale(&inv);
        let mut term = EpsSeries::constant(Expr::one(), p);
        let mut total = term.clone();
        let mut binom = Q::one();
        for n in 1..=p {
            binom = binom * (q - Q::from_integer((n - 1).into())) / Q::from_integer(n.into());
            term = term.mul(&w)?;
            total = total.add(&term.scale(&Expr::num(binom.clone())))?;
        }
        Ok(total.scale(&c0.pow(q)))
    }

    /// Reject coefficients `c_k` that mention `u_(l)` with `l > k`.
    pub fn validate_dependency(&self) -> Result<(), PerturbError> {
        for (k, c) in self.coeffs.iter().enumerate() {
            for j in c.jets() {
                if j.order.is_some_and(|l| l as usize > k) {
                    return Err(PerturbError::DependencyViolation {
                        order: k,
                        coordinate: Expr::jet(j).to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Expand an expression in ε and in the unexpanded dependent variables.
///
/// Every unexpanded jet `u_J` becomes `Σ ε^k u_(k),J`; the result is
/// Taylor-expanded to the space's order `p`. Opaque and elementary functions
/// are expanded by a multivariate Taylor series around their ε = 0
/// arguments, so `F(u)` becomes `F(u0) + ε F'(u0) u1 + ...`.
pub fn expand(e: &Expr, space: &JetSpace) -> Result<EpsSeries, PerturbError> {
    let mut ex = Expander {
        p: space.order,
        cache: HashMap::new(),
    };
    ex.expand(e)
}

struct Expander {
    p: u32,
    cache: HashMap<Expr, EpsSeries>,
}

impl Expander {
    fn expand(&mut self, e: &Expr) -> Result<EpsSeries, PerturbError> {
        if let Some(s) = self.cache.get(e) {
            return Ok(s.clone());
        }
        let p = self.p;
        let out = match e.node() {
            Node::Num(_) => EpsSeries::constant(e.clone(), p),
            Node::Sym(s) if &**s == crate::expr::EPS => EpsSeries::monomial(Expr::one(), 1, p),
            Node::Sym(_) => EpsSeries::constant(e.clone(), p),
            Node::Jet(j) => match j.order {
                Some(_) => EpsSeries::constant(e.clone(), p),
                None => EpsSeries::new(
                    (0..=p)
                        .map(|k| Expr::jet(j.with_order(Some(k))))
                        .collect(),
                ),
            },
            Node::Poly(ts) => {
                let mut total = EpsSeries::zero(p);
                for t in ts {
                    let mut acc = EpsSeries::constant(Expr::num(t.coef.clone()), p);
                    for f in &t.factors {
                        let base = self.expand(&f.base)?;
                        acc = acc.mul(&base.pow(&f.exp)?)?;
                    }
                    total = total.add(&acc)?;
                }
                total
            }
            Node::Fun(..) | Node::Apply(_) | Node::Integral(_) => self.taylor(e)?,
        };
        self.cache.insert(e.clone(), out.clone());
        Ok(out)
    }

    /// Multivariate Taylor expansion of a function atom in its arguments.
    fn taylor(&mut self, e: &Expr) -> Result<EpsSeries, PerturbError> {
        let p = self.p;
        let args: Vec<Expr> = match e.node() {
            Node::Fun(_, a) => vec![a.clone()],
            Node::Apply(app) => app.args.clone(),
            Node::Integral(i) => vec![i.arg.clone()],
            _ => unreachable!("taylor on non-function atom"),
        };
        let series: Vec<EpsSeries> = args.iter().map(|a| self.expand(a)).collect::<Result<_, _>>()?;
        if series.iter().all(EpsSeries::is_constant) {
            return Ok(EpsSeries::constant(rebuild_with_args(e, &series), p));
        }
        let dummies: Vec<Expr> = (0..args.len()).map(|s| Expr::sym(&format!("\u{1}z{s}"))).collect();
        let f = rebuild_with(e, &dummies);
        let incs: Vec<EpsSeries> = series
            .iter()
            .map(|s| {
                let mut w = s.clone();
                w.coeffs[0] = Expr::zero();
                w
            })
            .collect();
        let mut term = EpsSeries::constant(f, p);
        let mut total = term.clone();
        for n in 1..=p {
            let mut next = EpsSeries::zero(p);
            for (s, w) in incs.iter().enumerate() {
                if w.is_zero() {
                    continue;
                }
                let d = term.map(|c| differentiate(c, &dummies[s]));
                next = next.add(&w.mul(&d)?)?;
            }
            term = next.scale(&Expr::rational(1, n as i64));
            total = total.add(&term)?;
        }
        let b: Bindings = dummies
            .iter()
            .zip(&series)
            .map(|(d, s)| (d.clone(), s.get(0).clone()))
            .collect();
        Ok(total.map(|c| substitute(c, &b)))
    }
}

/// Same function atom with its arguments replaced.
fn rebuild_with(e: &Expr, args: &[Expr]) -> Expr {
    match e.node() {
        Node::Fun(k, _) => Expr::elementary(*k, args[0].clone()),
        Node::Apply(app) => Expr::apply(&app.name, app.family, app.derivs.clone(), args.to_vec()),
        Node::Integral(i) => Expr::antiderivative(&i.name, i.family, args[0].clone()),
        _ => unreachable!(),
    }
}

fn rebuild_with_args(e: &Expr, series: &[EpsSeries]) -> Expr {
    let args: Vec<Expr> = series.iter().map(|s| s.get(0).clone()).collect();
    rebuild_with(e, &args)
}

/// The recursion operator `R`: a derivation with `R[u_(k)] = (k+1) u_(k+1)`
/// and `R[f_(k)(x, u_(0))] = f_(k+1)(x, u_(0)) + Σ ∂f_(k)/∂u_(0) · u_(1)`.
/// Independent variables and constants are annihilated.
pub fn recursion_r(e: &Expr) -> Result<Expr, PerturbError> {
    derive(e, &Recursion)
}

struct Recursion;

impl Derivation for Recursion {
    type Error = PerturbError;

    fn atom(&self, atom: &Expr) -> Result<Option<Expr>, PerturbError> {
        Ok(match atom.node() {
            Node::Sym(_) => Some(Expr::zero()),
            Node::Jet(j) => match j.order {
                Some(k) => Some(&Expr::int(k as i64 + 1) * &Expr::jet(j.with_order(Some(k + 1)))),
                None => return Err(PerturbError::Unexpanded(atom.to_string())),
            },
            Node::Apply(app) => {
                let Some(k) = app.family else {
                    return Err(PerturbError::MissingFamilyIndex(app.name.to_string()));
                };
                let mut parts = vec![Expr::apply(&app.name, Some(k + 1), app.derivs.clone(), app.args.clone())];
                for (s, arg) in app.args.iter().enumerate() {
                    let r = recursion_r(arg)?;
                    if r.is_zero_literal() {
                        continue;
                    }
                    let mut derivs = app.derivs.clone();
                    derivs[s] += 1;
                    parts.push(&Expr::apply(&app.name, app.family, derivs, app.args.clone()) * &r);
                }
                Some(Expr::sum(parts))
            }
            Node::Integral(i) => {
                let Some(k) = i.family else {
                    return Err(PerturbError::MissingFamilyIndex(i.name.to_string()));
                };
                let next = Expr::antiderivative(&i.name, Some(k + 1), i.arg.clone());
                let f = Expr::apply(&i.name, Some(k), vec![0], vec![i.arg.clone()]);
                Some(&next + &(&f * &recursion_r(&i.arg)?))
            }
            _ => None,
        })
    }
}

/// One infinitesimal family `f_(0..p)` with optionally prescribed members.
///
/// `members[k] = Some(expr)` fixes `f_(k)(x, u_(0))`; `None` keeps it as the
/// opaque function `name[k](x, u_(0))`.
#[derive(Debug, Clone)]
pub struct Family {
    pub name: String,
    pub members: Vec<Option<Expr>>,
}

impl Family {
    pub fn opaque(name: &str, p: u32) -> Self {
        Family {
            name: name.to_string(),
            members: vec![None; p as usize + 1],
        }
    }

    pub fn fixed(name: &str, members: Vec<Expr>) -> Self {
        Family {
            name: name.to_string(),
            members: members.into_iter().map(Some).collect(),
        }
    }
}

/// `f̃_(0..p)` with `f̃_(0) = f_(0)`, `f̃_(k+1) = R[f̃_(k)] / (k+1)`, with
/// prescribed family members substituted afterwards.
///
/// Equivalently `Σ ε^k f̃_(k)` expands `Σ_k ε^k f_(k)(x, u) / k!` under
/// `u = Σ ε^k u_(k)`.
pub fn build_infinitesimals(family: &Family, space: &JetSpace) -> Result<EpsSeries, PerturbError> {
    let p = space.order;
    let args = space.family_args();
    let mut cur = Expr::apply(&family.name, Some(0), vec![0; args.len()], args.clone());
    let mut out = Vec::with_capacity(p as usize + 1);
    for k in 0..=p {
        if k > 0 {
            cur = recursion_r(&cur)?.scale(&Q::new(1.into(), (k as i64).into()));
        }
        out.push(instantiate(&cur, std::slice::from_ref(family), space));
    }
    let s = EpsSeries::new(out);
    s.validate_dependency()?;
    Ok(s)
}

/// Replace applications of prescribed family members (and their
/// derivatives) by the prescribed expressions.
pub fn instantiate(e: &Expr, families: &[Family], space: &JetSpace) -> Expr {
    let args = space.family_args();
    let mut found = std::collections::BTreeSet::new();
    e.collect_matching(
        &|x| match x.node() {
            Node::Apply(app) => families.iter().any(|f| {
                *app.name == *f.name
                    && app
                        .family
                        .and_then(|k| f.members.get(k as usize))
                        .is_some_and(Option::is_some)
            }),
            _ => false,
        },
        &mut found,
    );
    if found.is_empty() {
        return e.clone();
    }
    let mut b = BTreeMap::new();
    for a in found {
        let Node::Apply(app) = a.node() else { continue };
        let fam = families.iter().find(|f| *app.name == *f.name).expect("matched family");
        let k = app.family.expect("family index") as usize;
        let mut v = fam.members[k].clone().expect("prescribed member");
        for (s, &d) in app.derivs.iter().enumerate() {
            for _ in 0..d {
                v = differentiate(&v, &args[s]);
            }
        }
        if app.args != args {
            let sb: Bindings = args.iter().cloned().zip(app.args.iter().cloned()).collect();
            v = substitute(&v, &sb);
        }
        b.insert(a, v);
    }
    substitute(e, &b)
}

//! Symbolic expressions over jet coordinates, constants and opaque functions.
//!
//! Every [`Expr`] is kept in canonical form: a sorted sum of terms, each term
//! a rational coefficient times a sorted product of atoms raised to rational
//! exponents. Constructors and arithmetic operators normalize eagerly, so two
//! expressions compare equal iff their canonical trees are identical.
//!
//! Trigonometric functions of integer multiples of an atom are rewritten to
//! polynomials in `sin`/`cos` of that atom, with `sin` kept to degree at most
//! one (`sin^2 = 1 - cos^2`). Positive integer powers of sums are expanded.

mod collect;
mod diff;
mod parse;
mod print;
mod subst;
mod zero;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use collect::collect;
pub use diff::{derive, differentiate, Derivation};
pub use parse::{parse, parse_with, Context};
pub use print::{to_json, to_latex};
pub use subst::{substitute, Bindings};
pub use zero::{is_zero, Verdict};

/// Exact rational number.
pub type Q = BigRational;

/// Name of the distinguished small parameter.
pub const EPS: &str = "eps";

/// Errors raised by the expression kernel.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("expression is not polynomial in `{0}`")]
    NotPolynomial(String),
}

/// A jet coordinate: a dependent variable, optionally tagged with its
/// ε-expansion order, differentiated with respect to a multiset of
/// independent variables.
///
/// `order == None` denotes the unexpanded variable `u` itself (as it appears
/// in a Lagrangian before substitution of `u = u0 + eps*u1 + ...`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub base: Arc<str>,
    pub order: Option<u32>,
    /// Sorted list of independent-variable names, one entry per derivative.
    pub derivs: Vec<Arc<str>>,
}

impl JetVar {
    pub fn new(base: &str, order: Option<u32>) -> Self {
        JetVar {
            base: base.into(),
            order,
            derivs: Vec::new(),
        }
    }

    /// The same coordinate differentiated once more with respect to `x`.
    pub fn raised(&self, x: &str) -> Self {
        let mut derivs = self.derivs.clone();
        derivs.push(x.into());
        derivs.sort();
        JetVar {
            base: self.base.clone(),
            order: self.order,
            derivs,
        }
    }

    pub fn with_order(&self, order: Option<u32>) -> Self {
        JetVar {
            base: self.base.clone(),
            order,
            derivs: self.derivs.clone(),
        }
    }

    pub fn with_derivs(&self, derivs: &[Arc<str>]) -> Self {
        let mut derivs = derivs.to_vec();
        derivs.sort();
        JetVar {
            base: self.base.clone(),
            order: self.order,
            derivs,
        }
    }

    pub fn derivative_order(&self) -> usize {
        self.derivs.len()
    }
}

/// Elementary functions known to the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Elementary {
    pub fn name(self) -> &'static str {
        match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Exp => "exp",
            Elementary::Log => "log",
        }
    }
}

/// Application of an opaque (arbitrary) function, possibly differentiated.
///
/// `derivs[s]` counts derivatives with respect to argument slot `s`, so
/// derivatives commute by construction. `family` carries the ε-order index of
/// infinitesimal family functions such as `xi[1](t,u0)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Application {
    pub name: Arc<str>,
    pub family: Option<u32>,
    pub derivs: Vec<u32>,
    pub args: Vec<Expr>,
}

/// `Int(F, a)`: the antiderivative of a unary opaque function evaluated at `a`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Antiderivative {
    pub name: Arc<str>,
    pub family: Option<u32>,
    pub arg: Expr,
}

/// `base^exp` inside a term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub base: Expr,
    pub exp: Q,
}

/// `coef * prod(factors)`; factors sorted by base with distinct bases.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub factors: Vec<Factor>,
    pub coef: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(Q),
    Sym(Arc<str>),
    Jet(JetVar),
    Fun(Elementary, Expr),
    Apply(Application),
    Integral(Antiderivative),
    /// Sum of terms. Never a single bare atom or a single number.
    Poly(Vec<Term>),
}

/// Immutable, canonical symbolic expression. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

pub(crate) fn q_int(i: i64) -> Q {
    Q::from_integer(BigInt::from(i))
}

fn q_is_integer(q: &Q) -> bool {
    q.denom().is_one()
}

/// Exact `q^r` when it is rational.
fn q_pow(q: &Q, r: &Q) -> Option<Q> {
    if q.is_zero() {
        return if r.is_positive() { Some(Q::zero()) } else { None };
    }
    let n = r.numer().to_i32()?;
    let d = r.denom().to_u32()?;
    let root = if d == 1 {
        q.clone()
    } else {
        if q.is_negative() {
            return None;
        }
        let rn = q.numer().nth_root(d);
        let rd = q.denom().nth_root(d);
        if num_traits::pow(rn.clone(), d as usize) != *q.numer()
            || num_traits::pow(rd.clone(), d as usize) != *q.denom()
        {
            return None;
        }
        Q::new(rn, rd)
    };
    Some(if n >= 0 {
        num_traits::pow(root, n as usize)
    } else {
        num_traits::pow(root.recip(), (-n) as usize)
    })
}

impl Term {
    fn constant(coef: Q) -> Term {
        Term {
            factors: Vec::new(),
            coef,
        }
    }

    fn atom(e: Expr) -> Term {
        Term {
            factors: vec![Factor {
                base: e,
                exp: Q::one(),
            }],
            coef: Q::one(),
        }
    }

    /// The factor part of the term as an expression (coefficient dropped).
    pub fn monomial(&self) -> Expr {
        Expr::from_terms(vec![Term {
            factors: self.factors.clone(),
            coef: Q::one(),
        }])
    }

    pub fn to_expr(&self) -> Expr {
        Expr::from_terms(vec![self.clone()])
    }
}

/// Multiply two sorted factor lists, merging equal bases.
fn merge_factors(a: &[Factor], b: &[Factor]) -> Vec<Factor> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].base.cmp(&b[j].base) {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                let exp = &a[i].exp + &b[j].exp;
                if !exp.is_zero() {
                    out.push(Factor {
                        base: a[i].base.clone(),
                        exp,
                    });
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Whether a factor must be rewritten before it can live in a canonical term.
fn needs_rewrite(f: &Factor) -> bool {
    match f.base.node() {
        Node::Num(_) => q_is_integer(&f.exp),
        Node::Poly(_) => q_is_integer(&f.exp) && f.exp.is_positive(),
        Node::Fun(Elementary::Sin, _) => q_is_integer(&f.exp) && f.exp > Q::one(),
        _ => false,
    }
}

/// Canonicalize a raw term into a list of canonical terms.
fn normalize_term(coef: Q, factors: Vec<Factor>, out: &mut Vec<Term>) {
    if coef.is_zero() {
        return;
    }
    if !factors.iter().any(needs_rewrite) {
        out.push(Term { factors, coef });
        return;
    }
    let mut coef = coef;
    let mut plain = Vec::with_capacity(factors.len());
    let mut extra: Vec<Expr> = Vec::new();
    for f in factors {
        if !needs_rewrite(&f) {
            plain.push(f);
            continue;
        }
        let n = f.exp.to_integer().to_i64().expect("exponent overflow");
        match f.base.node() {
            Node::Num(q) => {
                coef *= q_pow(q, &f.exp).expect("integer power of a number");
            }
            Node::Poly(_) => extra.push(f.base.powi(n)),
            Node::Fun(Elementary::Sin, a) => {
                // sin^n = sin^(n mod 2) * (1 - cos^2)^(n div 2)
                let c = Expr::fun_raw(Elementary::Cos, a.clone());
                let one_minus = Expr::one() - c.powi(2);
                if n % 2 == 1 {
                    plain.push(Factor {
                        base: f.base.clone(),
                        exp: Q::one(),
                    });
                }
                extra.push(one_minus.powi(n / 2));
            }
            _ => unreachable!(),
        }
    }
    plain.sort_by(|x, y| x.base.cmp(&y.base));
    let mut acc = Expr::from_terms(vec![Term {
        factors: plain,
        coef,
    }]);
    for e in extra {
        acc = &acc * &e;
    }
    out.extend(acc.terms().into_owned());
}

impl Expr {
    fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(q: Q) -> Expr {
        Expr::new(Node::Num(q))
    }

    pub fn int(i: i64) -> Expr {
        Expr::num(q_int(i))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::num(Q::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::new(Node::Sym(name.into()))
    }

    /// The small parameter ε.
    pub fn eps() -> Expr {
        Expr::sym(EPS)
    }

    pub fn jet(v: JetVar) -> Expr {
        Expr::new(Node::Jet(v))
    }

    /// Expanded coordinate `base_(order)` with no derivatives.
    pub fn coord(base: &str, order: u32) -> Expr {
        Expr::jet(JetVar::new(base, Some(order)))
    }

    pub fn apply(name: &str, family: Option<u32>, derivs: Vec<u32>, args: Vec<Expr>) -> Expr {
        assert_eq!(derivs.len(), args.len(), "one derivative count per argument");
        Expr::new(Node::Apply(Application {
            name: name.into(),
            family,
            derivs,
            args,
        }))
    }

    /// `Int(F, arg)`.
    pub fn antiderivative(name: &str, family: Option<u32>, arg: Expr) -> Expr {
        Expr::new(Node::Integral(Antiderivative {
            name: name.into(),
            family,
            arg,
        }))
    }

    fn fun_raw(kind: Elementary, arg: Expr) -> Expr {
        Expr::new(Node::Fun(kind, arg))
    }

    pub fn sin(arg: Expr) -> Expr {
        trig(Elementary::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Expr {
        trig(Elementary::Cos, arg)
    }

    pub fn exp(arg: Expr) -> Expr {
        if arg.is_zero_literal() {
            return Expr::one();
        }
        Expr::fun_raw(Elementary::Exp, arg)
    }

    pub fn log(arg: Expr) -> Expr {
        if arg.is_one() {
            return Expr::zero();
        }
        Expr::fun_raw(Elementary::Log, arg)
    }

    pub fn sqrt(arg: Expr) -> Expr {
        arg.pow(&Q::new(BigInt::from(1), BigInt::from(2)))
    }

    pub fn elementary(kind: Elementary, arg: Expr) -> Expr {
        match kind {
            Elementary::Sin => Expr::sin(arg),
            Elementary::Cos => Expr::cos(arg),
            Elementary::Exp => Expr::exp(arg),
            Elementary::Log => Expr::log(arg),
        }
    }

    pub fn as_num(&self) -> Option<&Q> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_jet(&self) -> Option<&JetVar> {
        match self.node() {
            Node::Jet(j) => Some(j),
            _ => None,
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_one())
    }

    /// True for symbols, jet coordinates and function applications.
    pub fn is_atom(&self) -> bool {
        !matches!(self.node(), Node::Num(_) | Node::Poly(_))
    }

    /// View as a list of terms (empty for zero).
    pub fn terms(&self) -> std::borrow::Cow<'_, [Term]> {
        use std::borrow::Cow;
        match self.node() {
            Node::Poly(ts) => Cow::Borrowed(ts),
            Node::Num(q) if q.is_zero() => Cow::Owned(Vec::new()),
            Node::Num(q) => Cow::Owned(vec![Term::constant(q.clone())]),
            _ => Cow::Owned(vec![Term::atom(self.clone())]),
        }
    }

    /// Number of terms in the canonical sum.
    pub fn len(&self) -> usize {
        match self.node() {
            Node::Poly(ts) => ts.len(),
            Node::Num(q) if q.is_zero() => 0,
            _ => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Build the canonical expression for a sum of canonical terms.
    pub(crate) fn from_terms(mut terms: Vec<Term>) -> Expr {
        terms.sort_by(|a, b| a.factors.cmp(&b.factors));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            if let Some(last) = merged.last_mut() {
                if last.factors == t.factors {
                    last.coef += t.coef;
                    continue;
                }
            }
            merged.push(t);
        }
        merged.retain(|t| !t.coef.is_zero());
        match merged.len() {
            0 => Expr::zero(),
            1 => {
                let t = &merged[0];
                if t.factors.is_empty() {
                    return Expr::num(t.coef.clone());
                }
                if t.coef.is_one() && t.factors.len() == 1 && t.factors[0].exp.is_one() {
                    return t.factors[0].base.clone();
                }
                Expr::new(Node::Poly(merged))
            }
            _ => Expr::new(Node::Poly(merged)),
        }
    }

    /// Sum of many expressions, normalized once.
    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut terms = Vec::new();
        for e in items {
            terms.extend(e.terms().iter().cloned());
        }
        Expr::from_terms(terms)
    }

    /// Product of many expressions.
    pub fn product<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        items.into_iter().fold(Expr::one(), |acc, e| &acc * &e)
    }

    pub fn scale(&self, q: &Q) -> Expr {
        if q.is_zero() {
            return Expr::zero();
        }
        Expr::from_terms(
            self.terms()
                .iter()
                .map(|t| Term {
                    factors: t.factors.clone(),
                    coef: &t.coef * q,
                })
                .collect(),
        )
    }

    pub fn powi(&self, n: i64) -> Expr {
        self.pow(&q_int(n))
    }

    /// `self^r` for rational `r`.
    ///
    /// Products are distributed over the exponent (principal real branch).
    /// Sums are expanded for positive integer `r` and kept as an atom
    /// otherwise.
    pub fn pow(&self, r: &Q) -> Expr {
        if r.is_zero() {
            return Expr::one();
        }
        if r.is_one() {
            return self.clone();
        }
        match self.node() {
            Node::Num(q) => {
                if q.is_zero() && !r.is_positive() {
                    panic!("division by zero in symbolic expression");
                }
                match q_pow(q, r) {
                    Some(v) => Expr::num(v),
                    None => Expr::from_terms(vec![Term {
                        factors: vec![Factor {
                            base: self.clone(),
                            exp: r.clone(),
                        }],
                        coef: Q::one(),
                    }]),
                }
            }
            Node::Poly(ts) if ts.len() >= 2 => {
                if q_is_integer(r) && r.is_positive() {
                    let n = r.to_integer().to_u64().expect("exponent overflow");
                    let mut result = Expr::one();
                    let mut base = self.clone();
                    let mut k = n;
                    while k > 0 {
                        if k & 1 == 1 {
                            result = &result * &base;
                        }
                        k >>= 1;
                        if k > 0 {
                            base = &base * &base;
                        }
                    }
                    result
                } else {
                    Expr::from_terms(vec![Term {
                        factors: vec![Factor {
                            base: self.clone(),
                            exp: r.clone(),
                        }],
                        coef: Q::one(),
                    }])
                }
            }
            Node::Poly(ts) => {
                let t = &ts[0];
                let mut factors: Vec<Factor> = t
                    .factors
                    .iter()
                    .map(|f| Factor {
                        base: f.base.clone(),
                        exp: &f.exp * r,
                    })
                    .collect();
                let coef = match q_pow(&t.coef, r) {
                    Some(c) => c,
                    None => {
                        factors.push(Factor {
                            base: Expr::num(t.coef.clone()),
                            exp: r.clone(),
                        });
                        factors.sort_by(|a, b| a.base.cmp(&b.base));
                        Q::one()
                    }
                };
                let mut out = Vec::new();
                normalize_term(coef, factors, &mut out);
                Expr::from_terms(out)
            }
            _ => {
                let mut out = Vec::new();
                normalize_term(
                    Q::one(),
                    vec![Factor {
                        base: self.clone(),
                        exp: r.clone(),
                    }],
                    &mut out,
                );
                Expr::from_terms(out)
            }
        }
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    /// Whether `needle` occurs anywhere in `self`, including inside function
    /// arguments and the bases of powers.
    pub fn contains(&self, needle: &Expr) -> bool {
        if self == needle {
            return true;
        }
        match self.node() {
            Node::Num(_) | Node::Sym(_) | Node::Jet(_) => false,
            Node::Fun(_, a) => a.contains(needle),
            Node::Apply(app) => app.args.iter().any(|a| a.contains(needle)),
            Node::Integral(i) => i.arg.contains(needle),
            Node::Poly(ts) => ts
                .iter()
                .any(|t| t.factors.iter().any(|f| f.base.contains(needle))),
        }
    }

    /// Whether any subexpression satisfies `pred`.
    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self.node() {
            Node::Num(_) | Node::Sym(_) | Node::Jet(_) => false,
            Node::Fun(_, a) => a.any(pred),
            Node::Apply(app) => app.args.iter().any(|a| a.any(pred)),
            Node::Integral(i) => i.arg.any(pred),
            Node::Poly(ts) => ts
                .iter()
                .any(|t| t.factors.iter().any(|f| f.base.any(pred))),
        }
    }

    /// Collect every subexpression satisfying `pred` (not descending into matches).
    pub fn collect_matching(
        &self,
        pred: &dyn Fn(&Expr) -> bool,
        out: &mut std::collections::BTreeSet<Expr>,
    ) {
        if pred(self) {
            out.insert(self.clone());
            return;
        }
        match self.node() {
            Node::Num(_) | Node::Sym(_) | Node::Jet(_) => {}
            Node::Fun(_, a) => a.collect_matching(pred, out),
            Node::Apply(app) => app.args.iter().for_each(|a| a.collect_matching(pred, out)),
            Node::Integral(i) => i.arg.collect_matching(pred, out),
            Node::Poly(ts) => {
                for t in ts.iter() {
                    for f in &t.factors {
                        f.base.collect_matching(pred, out);
                    }
                }
            }
        }
    }

    /// All jet coordinates occurring in the expression.
    pub fn jets(&self) -> std::collections::BTreeSet<JetVar> {
        let mut set = std::collections::BTreeSet::new();
        self.collect_matching(&|e| matches!(e.node(), Node::Jet(_)), &mut set);
        set.into_iter()
            .map(|e| e.as_jet().cloned().expect("jet"))
            .collect()
    }

    /// All symbols occurring in the expression.
    pub fn symbols(&self) -> std::collections::BTreeSet<String> {
        let mut set = std::collections::BTreeSet::new();
        self.collect_matching(&|e| matches!(e.node(), Node::Sym(_)), &mut set);
        set.into_iter()
            .map(|e| e.as_sym().expect("sym").to_string())
            .collect()
    }

    /// Fully normalize again. Canonical construction makes this the identity.
    pub fn normalize(&self) -> Expr {
        subst::rebuild(self)
    }

    /// Rational constant value, if the expression is a number.
    pub fn to_f64(&self) -> Option<f64> {
        self.as_num().and_then(|q| q.to_f64())
    }
}

/// `sum * other` where every term of `other` already carries `sum` as a
/// factor: multiply by bumping the exponent instead of distributing.
fn absorb_sum_factor(sum: &Expr, other: &Expr) -> Option<Expr> {
    if sum.len() < 2 {
        return None;
    }
    let ts = other.terms();
    if ts.is_empty()
        || !ts
            .iter()
            .all(|t| t.factors.iter().any(|f| f.base == *sum))
    {
        return None;
    }
    let mut out = Vec::new();
    for t in ts.iter() {
        let factors = merge_factors(
            &t.factors,
            &[Factor {
                base: sum.clone(),
                exp: Q::one(),
            }],
        );
        normalize_term(t.coef.clone(), factors, &mut out);
    }
    Some(Expr::from_terms(out))
}

/// sin/cos with integer-multiple argument reduction.
fn trig(kind: Elementary, arg: Expr) -> Expr {
    if arg.is_zero_literal() {
        return match kind {
            Elementary::Sin => Expr::zero(),
            _ => Expr::one(),
        };
    }
    // arg = q * atom with integer q
    let single = match arg.node() {
        Node::Poly(ts) if ts.len() == 1 => {
            let t = &ts[0];
            if t.factors.len() == 1 && t.factors[0].exp.is_one() && q_is_integer(&t.coef) {
                Some((t.coef.to_integer(), t.factors[0].base.clone()))
            } else {
                None
            }
        }
        _ => None,
    };
    let Some((n, atom)) = single else {
        return Expr::fun_raw(kind, arg);
    };
    let negative = n.is_negative();
    let n = n.abs().to_u32().expect("trig multiple overflow");
    let s = Expr::fun_raw(Elementary::Sin, atom.clone());
    let c = Expr::fun_raw(Elementary::Cos, atom);
    // (c + i s)^n: real part = cos(n x), imaginary part = sin(n x)
    let mut re = Vec::new();
    let mut im = Vec::new();
    let mut binom = BigInt::one();
    for j in 0..=n {
        let term = &c.powi((n - j) as i64) * &s.powi(j as i64);
        let coef = Q::from_integer(binom.clone());
        let sign = if (j / 2) % 2 == 0 { coef } else { -coef };
        if j % 2 == 0 {
            re.push(term.scale(&sign));
        } else {
            im.push(term.scale(&sign));
        }
        binom = binom * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    match kind {
        Elementary::Sin => {
            let v = Expr::sum(im);
            if negative {
                -v
            } else {
                v
            }
        }
        _ => Expr::sum(re),
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl From<i64> for Expr {
    fn from(i: i64) -> Self {
        Expr::int(i)
    }
}

impl From<Q> for Expr {
    fn from(q: Q) -> Self {
        Expr::num(q)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if self.is_zero_literal() {
            return rhs.clone();
        }
        if rhs.is_zero_literal() {
            return self.clone();
        }
        let mut terms = self.terms().into_owned();
        terms.extend(rhs.terms().iter().cloned());
        Expr::from_terms(terms)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero_literal() || rhs.is_zero_literal() {
            return Expr::zero();
        }
        if self.is_one() {
            return rhs.clone();
        }
        if rhs.is_one() {
            return self.clone();
        }
        if let Some(q) = self.as_num() {
            return rhs.scale(q);
        }
        if let Some(q) = rhs.as_num() {
            return self.scale(q);
        }
        if let Some(e) = absorb_sum_factor(self, rhs).or_else(|| absorb_sum_factor(rhs, self)) {
            return e;
        }
        let a = self.terms();
        let b = rhs.terms();
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a.iter() {
            for y in b.iter() {
                let factors = merge_factors(&x.factors, &y.factors);
                normalize_term(&x.coef * &y.coef, factors, &mut out);
            }
        }
        Expr::from_terms(out)
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(&-Q::one())
    }
}

impl Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        if let Some(q) = rhs.as_num() {
            assert!(!q.is_zero(), "division by zero in symbolic expression");
            return self.scale(&q.recip());
        }
        self * &rhs.recip()
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}
forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::sum(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Expr {
        Expr::sym("t")
    }

    #[test]
    fn zero_summand_and_unit_factor_are_elided() {
        let x = Expr::sym("x");
        let y = Expr::sym("y");
        assert_eq!(&(&Expr::zero() * &x) + &y, y);
        assert_eq!(&Expr::one() * &x, x);
    }

    #[test]
    fn repeated_factor_becomes_power() {
        let x = Expr::sym("x");
        let sq = &x * &x;
        assert_eq!(sq, x.powi(2));
        match sq.node() {
            Node::Poly(ts) => assert_eq!(ts[0].factors[0].exp, q_int(2)),
            _ => panic!("expected power"),
        }
    }

    #[test]
    fn pythagorean_identity_normalizes_to_zero() {
        let e = &(&Expr::sin(t()).powi(2) + &Expr::cos(t()).powi(2)) - &Expr::one();
        assert!(e.is_zero_literal());
    }

    #[test]
    fn double_angle_expands() {
        let two_t = &Expr::int(2) * &t();
        let e = &Expr::sin(two_t) - &(&Expr::int(2) * &(&Expr::sin(t()) * &Expr::cos(t())));
        assert!(e.is_zero_literal());
    }

    #[test]
    fn negative_argument_parity() {
        assert_eq!(Expr::sin(-t()), -Expr::sin(t()));
        assert_eq!(Expr::cos(-t()), Expr::cos(t()));
    }

    #[test]
    fn sums_to_fractional_power_stay_atomic() {
        let s = &Expr::sym("x").powi(2) + &Expr::sym("y").powi(2);
        let r = s.pow(&Q::new(BigInt::from(-1), BigInt::from(2)));
        let back = &r * &r;
        assert_eq!(back, s.powi(-1));
        assert_eq!(&back * &s, Expr::one());
        assert_eq!(&s * &r, s.pow(&Q::new(BigInt::from(1), BigInt::from(2))));
    }

    #[test]
    fn rational_roots_are_exact() {
        assert_eq!(Expr::int(4).pow(&Q::new(BigInt::from(1), BigInt::from(2))), Expr::int(2));
        let r2 = Expr::sqrt(Expr::int(2));
        assert_eq!(&r2 * &r2, Expr::int(2));
    }
}

//! Perturbed Lagrangians, the Euler–Lagrange hierarchy, the variational
//! invariance residual, Noether fluxes and their verification.
//!
//! Sign convention: a generator `Ξ` with gauge `φ` is a variational symmetry
//! when, order by order in ε,
//!
//! ```text
//! Σ_l ( Ξ̃_(l) ℒ_{k-l} + ℒ_{k-l} Σ_i D_i ξ̃_(l)i ) + Σ_i D_i φ^i_(k) = 0
//! ```
//!
//! and the conserved current is `Φ^i = ξ_i ℒ + Σ_α Q_α ∂ℒ/∂u_α,i + φ^i`
//! with characteristic `Q_α = η_α − Σ_j ξ_j u_α,j`, every factor an ε-series.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde_json::{json, Value};

use crate::expr::{collect, differentiate, is_zero, substitute, Bindings, Expr, Verdict};
use crate::jet::{JetError, JetSpace};
use crate::linalg::{self, LinalgError, Row};
use crate::perturb::{expand, EpsSeries, PerturbError};
use crate::symmetry::{ApproximateGenerator, SymmetryError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NoetherError {
    #[error("not a variational symmetry: residual at order {order} is `{residual}`")]
    NotAVariationalSymmetry { order: usize, residual: String },
    #[error("flux formula mismatch: divergence at order {order} does not vanish on shell: `{divergence}`")]
    FormulaMismatch { order: usize, divergence: String },
    #[error("cannot solve the Euler-Lagrange hierarchy for its leading derivatives: {0}")]
    CannotSolveForLeadingDerivative(String),
    #[error("gauge term depends on derivatives: `{0}`")]
    GaugeDependsOnDerivatives(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `ℒ ≈ ℒ_0 + ε ℒ_1 + ... + ε^p ℒ_p`, first order in derivatives.
#[derive(Debug)]
pub struct PerturbedLagrangian {
    pub space: JetSpace,
    pub l: EpsSeries,
    /// Symbols treated as constants (parameters).
    pub constants: BTreeSet<String>,
    /// Optional designated leading derivatives to solve the hierarchy for.
    pub leading: Option<Vec<Expr>>,
    on_shell: OnceLock<Result<Bindings, NoetherError>>,
}

impl Clone for PerturbedLagrangian {
    fn clone(&self) -> Self {
        PerturbedLagrangian {
            space: self.space.clone(),
            l: self.l.clone(),
            constants: self.constants.clone(),
            leading: self.leading.clone(),
            on_shell: OnceLock::new(),
        }
    }
}

impl PerturbedLagrangian {
    pub fn new(space: JetSpace, l: EpsSeries) -> Result<Self, NoetherError> {
        if l.order() != space.order {
            return Err(PerturbError::OrderMismatch(l.order() as usize, space.order as usize).into());
        }
        Ok(PerturbedLagrangian {
            space,
            l,
            constants: BTreeSet::new(),
            leading: None,
            on_shell: OnceLock::new(),
        })
    }

    /// Expand a Lagrangian written in `eps` and the unexpanded variables.
    pub fn from_source(space: JetSpace, source: &Expr) -> Result<Self, NoetherError> {
        let l = expand(source, &space)?;
        PerturbedLagrangian::new(space, l)
    }

    pub fn with_constants<I: IntoIterator<Item = String>>(mut self, constants: I) -> Self {
        self.constants = constants.into_iter().collect();
        self
    }

    pub fn with_leading(mut self, leading: Vec<Expr>) -> Self {
        self.leading = Some(leading);
        self
    }

    pub fn order(&self) -> u32 {
        self.space.order
    }

    /// Structural warnings: `ℒ_k` (k ≥ 1) should be linear in `u_(k)` and
    /// its derivatives and free of higher ε-orders.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.l.validate_dependency() {
            out.push(e.to_string());
        }
        for k in 1..=self.order() as usize {
            let gens: Vec<Expr> = self
                .l
                .get(k)
                .jets()
                .into_iter()
                .filter(|j| j.order == Some(k as u32))
                .map(Expr::jet)
                .collect();
            match collect(self.l.get(k), &gens) {
                Ok(m) => {
                    if m.keys().any(|mono| mono.terms().iter().any(|t| t.factors.iter().map(|f| f.exp.to_integer()).sum::<num_bigint::BigInt>() > 1.into())) {
                        out.push(format!("L_{k} is not linear in the order-{k} coordinates"));
                    }
                }
                Err(_) => out.push(format!("L_{k} is not polynomial in the order-{k} coordinates")),
            }
        }
        out
    }

    fn momentum(&self, k: usize, a: usize, i: usize) -> Expr {
        differentiate(self.l.get(k), &self.space.deriv(a, 0, &[i]))
    }

    /// `E_k^α = ∂ℒ_k/∂u_(0)α − Σ_i D_i ∂ℒ_k/∂u_(0)α,i`, one series per α.
    pub fn euler_lagrange(&self) -> Result<Vec<EpsSeries>, NoetherError> {
        let mut out = Vec::new();
        for a in 0..self.space.m() {
            let mut coeffs = Vec::new();
            for k in 0..=self.order() as usize {
                let mut e = differentiate(self.l.get(k), &self.space.coord(a, 0));
                for i in 0..self.space.n() {
                    e = &e - &self.space.total_derivative(&self.momentum(k, a, i), i)?;
                }
                coeffs.push(e);
            }
            out.push(EpsSeries::new(coeffs));
        }
        Ok(out)
    }

    /// Rules expressing the leading (second) derivatives on solutions.
    pub fn on_shell_rules(&self) -> Result<&Bindings, NoetherError> {
        self.on_shell
            .get_or_init(|| self.solve_hierarchy())
            .as_ref()
            .map_err(Clone::clone)
    }

    fn solve_hierarchy(&self) -> Result<Bindings, NoetherError> {
        let eqs: Vec<Expr> = self
            .euler_lagrange()?
            .into_iter()
            .flat_map(EpsSeries::into_coeffs)
            .filter(|e| !e.is_zero_literal())
            .collect();
        let unknowns: Vec<Expr> = match &self.leading {
            Some(l) => l.clone(),
            None => {
                let set: BTreeSet<Expr> = eqs
                    .iter()
                    .flat_map(|e| e.jets())
                    .filter(|j| j.derivative_order() == 2)
                    .map(Expr::jet)
                    .collect();
                set.into_iter().collect()
            }
        };
        let cols: BTreeMap<Expr, usize> = unknowns.iter().cloned().enumerate().map(|(i, u)| (u, i)).collect();
        let konst = unknowns.len();
        let mut rows = Vec::new();
        for e in &eqs {
            let m = collect(e, &unknowns).map_err(|err| NoetherError::CannotSolveForLeadingDerivative(err.to_string()))?;
            let mut row = Row::new();
            for (mono, c) in m {
                if mono.is_one() {
                    row.insert(konst, c);
                } else if let Some(&col) = cols.get(&mono) {
                    row.insert(col, c);
                } else {
                    return Err(NoetherError::CannotSolveForLeadingDerivative(format!(
                        "equation is nonlinear in `{mono}`"
                    )));
                }
            }
            rows.push(row);
        }
        let ech = linalg::rref(rows, konst + 1)?;
        let mut rules = Bindings::new();
        for (col, row) in &ech.rows {
            if *col == konst {
                return Err(NoetherError::CannotSolveForLeadingDerivative("inconsistent equations".into()));
            }
            if let Some((c, _)) = row.iter().find(|(c, _)| **c != *col && **c != konst) {
                return Err(NoetherError::CannotSolveForLeadingDerivative(format!(
                    "`{}` is undetermined",
                    unknowns[*c]
                )));
            }
            let rhs = row.get(&konst).cloned().unwrap_or_else(Expr::zero);
            rules.insert(unknowns[*col].clone(), -(&rhs / &row[col]));
        }
        if self.leading.is_some() && rules.len() < unknowns.len() {
            let missing: Vec<String> = unknowns
                .iter()
                .filter(|u| !rules.contains_key(*u))
                .map(ToString::to_string)
                .collect();
            return Err(NoetherError::CannotSolveForLeadingDerivative(missing.join(", ")));
        }
        Ok(rules)
    }

    /// Substitute the solved hierarchy.
    pub fn reduce_on_shell(&self, e: &Expr) -> Result<Expr, NoetherError> {
        Ok(substitute(e, self.on_shell_rules()?))
    }
}

/// Gauge terms `φ^i_(k)`, functions of `(x, u_(0..k))` only.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTerm {
    /// One ε-series per independent variable.
    pub phi: Vec<EpsSeries>,
}

impl GaugeTerm {
    pub fn new(phi: Vec<EpsSeries>) -> Result<Self, NoetherError> {
        for s in &phi {
            for c in s.coeffs() {
                if let Some(j) = c.jets().into_iter().find(|j| j.derivative_order() > 0) {
                    return Err(NoetherError::GaugeDependsOnDerivatives(Expr::jet(j).to_string()));
                }
            }
            s.validate_dependency()?;
        }
        Ok(GaugeTerm { phi })
    }

    pub fn zero(space: &JetSpace) -> Self {
        GaugeTerm {
            phi: vec![EpsSeries::zero(space.order); space.n()],
        }
    }

    /// From a matrix `phi[k][i]`.
    pub fn from_matrix(space: &JetSpace, m: Vec<Vec<Expr>>) -> Result<Self, NoetherError> {
        if m.len() != space.order as usize + 1 || m.iter().any(|r| r.len() != space.n()) {
            return Err(NoetherError::Shape("gauge matrix must be [p+1][n]".into()));
        }
        GaugeTerm::new((0..space.n()).map(|i| EpsSeries::new(m.iter().map(|r| r[i].clone()).collect())).collect())
    }

    pub fn shift(&self) -> Self {
        GaugeTerm {
            phi: self.phi.iter().map(EpsSeries::shift).collect(),
        }
    }
}

/// Left-hand side of the invariance condition as an ε-series.
pub fn variational_residual(
    g: &ApproximateGenerator,
    l: &PerturbedLagrangian,
    phi: &GaugeTerm,
) -> Result<EpsSeries, NoetherError> {
    let g1 = if g.prolonged_order() >= 1 { g.clone() } else { g.prolong(1)? };
    let space = &l.space;
    let mut acc = g1.apply(&l.l)?;
    let mut div = EpsSeries::zero(space.order);
    for i in 0..space.n() {
        div = div.add(&g.xi[i].try_map(|c| space.total_derivative(c, i))?)?;
    }
    acc = acc.add(&l.l.mul(&div)?)?;
    for (i, s) in phi.phi.iter().enumerate() {
        acc = acc.add(&s.try_map(|c| space.total_derivative(c, i))?)?;
    }
    Ok(acc)
}

/// Which flux formula to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxFormula {
    /// Every factor expanded as an ε-series (the consistent expansion).
    Expanded,
    /// The index pairing `(η̃_(l) − ξ̃_(l) u_(l)) Σ_q ∂ℒ_{k−l}/∂u_(q),i`
    /// with `− φ`, kept for comparison.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Nontrivial,
    /// Divergence vanishes identically, without using the equations.
    Trivial,
    /// Fluxes vanish on solutions.
    OnShellTrivial,
    Unverified,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Nontrivial => "nontrivial",
            Classification::Trivial => "trivial",
            Classification::OnShellTrivial => "on-shell-trivial",
            Classification::Unverified => "unverified",
        })
    }
}

/// Fluxes `Φ^i` (one ε-series per independent variable).
#[derive(Debug, Clone)]
pub struct ConservationLaw {
    pub fluxes: Vec<EpsSeries>,
    pub generator: Option<ApproximateGenerator>,
    pub gauge: Option<GaugeTerm>,
    pub verified: bool,
    pub classification: Classification,
}

impl ConservationLaw {
    /// An unverified law from given fluxes.
    pub fn from_fluxes(fluxes: Vec<EpsSeries>) -> Self {
        ConservationLaw {
            fluxes,
            generator: None,
            gauge: None,
            verified: false,
            classification: Classification::Unverified,
        }
    }

    /// The conserved quantity for a single independent variable.
    pub fn quantity(&self) -> &EpsSeries {
        &self.fluxes[0]
    }

    pub fn shift(&self) -> Self {
        ConservationLaw {
            fluxes: self.fluxes.iter().map(EpsSeries::shift).collect(),
            generator: self.generator.as_ref().map(ApproximateGenerator::shift),
            gauge: self.gauge.as_ref().map(GaugeTerm::shift),
            verified: self.verified,
            classification: self.classification,
        }
    }

    pub fn to_json(&self) -> Value {
        let p = self.fluxes.first().map_or(0, |s| s.order() as usize);
        let fluxes: Vec<Vec<String>> = (0..=p)
            .map(|k| self.fluxes.iter().map(|s| s.get(k).to_string()).collect())
            .collect();
        json!({
            "fluxes": fluxes,
            "verified": self.verified,
            "classification": self.classification.to_string(),
        })
    }

    pub fn to_latex(&self) -> String {
        let mut out = Vec::new();
        for (i, s) in self.fluxes.iter().enumerate() {
            let terms: Vec<String> = s
                .coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero_literal())
                .map(|(k, c)| match k {
                    0 => crate::expr::to_latex(c),
                    1 => format!("\\varepsilon\\left({}\\right)", crate::expr::to_latex(c)),
                    _ => format!("\\varepsilon^{{{k}}}\\left({}\\right)", crate::expr::to_latex(c)),
                })
                .collect();
            let body = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            out.push(format!("\\Phi^{{{}}} = {body}", i + 1));
        }
        out.join("\\\\\n")
    }
}

fn series_from(space: &JetSpace, f: impl Fn(u32) -> Expr) -> EpsSeries {
    EpsSeries::new((0..=space.order).map(f).collect())
}

fn expanded_fluxes(
    g: &ApproximateGenerator,
    l: &PerturbedLagrangian,
    phi: &GaugeTerm,
) -> Result<Vec<EpsSeries>, NoetherError> {
    let space = &l.space;
    let (n, m) = (space.n(), space.m());
    let mut q = Vec::with_capacity(m);
    for a in 0..m {
        let mut qa = g.eta[a].clone();
        for j in 0..n {
            qa = qa.sub(&g.xi[j].mul(&series_from(space, |k| space.deriv(a, k, &[j])))?)?;
        }
        q.push(qa);
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = g.xi[i].mul(&l.l)?;
        for (a, qa) in q.iter().enumerate() {
            let pa = series_from(space, |k| l.momentum(k as usize, a, i));
            acc = acc.add(&qa.mul(&pa)?)?;
        }
        out.push(acc.add(&phi.phi[i])?);
    }
    Ok(out)
}

fn printed_fluxes(
    g: &ApproximateGenerator,
    l: &PerturbedLagrangian,
    phi: &GaugeTerm,
) -> Result<Vec<EpsSeries>, NoetherError> {
    let space = &l.space;
    let p = space.order as usize;
    let mut out = Vec::new();
    for i in 0..space.n() {
        let mut coeffs = Vec::new();
        for k in 0..=p {
            let mut parts = Vec::new();
            for ell in 0..=k {
                let lk = l.l.get(k - ell);
                for a in 0..space.m() {
                    let mut qa = g.eta_coeff(ell, a).clone();
                    for j in 0..space.n() {
                        qa = &qa - &(g.xi_coeff(ell, j) * &space.deriv(a, ell as u32, &[j]));
                    }
                    let sum_q = Expr::sum((0..=k - ell).map(|qq| differentiate(lk, &space.deriv(a, qq as u32, &[i]))));
                    parts.push(&qa * &sum_q);
                }
                parts.push(g.xi_coeff(ell, i) * lk);
            }
            parts.push(-phi.phi[i].get(k));
            coeffs.push(Expr::sum(parts));
        }
        out.push(EpsSeries::new(coeffs));
    }
    Ok(out)
}

/// Assemble the Noether fluxes of a variational symmetry and verify them.
pub fn noether_fluxes(
    g: &ApproximateGenerator,
    l: &PerturbedLagrangian,
    phi: &GaugeTerm,
    formula: FluxFormula,
) -> Result<ConservationLaw, NoetherError> {
    if phi.phi.len() != l.space.n() {
        return Err(NoetherError::Shape("one gauge series per independent variable".into()));
    }
    let residual = variational_residual(g, l, phi)?;
    for (k, r) in residual.coeffs().iter().enumerate() {
        if !is_zero(r).is_zero() {
            return Err(NoetherError::NotAVariationalSymmetry {
                order: k,
                residual: r.to_string(),
            });
        }
    }
    let fluxes = match formula {
        FluxFormula::Expanded => expanded_fluxes(g, l, phi)?,
        FluxFormula::AsPrinted => printed_fluxes(g, l, phi)?,
    };
    let mut law = ConservationLaw {
        fluxes,
        generator: Some(g.clone()),
        gauge: Some(phi.clone()),
        verified: false,
        classification: Classification::Unverified,
    };
    let div = divergence(&law, l)?;
    if let Some((k, d)) = div.iter().enumerate().find(|(_, d)| !is_zero(d).is_zero()) {
        return Err(NoetherError::FormulaMismatch {
            order: k,
            divergence: d.to_string(),
        });
    }
    law.verified = true;
    law.classification = classify_single(&law, l)?;
    Ok(law)
}

/// `Σ_i D_i Φ^i_(k)` reduced on solutions, per ε-order.
pub fn divergence(law: &ConservationLaw, l: &PerturbedLagrangian) -> Result<Vec<Expr>, NoetherError> {
    let space = &l.space;
    let p = space.order as usize;
    let mut out = Vec::with_capacity(p + 1);
    for k in 0..=p {
        let mut parts = Vec::new();
        for (i, s) in law.fluxes.iter().enumerate() {
            let reduced = l.reduce_on_shell(s.get(k))?;
            parts.push(space.total_derivative(&reduced, i)?);
        }
        out.push(l.reduce_on_shell(&Expr::sum(parts))?);
    }
    Ok(out)
}

/// Whether the divergence vanishes on solutions, per ε-order.
pub fn divergence_check(law: &ConservationLaw, l: &PerturbedLagrangian) -> Result<Vec<bool>, NoetherError> {
    Ok(divergence(law, l)?.iter().map(|d| is_zero(d) == Verdict::Zero).collect())
}

fn classify_single(law: &ConservationLaw, l: &PerturbedLagrangian) -> Result<Classification, NoetherError> {
    let space = &l.space;
    let mut identically = true;
    for k in 0..=space.order as usize {
        let mut parts = Vec::new();
        for (i, s) in law.fluxes.iter().enumerate() {
            parts.push(space.total_derivative(s.get(k), i)?);
        }
        if !Expr::sum(parts).is_zero_literal() {
            identically = false;
        }
    }
    if identically {
        return Ok(Classification::Trivial);
    }
    let mut on_shell_zero = true;
    for s in &law.fluxes {
        for c in s.coeffs() {
            if !l.reduce_on_shell(c)?.is_zero_literal() {
                on_shell_zero = false;
            }
        }
    }
    Ok(if on_shell_zero {
        Classification::OnShellTrivial
    } else if law.verified {
        Classification::Nontrivial
    } else {
        Classification::Unverified
    })
}

/// Coordinates of a flux vector on `(component, order, monomial)` keys.
fn flux_vector(fluxes: &[EpsSeries], constants: &BTreeSet<String>) -> BTreeMap<(usize, usize, Expr), Expr> {
    let mut out = BTreeMap::new();
    for (i, s) in fluxes.iter().enumerate() {
        for (k, c) in s.coeffs().iter().enumerate() {
            for (m, v) in linalg::separate(c, constants) {
                out.insert((i, k, m), v);
            }
        }
    }
    out
}

/// Kernel of the column vectors, as rows over column indices.
fn column_kernel(
    columns: &[BTreeMap<(usize, usize, Expr), Expr>],
) -> Result<Vec<Row>, NoetherError> {
    let keys: BTreeSet<&(usize, usize, Expr)> = columns.iter().flat_map(|c| c.keys()).collect();
    let rows: Vec<Row> = keys
        .into_iter()
        .map(|key| {
            columns
                .iter()
                .enumerate()
                .filter_map(|(j, c)| c.get(key).map(|v| (j, v.clone())))
                .collect()
        })
        .collect();
    let ech = linalg::rref(rows, columns.len())?;
    let kernel = ech.kernel();
    // canonical basis: reduced echelon form of the kernel vectors
    let canon = linalg::rref(kernel, columns.len())?;
    Ok(canon.rows.into_iter().map(|(_, r)| r).collect())
}

/// One term of a dependency: `coef · ε^shift · law`.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyTerm {
    pub law: usize,
    pub shifted: bool,
    pub coef: Expr,
}

/// A constant-coefficient combination of laws that is identically
/// `O(ε^{p+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dependency {
    pub terms: Vec<DependencyTerm>,
}

impl Dependency {
    pub fn render(&self, labels: &[String]) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let eps = if t.shifted { "eps*" } else { "" };
                let c = t.coef.to_string();
                let c = if t.coef.len() > 1 { format!("({c})") } else { c };
                format!("{c}*{eps}[{}]", labels.get(t.law).cloned().unwrap_or_else(|| t.law.to_string()))
            })
            .collect();
        format!("{} = O(eps^p+1)", parts.join(" + "))
    }
}

/// Result of [`classify`].
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub classifications: Vec<Classification>,
    pub dependencies: Vec<Dependency>,
    /// Column layout used for the dependency vectors: `(law, shifted)`.
    columns: Vec<(usize, bool)>,
}

impl ClassificationReport {
    /// Whether the given relation lies in the span of the dependencies.
    pub fn implies(&self, relation: &[DependencyTerm]) -> Result<bool, NoetherError> {
        let index = |law: usize, shifted: bool| self.columns.iter().position(|c| *c == (law, shifted));
        let mut target = Row::new();
        for t in relation {
            match index(t.law, t.shifted) {
                Some(c) => {
                    target.insert(c, t.coef.clone());
                }
                None => return Ok(false),
            }
        }
        let basis: Vec<Row> = self
            .dependencies
            .iter()
            .map(|d| {
                d.terms
                    .iter()
                    .map(|t| (index(t.law, t.shifted).expect("own column"), t.coef.clone()))
                    .collect()
            })
            .collect();
        Ok(linalg::in_span(&basis, &target, self.columns.len())?)
    }
}

/// Triviality of each law and all constant-coefficient dependencies among
/// the laws and their ε-multiples.
pub fn classify(laws: &[ConservationLaw], l: &PerturbedLagrangian) -> Result<ClassificationReport, NoetherError> {
    let classifications = laws
        .iter()
        .map(|law| classify_single(law, l))
        .collect::<Result<Vec<_>, _>>()?;
    let mut columns = Vec::new();
    let mut vectors = Vec::new();
    for (j, law) in laws.iter().enumerate() {
        columns.push((j, false));
        vectors.push(flux_vector(&law.fluxes, &l.constants));
    }
    for (j, law) in laws.iter().enumerate() {
        let shifted: Vec<EpsSeries> = law.fluxes.iter().map(EpsSeries::shift).collect();
        if shifted.iter().all(EpsSeries::is_zero) {
            continue;
        }
        columns.push((j, true));
        vectors.push(flux_vector(&shifted, &l.constants));
    }
    let kernel = column_kernel(&vectors)?;
    let dependencies = kernel
        .into_iter()
        .map(|row| Dependency {
            terms: row
                .into_iter()
                .map(|(c, coef)| DependencyTerm {
                    law: columns[c].0,
                    shifted: columns[c].1,
                    coef,
                })
                .collect(),
        })
        .collect();
    Ok(ClassificationReport {
        classifications,
        dependencies,
        columns,
    })
}

/// How a computed flux relates to a golden one.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenMatch {
    /// `computed = scale · golden + Σ coef · other + constants`.
    pub scale: Expr,
    /// `(index into others, shifted, coefficient)`.
    pub others: Vec<(usize, bool, Expr)>,
    /// Additive constants per `(component, order)`.
    pub constants: Vec<((usize, usize), Expr)>,
}

/// Match computed fluxes against a golden quantity up to a nonzero constant
/// scale, additive constants, and (if needed) constant combinations of the
/// other golden quantities and their ε-multiples.
pub fn match_golden(
    computed: &[EpsSeries],
    golden: &[EpsSeries],
    others: &[Vec<EpsSeries>],
    constants: &BTreeSet<String>,
) -> Result<Option<GoldenMatch>, NoetherError> {
    if let Some(m) = match_with(computed, golden, &[], constants)? {
        return Ok(Some(m));
    }
    match_with(computed, golden, others, constants)
}

fn match_with(
    computed: &[EpsSeries],
    golden: &[EpsSeries],
    others: &[Vec<EpsSeries>],
    constants: &BTreeSet<String>,
) -> Result<Option<GoldenMatch>, NoetherError> {
    let mut cols = vec![flux_vector(computed, constants), flux_vector(golden, constants)];
    let mut meaning: Vec<(usize, bool)> = Vec::new();
    for (j, o) in others.iter().enumerate() {
        cols.push(flux_vector(o, constants));
        meaning.push((j, false));
        let sh: Vec<EpsSeries> = o.iter().map(EpsSeries::shift).collect();
        if !sh.iter().all(EpsSeries::is_zero) {
            cols.push(flux_vector(&sh, constants));
            meaning.push((j, true));
        }
    }
    let first_const = cols.len();
    let mut const_keys = Vec::new();
    for (i, s) in computed.iter().enumerate() {
        for k in 0..=s.order() as usize {
            let mut v = BTreeMap::new();
            v.insert((i, k, Expr::one()), Expr::one());
            cols.push(v);
            const_keys.push((i, k));
        }
    }
    let kernel = column_kernel(&cols)?;
    let Some(row) = kernel.into_iter().find(|r| r.keys().next() == Some(&0)) else {
        return Ok(None);
    };
    let lead = row[&0].clone();
    let norm = |c: &Expr| -(c / &lead);
    let Some(g) = row.get(&1) else { return Ok(None) };
    Ok(Some(GoldenMatch {
        scale: norm(g),
        others: row
            .iter()
            .filter(|(c, _)| **c >= 2 && **c < first_const)
            .map(|(c, v)| (meaning[c - 2].0, meaning[c - 2].1, norm(v)))
            .collect(),
        constants: row
            .iter()
            .filter(|(c, _)| **c >= first_const)
            .map(|(c, v)| (const_keys[c - first_const], norm(v)))
            .collect(),
    }))
}

//! Discovery of approximate variational symmetries over a finite ansatz.
//!
//! Every family member `ξ_(k)i`, `η_(k)α`, `φ^i_(k)` is a linear combination
//! of declared basis functions of `(x, u_(0))`. The residual is linear in the
//! coefficients, so it is computed once per basis element (in parallel) and
//! separated on monomials in the non-constant atoms.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::expr::{parse_with, to_latex, Expr, ExprError, Node, Q};
use crate::jet::JetSpace;
use crate::linalg::{self, separate, LinalgError, Row};
use crate::noether::{variational_residual, GaugeTerm, NoetherError, PerturbedLagrangian};
use crate::perturb::{build_infinitesimals, EpsSeries, Family, PerturbError};
use crate::symmetry::{ApproximateGenerator, SymmetryError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetermineError {
    #[error("no ansatz declared for `{0}`")]
    AnsatzIncomplete(String),
    #[error("ansatz for `{0}` is linearly dependent")]
    AnsatzDependent(String),
    #[error("ansatz element `{element}` for `{key}` may only depend on the independent variables and order-0 coordinates")]
    InvalidBasis { key: String, element: String },
    #[error("cannot parse ansatz element for `{key}`: {source}")]
    Parse { key: String, source: ExprError },
    #[error(transparent)]
    Noether(#[from] NoetherError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// Which infinitesimal a family member belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Xi(usize),
    Eta(usize),
    Phi(usize),
}

impl Slot {
    pub fn kind(self) -> &'static str {
        match self {
            Slot::Xi(_) => "xi",
            Slot::Eta(_) => "eta",
            Slot::Phi(_) => "phi",
        }
    }

    fn component<'a>(self, space: &'a JetSpace) -> &'a str {
        match self {
            Slot::Xi(i) | Slot::Phi(i) => &space.independent[i],
            Slot::Eta(a) => &space.dependent[a],
        }
    }

    fn all(space: &JetSpace) -> Vec<Slot> {
        (0..space.n())
            .map(Slot::Xi)
            .chain((0..space.m()).map(Slot::Eta))
            .chain((0..space.n()).map(Slot::Phi))
            .collect()
    }
}

/// One unknown coefficient: basis element `j` of member `(slot, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub slot: Slot,
    pub k: u32,
    pub j: usize,
    pub name: String,
}

/// Declared basis functions for every family member.
#[derive(Debug, Clone)]
pub struct AnsatzSpace {
    pub space: JetSpace,
    pub constants: BTreeSet<String>,
    pub basis: BTreeMap<(Slot, u32), Vec<Expr>>,
}

/// Monomials of degree `<= d` in `vars`, by increasing degree.
fn monomials(vars: &[Expr], d: u32) -> Vec<Expr> {
    let mut out = vec![Expr::one()];
    let mut layer: Vec<(usize, Expr)> = vec![(0, Expr::one())];
    for _ in 0..d {
        let mut next = Vec::new();
        for (start, m) in &layer {
            for (i, v) in vars.iter().enumerate().skip(*start) {
                next.push((i, m * v));
            }
        }
        out.extend(next.iter().map(|(_, m)| m.clone()));
        layer = next;
    }
    out
}

/// Functions of one independent variable in the default ansatz.
fn default_x_part(x: &Expr, oscillatory: bool) -> Vec<Expr> {
    let mut out = vec![Expr::one(), x.clone(), x.powi(2)];
    if oscillatory {
        let two_x = x.scale(&Q::from_integer(2.into()));
        out.extend([
            Expr::sin(x.clone()),
            Expr::cos(x.clone()),
            Expr::sin(two_x.clone()),
            Expr::cos(two_x),
            x * &Expr::sin(x.clone()),
            x * &Expr::cos(x.clone()),
        ]);
    }
    out
}

impl AnsatzSpace {
    /// Default ansatz: `{1, x, x²}` (plus `sin`, `cos` of `x` and `2x` and
    /// `x sin x`, `x cos x` when oscillatory) per independent variable, times
    /// `u_(0)` monomials of degree `<= 2` for ξ, η and `<= 3` for φ (without
    /// the constant, which only adds a trivial gauge).
    pub fn default_for(space: &JetSpace, constants: BTreeSet<String>, oscillatory: bool) -> Self {
        let mut x_part = vec![Expr::one()];
        for i in 0..space.n() {
            let f = default_x_part(&space.x(i), oscillatory);
            x_part = x_part.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect();
        }
        let u0: Vec<Expr> = (0..space.m()).map(|a| space.coord(a, 0)).collect();
        let tensor = |d: u32, skip_one: bool| -> Vec<Expr> {
            let us = monomials(&u0, d);
            let mut v = Vec::new();
            for m in &us {
                for f in &x_part {
                    if skip_one && m.is_one() && f.is_one() {
                        continue;
                    }
                    v.push(f * m);
                }
            }
            v
        };
        let mut basis = BTreeMap::new();
        for slot in Slot::all(space) {
            let b = match slot {
                Slot::Phi(_) => tensor(3, true),
                _ => tensor(2, false),
            };
            for k in 0..=space.order {
                basis.insert((slot, k), b.clone());
            }
        }
        AnsatzSpace {
            space: space.clone(),
            constants,
            basis,
        }
    }

    /// All members identically zero.
    pub fn empty(space: &JetSpace) -> Self {
        let basis = Slot::all(space)
            .into_iter()
            .flat_map(|s| (0..=space.order).map(move |k| ((s, k), Vec::new())))
            .collect();
        AnsatzSpace {
            space: space.clone(),
            constants: BTreeSet::new(),
            basis,
        }
    }

    /// From keys such as `"xi0"`, `"eta1"`, `"phi1"`; `"eta1.v"` overrides
    /// one component.
    pub fn from_spec(
        space: &JetSpace,
        constants: BTreeSet<String>,
        spec: &BTreeMap<String, Vec<String>>,
    ) -> Result<Self, DetermineError> {
        let names: Vec<String> = constants.iter().cloned().collect();
        let ctx = space.context(&names);
        let mut basis = BTreeMap::new();
        for slot in Slot::all(space) {
            for k in 0..=space.order {
                let general = format!("{}{k}", slot.kind());
                let specific = format!("{general}.{}", slot.component(space));
                let (key, list) = spec
                    .get_key_value(&specific)
                    .or_else(|| spec.get_key_value(&general))
                    .ok_or_else(|| DetermineError::AnsatzIncomplete(specific.clone()))?;
                let parsed = list
                    .iter()
                    .map(|s| {
                        parse_with(s, &ctx).map_err(|source| DetermineError::Parse {
                            key: key.clone(),
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                basis.insert((slot, k), parsed);
            }
        }
        let a = AnsatzSpace {
            space: space.clone(),
            constants,
            basis,
        };
        a.validate()?;
        Ok(a)
    }

    /// Basis elements depend on `(x, u_(0))` only and are independent.
    pub fn validate(&self) -> Result<(), DetermineError> {
        for ((slot, k), b) in &self.basis {
            let key = format!("{}{k}.{}", slot.kind(), slot.component(&self.space));
            for e in b {
                let bad_jet = e.jets().iter().any(|j| j.order != Some(0) || j.derivative_order() > 0);
                let bad_sym = e.symbols().iter().any(|s| {
                    !self.constants.contains(s) && self.space.index_of_independent(s).is_none()
                });
                if bad_jet || bad_sym {
                    return Err(DetermineError::InvalidBasis {
                        key,
                        element: e.to_string(),
                    });
                }
            }
            let mut index = BTreeMap::new();
            let rows: Vec<Row> = b
                .iter()
                .map(|e| {
                    separate(e, &self.constants)
                        .into_iter()
                        .map(|(m, c)| {
                            let n = index.len();
                            (*index.entry(m).or_insert(n), c)
                        })
                        .collect()
                })
                .collect();
            if linalg::rref(rows, index.len())?.rank() != b.len() {
                return Err(DetermineError::AnsatzDependent(key));
            }
        }
        Ok(())
    }

    /// Unknown coefficients in their fixed order: ε-order, then slot, then
    /// basis index.
    pub fn columns(&self) -> Vec<Column> {
        let mut cols = Vec::new();
        for k in 0..=self.space.order {
            for slot in Slot::all(&self.space) {
                let n = self.basis.get(&(slot, k)).map_or(0, Vec::len);
                for j in 0..n {
                    let name = format!("c_{}_{}_{k}_{j:03}", slot.kind(), slot.component(&self.space));
                    cols.push(Column { slot, k, j, name });
                }
            }
        }
        cols
    }

    /// Family members `Σ_j v_j b_j` for a coefficient vector.
    fn members(&self, cols: &[Column], v: &Row) -> BTreeMap<(Slot, u32), Expr> {
        let mut out: BTreeMap<(Slot, u32), Vec<Expr>> = BTreeMap::new();
        for (c, x) in v {
            let col = &cols[*c];
            out.entry((col.slot, col.k))
                .or_default()
                .push(x * &self.basis[&(col.slot, col.k)][col.j]);
        }
        out.into_iter().map(|(k, v)| (k, Expr::sum(v))).collect()
    }

    /// Generator and gauge whose family members are the given expressions.
    pub fn instantiate(
        &self,
        members: &BTreeMap<(Slot, u32), Expr>,
    ) -> Result<(ApproximateGenerator, GaugeTerm), DetermineError> {
        let s = &self.space;
        let series = |slot: Slot| -> Result<EpsSeries, DetermineError> {
            let m: Vec<Expr> = (0..=s.order)
                .map(|k| members.get(&(slot, k)).cloned().unwrap_or_else(Expr::zero))
                .collect();
            if m.iter().all(Expr::is_zero_literal) {
                return Ok(EpsSeries::zero(s.order));
            }
            let name = format!("{}_{}", slot.kind(), slot.component(s));
            Ok(build_infinitesimals(&Family::fixed(&name, m), s)?)
        };
        let xi = (0..s.n()).map(|i| series(Slot::Xi(i))).collect::<Result<_, _>>()?;
        let eta = (0..s.m()).map(|a| series(Slot::Eta(a))).collect::<Result<_, _>>()?;
        let phi = (0..s.n()).map(|i| series(Slot::Phi(i))).collect::<Result<_, _>>()?;
        Ok((ApproximateGenerator::new(s.clone(), xi, eta)?, GaugeTerm::new(phi)?))
    }

    /// Family members of a given generator and gauge, inverting the
    /// recursion: `f_(k) = k! (f̃_(k) − [f̃_(k) built with f_(k) = 0])`.
    pub fn recover_members(
        &self,
        g: &ApproximateGenerator,
        phi: &GaugeTerm,
    ) -> Result<BTreeMap<(Slot, u32), Expr>, DetermineError> {
        let s = &self.space;
        let mut out = BTreeMap::new();
        for slot in Slot::all(s) {
            let target = match slot {
                Slot::Xi(i) => &g.xi[i],
                Slot::Eta(a) => &g.eta[a],
                Slot::Phi(i) => &phi.phi[i],
            };
            let name = format!("{}_{}", slot.kind(), slot.component(s));
            let mut known: Vec<Expr> = Vec::new();
            let mut fact = Q::from_integer(1.into());
            for k in 0..=s.order {
                if k > 0 {
                    fact *= Q::from_integer(k.into());
                }
                let mut m = known.clone();
                m.resize(s.order as usize + 1, Expr::zero());
                let built = build_infinitesimals(&Family::fixed(&name, m), s)?;
                let member = (target.get(k as usize) - built.get(k as usize)).scale(&fact);
                out.insert((slot, k), member.clone());
                known.push(member);
            }
        }
        Ok(out)
    }
}

/// One determining equation: the coefficient of `monomial` at ε-order
/// `order`, as a row over the unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub order: usize,
    pub monomial: Expr,
    pub row: Row,
}

impl Equation {
    /// The jet-derivative factor of the monomial (its provenance).
    pub fn jet_monomial(&self) -> Expr {
        Expr::product(
            self.monomial
                .terms()
                .iter()
                .flat_map(|t| t.factors.clone())
                .filter(|f| f.base.as_jet().is_some_and(|j| j.derivative_order() > 0))
                .map(|f| f.base.pow(&f.exp)),
        )
    }
}

#[derive(Debug, Clone)]
pub struct DeterminingSystem {
    pub unknowns: Vec<String>,
    pub equations: Vec<Equation>,
}

impl DeterminingSystem {
    /// Equation `i` as an expression in the unknown symbols.
    pub fn equation_expr(&self, i: usize) -> Expr {
        Expr::sum(
            self.equations[i]
                .row
                .iter()
                .map(|(c, x)| x * &Expr::sym(&self.unknowns[*c])),
        )
    }

    /// One line per equation: `[order k | jet monomial | monomial] expr = 0`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (i, e) in self.equations.iter().enumerate() {
            s.push_str(&format!(
                "[eps^{} | {} | {}] {} = 0\n",
                e.order,
                e.jet_monomial(),
                e.monomial,
                self.equation_expr(i)
            ));
        }
        s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "unknowns": self.unknowns,
            "equations": self.equations.iter().enumerate().map(|(i, e)| json!({
                "order": e.order,
                "jet_monomial": e.jet_monomial().to_string(),
                "monomial": e.monomial.to_string(),
                "equation": self.equation_expr(i).to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Separate the residual of every basis element; one equation per
/// `(ε-order, monomial)` cell.
pub fn extract(l: &PerturbedLagrangian, ansatz: &AnsatzSpace) -> Result<DeterminingSystem, DetermineError> {
    let cols = ansatz.columns();
    let mut constants = ansatz.constants.clone();
    constants.extend(l.constants.iter().cloned());
    let images = cols
        .par_iter()
        .map(|col| -> Result<Vec<(usize, Expr, Expr)>, DetermineError> {
            let members = BTreeMap::from([((col.slot, col.k), ansatz.basis[&(col.slot, col.k)][col.j].clone())]);
            let (g, phi) = ansatz.instantiate(&members)?;
            let r = variational_residual(&g, l, &phi)?;
            Ok(r.coeffs()
                .iter()
                .enumerate()
                .flat_map(|(k, c)| separate(c, &constants).into_iter().map(move |(m, x)| (k, m, x)))
                .collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut cells: BTreeMap<(usize, Expr), Row> = BTreeMap::new();
    for (c, image) in images.into_iter().enumerate() {
        for (k, m, x) in image {
            cells.entry((k, m)).or_default().insert(c, x);
        }
    }
    Ok(DeterminingSystem {
        unknowns: cols.into_iter().map(|c| c.name).collect(),
        equations: cells
            .into_iter()
            .map(|((order, monomial), row)| Equation { order, monomial, row })
            .collect(),
    })
}

/// Basis of the solution space of the (homogeneous) determining system.
pub fn solve(sys: &DeterminingSystem) -> Result<Vec<Row>, DetermineError> {
    let rows = sys.equations.iter().map(|e| e.row.clone()).collect();
    Ok(linalg::rref(rows, sys.unknowns.len())?.kernel())
}

/// A discovered generator with its gauge and ansatz coordinates.
#[derive(Debug, Clone)]
pub struct Solution {
    pub coords: Row,
    pub generator: ApproximateGenerator,
    pub gauge: GaugeTerm,
}

impl Solution {
    pub fn to_json(&self) -> Value {
        let mut v = self.generator.to_json();
        let order = self.generator.space.order as usize;
        v["phi"] = json!((0..=order)
            .map(|k| self.gauge.phi.iter().map(|s| s.get(k).to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>());
        v
    }

    pub fn gauge_text(&self) -> String {
        let order = self.generator.space.order as usize;
        (0..=order)
            .map(|k| {
                let parts: Vec<String> = self.gauge.phi.iter().map(|s| s.get(k).to_string()).collect();
                format!("phi_({k}) = {}", parts.join(", "))
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn to_latex(&self) -> String {
        let s = &self.generator.space;
        let mut parts = Vec::new();
        let comps = s.independent.iter().zip(&self.generator.xi).chain(s.dependent.iter().zip(&self.generator.eta));
        for (name, ser) in comps {
            let e = ser.to_expr();
            if !e.is_zero_literal() {
                parts.push(format!("\\left({}\\right)\\frac{{\\partial}}{{\\partial {name}}}", to_latex(&e)));
            }
        }
        let gen = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
        let phi: Vec<String> = (0..=s.order as usize)
            .map(|k| {
                let v: Vec<String> = self.gauge.phi.iter().map(|p| to_latex(p.get(k))).collect();
                format!("\\phi_{{({k})}} = {}", v.join(",\\ "))
            })
            .collect();
        format!("{gen},\\quad {}", phi.join(",\\ "))
    }
}

/// Canonical basis: reduced row echelon form of the solution vectors in
/// the fixed unknown order, leading coefficients normalized to 1.
pub fn report(ansatz: &AnsatzSpace, solutions: &[Row]) -> Result<Vec<Solution>, DetermineError> {
    let cols = ansatz.columns();
    let ech = linalg::rref(solutions.to_vec(), cols.len())?;
    ech.rows
        .into_iter()
        .map(|(_, coords)| {
            let (generator, gauge) = ansatz.instantiate(&ansatz.members(&cols, &coords))?;
            Ok(Solution {
                coords,
                generator,
                gauge,
            })
        })
        .collect()
}

/// Whether a generator with gauge lies in the span of the given solutions,
/// compared through their family members.
pub fn in_solution_span(
    ansatz: &AnsatzSpace,
    solutions: &[Row],
    g: &ApproximateGenerator,
    phi: &GaugeTerm,
) -> Result<bool, DetermineError> {
    let cols = ansatz.columns();
    let mut index: BTreeMap<(Slot, u32, Expr), usize> = BTreeMap::new();
    let mut to_row = |members: &BTreeMap<(Slot, u32), Expr>| -> Row {
        let mut row = Row::new();
        for ((slot, k), e) in members {
            for (m, c) in separate(e, &ansatz.constants) {
                let n = index.len();
                let col = *index.entry((*slot, *k, m)).or_insert(n);
                row.insert(col, c);
            }
        }
        row
    };
    let basis: Vec<Row> = solutions.iter().map(|v| to_row(&ansatz.members(&cols, v))).collect();
    let target = to_row(&ansatz.recover_members(g, phi)?);
    Ok(linalg::in_span(&basis, &target, index.len())?)
}

/// `true` for a symbol that is one of the generated unknowns.
pub fn is_unknown(e: &Expr) -> bool {
    matches!(e.node(), Node::Sym(s) if s.starts_with("c_"))
}


#[cfg(test)]
mod oscillator {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn arbitrary_f_dimension() {
        let space = JetSpace::ode(&["u"], 1);
        let l = PerturbedLagrangian::from_source(space.clone(), &parse("1/2*(du#t^2 - u^2) - eps*Int(F,u)").unwrap()).unwrap();
        let a = AnsatzSpace::default_for(&space, BTreeSet::new(), true);
        let sys = extract(&l, &a).unwrap();
        let sol = solve(&sys).unwrap();
        assert_eq!(sol.len(), 6);
    }
}

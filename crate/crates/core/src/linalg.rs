//! Exact sparse linear algebra over the field generated by declared
//! constants, with entries held as canonical expressions.
//!
//! Constants are treated as independent transcendentals, so a nonzero
//! polynomial in them is a valid pivot. Division is only performed by
//! monomials; other pivots are eliminated fraction-free.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;

use crate::expr::{is_zero, Expr, Node, Term, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("cannot decide whether pivot `{0}` vanishes; add an assumption for it")]
    SymbolicPivotAmbiguity(String),
    #[error("expression is not linear in the unknowns: `{0}`")]
    NotLinear(String),
}

/// Sparse row: column → nonzero coefficient.
pub type Row = BTreeMap<usize, Expr>;

/// Whether `e` depends only on the given constant symbols.
pub fn is_constant_expr(e: &Expr, constants: &BTreeSet<String>) -> bool {
    !e.any(&|x| match x.node() {
        Node::Sym(s) => !constants.contains(&**s),
        Node::Jet(_) | Node::Apply(_) | Node::Integral(_) => true,
        _ => false,
    })
}

/// Single-term expression: invertible without creating a sum denominator.
pub fn is_unit(e: &Expr) -> bool {
    !e.is_zero_literal()
        && match e.node() {
            Node::Poly(ts) => ts.len() == 1 && ts[0].factors.iter().all(|f| !matches!(f.base.node(), Node::Poly(_))),
            _ => true,
        }
}

/// Split a term into its constant part and the remaining monomial.
fn split_term(t: &Term, constants: &BTreeSet<String>) -> (Expr, Expr) {
    let mut konst = Term {
        factors: Vec::new(),
        coef: t.coef.clone(),
    };
    let mut rest = Term {
        factors: Vec::new(),
        coef: One::one(),
    };
    for f in &t.factors {
        if is_constant_expr(&f.base, constants) {
            konst.factors.push(f.clone());
        } else {
            rest.factors.push(f.clone());
        }
    }
    (konst.to_expr(), rest.to_expr())
}

/// Coefficients of `e` on monomials in its non-constant atoms.
pub fn separate(e: &Expr, constants: &BTreeSet<String>) -> BTreeMap<Expr, Expr> {
    let mut out: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
    for t in e.terms().iter() {
        let (k, m) = split_term(t, constants);
        out.entry(m).or_default().push(k);
    }
    out.into_iter()
        .map(|(m, ks)| (m, Expr::sum(ks)))
        .filter(|(_, c)| !c.is_zero_literal())
        .collect()
}

/// Split an expression linear in the unknown symbols into one row per
/// non-constant monomial. `unknowns` maps symbol name → column.
pub fn separate_linear(
    e: &Expr,
    unknowns: &BTreeMap<String, usize>,
    constants: &BTreeSet<String>,
) -> Result<BTreeMap<Expr, Row>, LinalgError> {
    let mut cells: BTreeMap<Expr, BTreeMap<usize, Vec<Expr>>> = BTreeMap::new();
    for t in e.terms().iter() {
        let mut col = None;
        let mut rest = Term {
            factors: Vec::new(),
            coef: t.coef.clone(),
        };
        for f in &t.factors {
            if let Some(&c) = f.base.as_sym().and_then(|s| unknowns.get(s)) {
                if col.is_some() || !f.exp.is_one() {
                    return Err(LinalgError::NotLinear(t.to_expr().to_string()));
                }
                col = Some(c);
            } else {
                rest.factors.push(f.clone());
            }
        }
        let Some(col) = col else {
            return Err(LinalgError::NotLinear(t.to_expr().to_string()));
        };
        let (k, m) = split_term(&rest, constants);
        cells.entry(m).or_default().entry(col).or_default().push(k);
    }
    Ok(cells
        .into_iter()
        .map(|(m, row)| {
            let row: Row = row
                .into_iter()
                .map(|(c, ks)| (c, Expr::sum(ks)))
                .filter(|(_, v)| !v.is_zero_literal())
                .collect();
            (m, row)
        })
        .filter(|(_, r)| !r.is_empty())
        .collect())
}

fn nonzero(e: &Expr) -> Result<bool, LinalgError> {
    match is_zero(e) {
        Verdict::Zero => Ok(false),
        Verdict::NonZero => Ok(true),
        Verdict::Unknown => Err(LinalgError::SymbolicPivotAmbiguity(e.to_string())),
    }
}

fn axpy(target: &mut Row, scale_target: &Expr, a: &Expr, src: &Row) {
    // target := scale_target * target - a * src
    let mut out = Row::new();
    let keys: BTreeSet<usize> = target.keys().chain(src.keys()).copied().collect();
    for k in keys {
        let t = target.get(&k).map(|v| v * scale_target).unwrap_or_else(Expr::zero);
        let s = src.get(&k).map(|v| a * v).unwrap_or_else(Expr::zero);
        let v = &t - &s;
        if !v.is_zero_literal() {
            out.insert(k, v);
        }
    }
    *target = out;
}

/// Reduced echelon form: pivot rows with zeros in all other pivot columns.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub ncols: usize,
    /// `(pivot column, row)`, sorted by pivot column.
    pub rows: Vec<(usize, Row)>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_columns(&self) -> BTreeSet<usize> {
        self.rows.iter().map(|(c, _)| *c).collect()
    }

    /// Kernel basis, one vector per free column, fraction-free.
    pub fn kernel(&self) -> Vec<Row> {
        let pivots = self.pivot_columns();
        let mut out = Vec::new();
        for f in (0..self.ncols).filter(|c| !pivots.contains(c)) {
            let involved: Vec<&(usize, Row)> = self.rows.iter().filter(|(_, r)| r.contains_key(&f)).collect();
            let non_unit: Vec<usize> = involved
                .iter()
                .enumerate()
                .filter(|(_, (c, r))| !is_unit(&r[c]))
                .map(|(i, _)| i)
                .collect();
            let product_except = |skip: Option<usize>| {
                Expr::product(
                    non_unit
                        .iter()
                        .filter(|&&i| Some(i) != skip)
                        .map(|&i| involved[i].1[&involved[i].0].clone()),
                )
            };
            let denom = product_except(None);
            let mut v = Row::new();
            v.insert(f, denom.clone());
            for (i, (c, r)) in involved.iter().enumerate() {
                let lead = &r[c];
                let val = if is_unit(lead) {
                    -(&(&r[&f] * &denom) * &lead.recip())
                } else {
                    -(&r[&f] * &product_except(Some(i)))
                };
                if !val.is_zero_literal() {
                    v.insert(*c, val);
                }
            }
            out.push(v);
        }
        out
    }
}

/// Gauss–Jordan elimination. Rows are normalized to leading coefficient 1
/// whenever the pivot is a monomial.
pub fn rref(rows: Vec<Row>, ncols: usize) -> Result<Echelon, LinalgError> {
    let mut pending: Vec<Row> = rows.into_iter().filter(|r| !r.is_empty()).collect();
    let mut done: Vec<(usize, Row)> = Vec::new();
    for col in 0..ncols {
        let mut best: Option<(usize, bool, usize)> = None; // (index, unit, size)
        for (i, r) in pending.iter().enumerate() {
            let Some(v) = r.get(&col) else { continue };
            if !nonzero(v)? {
                continue;
            }
            let unit = is_unit(v);
            let size = v.len() * 1000 + r.len();
            let better = match best {
                None => true,
                Some((_, bu, bs)) => (unit && !bu) || (unit == bu && size < bs),
            };
            if better {
                best = Some((i, unit, size));
            }
        }
        let Some((idx, unit, _)) = best else { continue };
        let mut prow = pending.swap_remove(idx);
        if unit {
            let inv = prow[&col].recip();
            for v in prow.values_mut() {
                *v = &*v * &inv;
            }
        }
        let lead = prow[&col].clone();
        let one = Expr::one();
        for r in pending.iter_mut().chain(done.iter_mut().map(|(_, r)| r)) {
            let Some(a) = r.get(&col).cloned() else { continue };
            if lead.is_one() {
                axpy(r, &one, &a, &prow);
            } else {
                axpy(r, &lead, &a, &prow);
            }
        }
        pending.retain(|r| !r.is_empty());
        done.push((col, prow));
    }
    // Renormalize rows whose leading coefficient became a unit again.
    for (c, r) in done.iter_mut() {
        let lead = r[c].clone();
        if !lead.is_one() && is_unit(&lead) {
            let inv = lead.recip();
            for v in r.values_mut() {
                *v = &*v * &inv;
            }
        }
    }
    done.sort_by_key(|(c, _)| *c);
    Ok(Echelon { ncols, rows: done })
}

/// Whether `v` lies in the span of `basis` (rank test).
pub fn in_span(basis: &[Row], v: &Row, ncols: usize) -> Result<bool, LinalgError> {
    let r0 = rref(basis.to_vec(), ncols)?.rank();
    let mut all = basis.to_vec();
    all.push(v.clone());
    Ok(rref(all, ncols)?.rank() == r0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn row(entries: &[(usize, &str)]) -> Row {
        entries.iter().map(|(c, s)| (*c, p(s))).collect()
    }

    #[test]
    fn unique_zero_solution() {
        let e = rref(vec![row(&[(0, "1"), (1, "1")]), row(&[(0, "1"), (1, "-1")])], 2).unwrap();
        assert_eq!(e.rank(), 2);
        assert!(e.kernel().is_empty());
    }

    #[test]
    fn kernel_over_symbolic_constants() {
        // m1*m2*a - (m1+m2)*b + c = 0
        let e = rref(vec![row(&[(0, "m1*m2"), (1, "-(m1+m2)"), (2, "1")])], 3).unwrap();
        let k = e.kernel();
        assert_eq!(k.len(), 2);
        let target = row(&[(0, "1"), (2, "-m1*m2")]);
        assert!(in_span(&k, &target, 3).unwrap());
    }

    #[test]
    fn non_unit_pivot_is_fraction_free() {
        let e = rref(
            vec![row(&[(0, "a+1"), (1, "1")]), row(&[(0, "a"), (1, "1"), (2, "1")])],
            3,
        )
        .unwrap();
        for v in e.kernel() {
            for r in [row(&[(0, "a+1"), (1, "1")]), row(&[(0, "a"), (1, "1"), (2, "1")])] {
                let dot = Expr::sum(r.iter().map(|(c, x)| x * v.get(c).unwrap_or(&Expr::zero())));
                assert!(dot.is_zero_literal());
            }
        }
    }

    #[test]
    fn ambiguous_pivot_is_reported() {
        let r = rref(vec![row(&[(0, "exp(a) - 1")])], 1);
        assert!(matches!(r, Err(LinalgError::SymbolicPivotAmbiguity(_))));
    }

    #[test]
    fn separation_on_monomials() {
        let consts: BTreeSet<String> = ["delta".to_string()].into();
        let m = separate(&p("delta*t*u0 + 2*t*u0 + 3*delta"), &consts);
        assert_eq!(m[&p("t*u0")], p("delta + 2"));
        assert_eq!(m[&p("1")], p("3*delta"));
        let unknowns: BTreeMap<String, usize> = [("c0".to_string(), 0), ("c1".to_string(), 1)].into();
        let rows = separate_linear(&p("c0*sin(t) + delta*c1*sin(t) - c1*u0"), &unknowns, &consts).unwrap();
        assert_eq!(rows[&p("sin(t)")], row(&[(0, "1"), (1, "delta")]));
        assert_eq!(rows[&p("u0")], row(&[(1, "-1")]));
        assert!(separate_linear(&p("c0*c1"), &unknowns, &consts).is_err());
    }
}

//! Text, LaTeX and JSON renderings. The text form parses back to the same
//! canonical expression.

use std::fmt;

use num_traits::{One, Signed};
use serde_json::{json, Value};

use super::{q_is_integer, Expr, Factor, JetVar, Node, Term, Q};

fn jet_core(j: &JetVar) -> String {
    match j.order {
        None => j.base.to_string(),
        Some(k) if j.base.ends_with(|c: char| c.is_ascii_digit()) => format!("{}_{k}", j.base),
        Some(k) => format!("{}{k}", j.base),
    }
}

fn jet_text(j: &JetVar) -> String {
    let mut s = "d".repeat(j.derivs.len());
    s.push_str(&jet_core(j));
    for d in &j.derivs {
        s.push('#');
        s.push_str(d);
    }
    s
}

fn write_q(f: &mut fmt::Formatter<'_>, q: &Q) -> fmt::Result {
    if q_is_integer(q) {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Expr]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

fn write_atom(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Num(q) => write_q(f, q),
        Node::Sym(s) => f.write_str(s),
        Node::Jet(j) => f.write_str(&jet_text(j)),
        Node::Fun(k, a) => write!(f, "{}({a})", k.name()),
        Node::Apply(app) => {
            f.write_str(&app.name)?;
            if let Some(k) = app.family {
                write!(f, "[{k}]")?;
            }
            if app.derivs.iter().any(|&d| d > 0) {
                if app.args.len() == 1 {
                    f.write_str(&"'".repeat(app.derivs[0] as usize))?;
                } else {
                    let idx: Vec<String> = app.derivs.iter().map(u32::to_string).collect();
                    write!(f, "{{{}}}", idx.join(","))?;
                }
            }
            f.write_str("(")?;
            write_args(f, &app.args)?;
            f.write_str(")")
        }
        Node::Integral(int) => {
            write!(f, "Int({}", int.name)?;
            if let Some(k) = int.family {
                write!(f, "[{k}]")?;
            }
            write!(f, ",{})", int.arg)
        }
        Node::Poly(_) => write!(f, "({e})"),
    }
}

fn write_factor(f: &mut fmt::Formatter<'_>, fac: &Factor) -> fmt::Result {
    match fac.base.node() {
        Node::Num(q) if !q_is_integer(q) || q.is_negative() => {
            f.write_str("(")?;
            write_q(f, q)?;
            f.write_str(")")?;
        }
        _ => write_atom(f, &fac.base)?,
    }
    if !fac.exp.is_one() {
        if q_is_integer(&fac.exp) && fac.exp.is_positive() {
            write!(f, "^{}", fac.exp.numer())?;
        } else {
            f.write_str("^(")?;
            write_q(f, &fac.exp)?;
            f.write_str(")")?;
        }
    }
    Ok(())
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, first: bool) -> fmt::Result {
    let neg = t.coef.is_negative();
    match (first, neg) {
        (true, true) => f.write_str("-")?,
        (false, true) => f.write_str(" - ")?,
        (false, false) => f.write_str(" + ")?,
        (true, false) => {}
    }
    let mag = t.coef.abs();
    let mut sep = false;
    if !mag.is_one() || t.factors.is_empty() {
        write_q(f, &mag)?;
        sep = true;
    }
    for fac in &t.factors {
        if sep {
            f.write_str("*")?;
        }
        write_factor(f, fac)?;
        sep = true;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Poly(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    write_term(f, t, i == 0)?;
                }
                Ok(())
            }
            _ => write_atom(f, self),
        }
    }
}

// ---------------------------------------------------------------- LaTeX

fn latex_q(q: &Q) -> String {
    if q_is_integer(q) {
        q.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", q.numer(), q.denom())
    }
}

fn latex_name(s: &str) -> String {
    const GREEK: &[&str] = &[
        "alpha", "beta", "gamma", "delta", "epsilon", "kappa", "lambda", "mu", "nu", "xi", "pi",
        "rho", "sigma", "tau", "phi", "chi", "psi", "omega", "eta", "theta", "zeta",
    ];
    if s == super::EPS {
        return "\\varepsilon".into();
    }
    if GREEK.contains(&s) {
        return format!("\\{s}");
    }
    let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
    let (head, digits) = s.split_at(split);
    let head = if head.chars().count() > 1 {
        format!("\\mathrm{{{head}}}")
    } else {
        head.to_string()
    };
    if digits.is_empty() {
        head
    } else {
        format!("{head}_{{{digits}}}")
    }
}

fn latex_jet(j: &JetVar) -> String {
    let base = latex_name(&j.base);
    let n = j.derivs.len();
    let all_t = j.derivs.iter().all(|d| &**d == "t");
    let body = if all_t && n == 1 {
        format!("\\dot{{{base}}}")
    } else if all_t && n == 2 {
        format!("\\ddot{{{base}}}")
    } else {
        base
    };
    let mut sub = Vec::new();
    if let Some(k) = j.order {
        sub.push(format!("({k})"));
    }
    if !(all_t && n <= 2) {
        sub.push(j.derivs.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(""));
    }
    sub.retain(|s| !s.is_empty());
    if sub.is_empty() {
        body
    } else {
        format!("{body}_{{{}}}", sub.join(","))
    }
}

fn latex_atom(e: &Expr) -> String {
    match e.node() {
        Node::Num(q) => latex_q(q),
        Node::Sym(s) => latex_name(s),
        Node::Jet(j) => latex_jet(j),
        Node::Fun(k, a) => format!("\\{}\\left({}\\right)", k.name(), to_latex(a)),
        Node::Apply(app) => {
            let mut s = latex_name(&app.name);
            if let Some(k) = app.family {
                s = format!("{s}_{{({k})}}");
            }
            if app.derivs.iter().any(|&d| d > 0) {
                if app.args.len() == 1 {
                    s.push_str(&"'".repeat(app.derivs[0] as usize));
                } else {
                    let idx: Vec<String> = app.derivs.iter().map(u32::to_string).collect();
                    s = format!("{s}^{{({})}}", idx.join(","));
                }
            }
            let args: Vec<String> = app.args.iter().map(to_latex).collect();
            format!("{s}\\left({}\\right)", args.join(", "))
        }
        Node::Integral(int) => {
            let mut name = latex_name(&int.name);
            if let Some(k) = int.family {
                name = format!("{name}_{{({k})}}");
            }
            format!("\\int^{{{}}} {name}(s)\\,ds", to_latex(&int.arg))
        }
        Node::Poly(_) => format!("\\left({}\\right)", to_latex(e)),
    }
}

fn latex_factor(fac: &Factor) -> String {
    let base = match fac.base.node() {
        Node::Num(q) if !q_is_integer(q) || q.is_negative() => format!("\\left({}\\right)", latex_q(q)),
        _ => latex_atom(&fac.base),
    };
    if fac.exp.is_one() {
        return base;
    }
    let base = if matches!(fac.base.node(), Node::Jet(_) | Node::Apply(_)) && base.contains('_') {
        format!("{{{base}}}")
    } else {
        base
    };
    if fac.exp == Q::new(1.into(), 2.into()) {
        return format!("\\sqrt{{{}}}", latex_atom(&fac.base));
    }
    let exp = if q_is_integer(&fac.exp) {
        fac.exp.numer().to_string()
    } else {
        format!("{}/{}", fac.exp.numer(), fac.exp.denom())
    };
    format!("{base}^{{{exp}}}")
}

/// LaTeX rendering.
pub fn to_latex(e: &Expr) -> String {
    let Node::Poly(ts) = e.node() else {
        return latex_atom(e);
    };
    let mut out = String::new();
    for (i, t) in ts.iter().enumerate() {
        let neg = t.coef.is_negative();
        out.push_str(match (i == 0, neg) {
            (true, true) => "-",
            (false, true) => " - ",
            (false, false) => " + ",
            (true, false) => "",
        });
        let mag = t.coef.abs();
        let mut parts = Vec::new();
        if !mag.is_one() || t.factors.is_empty() {
            parts.push(latex_q(&mag));
        }
        parts.extend(t.factors.iter().map(latex_factor));
        out.push_str(&parts.join(" "));
    }
    out
}

// ---------------------------------------------------------------- JSON

fn json_q(q: &Q) -> Value {
    json!({"op": "num", "value": if q_is_integer(q) { q.numer().to_string() } else { q.to_string() }})
}

/// Tree rendering as nested `{"op": ..., "args": [...]}` objects.
pub fn to_json(e: &Expr) -> Value {
    match e.node() {
        Node::Num(q) => json_q(q),
        Node::Sym(s) => json!({"op": "sym", "name": &**s}),
        Node::Jet(j) => json!({
            "op": "jet",
            "base": &*j.base,
            "order": j.order,
            "derivs": j.derivs.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        }),
        Node::Fun(k, a) => json!({"op": k.name(), "args": [to_json(a)]}),
        Node::Apply(app) => json!({
            "op": "apply",
            "name": &*app.name,
            "family": app.family,
            "derivs": app.derivs,
            "args": app.args.iter().map(to_json).collect::<Vec<_>>(),
        }),
        Node::Integral(int) => json!({
            "op": "antiderivative",
            "name": &*int.name,
            "family": int.family,
            "args": [to_json(&int.arg)],
        }),
        Node::Poly(ts) => {
            let terms: Vec<Value> = ts.iter().map(term_json).collect();
            if terms.len() == 1 {
                terms.into_iter().next().expect("one term")
            } else {
                json!({"op": "add", "args": terms})
            }
        }
    }
}

fn term_json(t: &Term) -> Value {
    let mut args = Vec::new();
    if !t.coef.is_one() {
        args.push(json_q(&t.coef));
    }
    for f in &t.factors {
        let base = to_json(&f.base);
        args.push(if f.exp.is_one() {
            base
        } else {
            json!({"op": "pow", "args": [base, json_q(&f.exp)]})
        });
    }
    if args.len() == 1 {
        args.pop().expect("one factor")
    } else {
        json!({"op": "mul", "args": args})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn round_trip(s: &str) {
        let e = parse(s).unwrap();
        let text = e.to_string();
        assert_eq!(parse(&text).unwrap(), e, "{s} -> {text}");
    }

    #[test]
    fn text_round_trips() {
        for s in [
            "1/2*(du0#t^2 - u0^2)",
            "-u0^(-3)*kappa + F'(u0)*eps",
            "(x^2+y^2)^(-1/2) - 3/4",
            "G{1,0}(t,u0) - xi[2](t,u0)*ddu1#t#t",
            "Int(F,u0) + sin(t)*cos(t)^2 + exp(2*t)",
            "2^(1/2)*u0",
            "-1",
        ] {
            round_trip(s);
        }
    }

    #[test]
    fn sum_prints_with_signs() {
        assert_eq!(parse("u0 - 2*v0").unwrap().to_string(), "u0 - 2*v0");
    }

    #[test]
    fn latex_uses_dots() {
        let l = to_latex(&parse("du0#t^2").unwrap());
        assert_eq!(l, "{\\dot{u}_{(0)}}^{2}");
        assert!(to_latex(&parse("eps*alpha").unwrap()).contains("\\varepsilon"));
    }

    #[test]
    fn json_tree_shape() {
        let v = to_json(&parse("u0 + 2*t").unwrap());
        assert_eq!(v["op"], "add");
        assert_eq!(v["args"].as_array().unwrap().len(), 2);
    }
}

//! Numerical validation: integrate the ε-hierarchy of Euler–Lagrange ODEs
//! with fixed-step RK4 and measure the drift of conserved quantities.

use std::collections::BTreeMap;
use std::io::Write;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::expr::{substitute, Bindings, Elementary, Expr, JetVar, Node};
use crate::jet::JetSpace;
use crate::models::Model;
use crate::noether::{NoetherError, PerturbedLagrangian};
use crate::perturb::EpsSeries;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("cannot solve the Euler-Lagrange hierarchy for its leading derivatives: {0}")]
    CannotSolveForLeadingDerivative(String),
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("numeric integration needs a single independent variable, found {0}")]
    NotAnOde(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unknown initial-state coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error(transparent)]
    Noether(#[from] NoetherError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Push(f64),
    Load(usize),
    Time,
    Add(usize),
    Mul(usize),
    Powi(i32),
    Powf(f64),
    Fun(Elementary),
}

/// A flat postfix program evaluating one expression at `(t, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
}

impl Program {
    pub fn eval(&self, t: f64, y: &[f64], stack: &mut Vec<f64>) -> f64 {
        stack.clear();
        for op in &self.ops {
            match *op {
                Op::Push(c) => stack.push(c),
                Op::Load(i) => stack.push(y[i]),
                Op::Time => stack.push(t),
                Op::Add(n) => {
                    let at = stack.len() - n;
                    let s = stack[at..].iter().sum();
                    stack.truncate(at);
                    stack.push(s);
                }
                Op::Mul(n) => {
                    let at = stack.len() - n;
                    let s = stack[at..].iter().product();
                    stack.truncate(at);
                    stack.push(s);
                }
                Op::Powi(n) => {
                    let b = stack.pop().expect("operand");
                    stack.push(b.powi(n));
                }
                Op::Powf(r) => {
                    let b = stack.pop().expect("operand");
                    stack.push(b.powf(r));
                }
                Op::Fun(f) => {
                    let a = stack.pop().expect("operand");
                    stack.push(match f {
                        Elementary::Sin => a.sin(),
                        Elementary::Cos => a.cos(),
                        Elementary::Exp => a.exp(),
                        Elementary::Log => a.ln(),
                    });
                }
            }
        }
        stack.pop().unwrap_or(0.0)
    }
}

/// Fixed time grid `t0, t0 + h, ..., t1`; `h` may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
}

impl Grid {
    pub fn new(t0: f64, t1: f64, h: f64) -> Self {
        Grid { t0, t1, h }
    }

    pub fn steps(&self) -> Result<usize, NumError> {
        let span = self.t1 - self.t0;
        if !(self.h.is_finite() && span.is_finite()) || self.h == 0.0 {
            return Err(NumError::InvalidGrid(format!("step {} over [{}, {}]", self.h, self.t0, self.t1)));
        }
        let n = span / self.h;
        if n < 0.0 {
            return Err(NumError::InvalidGrid("step points away from t1".into()));
        }
        let r = n.round();
        if (n - r).abs() > 1e-6 * r.max(1.0) {
            return Err(NumError::InvalidGrid(format!("step {} does not divide [{}, {}]", self.h, self.t0, self.t1)));
        }
        Ok(r as usize)
    }

    pub fn halved(&self) -> Grid {
        Grid { h: self.h / 2.0, ..*self }
    }

    pub fn reversed(&self) -> Grid {
        Grid { t0: self.t1, t1: self.t0, h: -self.h }
    }
}

/// First-order system for the state `(u_(k)α, u̇_(k)α)`, k-major.
#[derive(Debug, Clone)]
pub struct NumericModel {
    pub space: JetSpace,
    pub bindings: BTreeMap<String, f64>,
    /// State coordinate names, e.g. `u0`, `du0#t`.
    pub names: Vec<String>,
    /// Coordinates absent from the hierarchy; their acceleration is zero.
    pub undetermined: Vec<String>,
    slots: BTreeMap<JetVar, usize>,
    accel: Vec<Program>,
}

/// Solve the Euler–Lagrange hierarchy for the second derivatives and compile
/// the resulting right-hand side.
pub fn compile_numeric(l: &PerturbedLagrangian, bindings: &BTreeMap<String, f64>) -> Result<NumericModel, NumError> {
    let space = l.space.clone();
    if space.n() != 1 {
        return Err(NumError::NotAnOde(space.n()));
    }
    let rules = l.on_shell_rules().map_err(|e| match e {
        NoetherError::CannotSolveForLeadingDerivative(s) => NumError::CannotSolveForLeadingDerivative(s),
        other => other.into(),
    })?;
    let mut slots = BTreeMap::new();
    let mut names = Vec::new();
    for k in 0..=space.order {
        for a in 0..space.m() {
            for e in [space.coord(a, k), space.deriv(a, k, &[0])] {
                slots.insert(e.as_jet().expect("jet").clone(), names.len());
                names.push(e.to_string());
            }
        }
    }
    let mut model = NumericModel {
        space: space.clone(),
        bindings: bindings.clone(),
        names,
        undetermined: Vec::new(),
        slots,
        accel: Vec::new(),
    };
    for k in 0..=space.order {
        for a in 0..space.m() {
            let acc = space.deriv(a, k, &[0, 0]);
            let prog = match rules.get(&acc) {
                Some(rhs) => {
                    if let Some(j) = rhs.jets().into_iter().find(|j| j.derivative_order() > 1) {
                        return Err(NumError::CannotSolveForLeadingDerivative(format!(
                            "`{acc}` depends on `{}`",
                            Expr::jet(j)
                        )));
                    }
                    model.compile(rhs)?
                }
                None => {
                    model.undetermined.push(acc.to_string());
                    Program { ops: vec![Op::Push(0.0)] }
                }
            };
            model.accel.push(prog);
        }
    }
    Ok(model)
}

impl NumericModel {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// Compile an expression over this model's state.
    pub fn compile(&self, e: &Expr) -> Result<Program, NumError> {
        let mut ops = Vec::new();
        self.emit(e, &mut ops)?;
        Ok(Program { ops })
    }

    fn emit(&self, e: &Expr, ops: &mut Vec<Op>) -> Result<(), NumError> {
        match e.node() {
            Node::Num(q) => ops.push(Op::Push(q.to_f64().unwrap_or(f64::NAN))),
            Node::Sym(s) => {
                if **s == *self.space.independent[0] {
                    ops.push(Op::Time)
                } else {
                    let v = self.bindings.get(&**s).ok_or_else(|| NumError::UnboundSymbol(s.to_string()))?;
                    ops.push(Op::Push(*v))
                }
            }
            Node::Jet(j) => {
                let i = self.slots.get(j).ok_or_else(|| NumError::UnboundSymbol(e.to_string()))?;
                ops.push(Op::Load(*i))
            }
            Node::Fun(f, a) => {
                self.emit(a, ops)?;
                ops.push(Op::Fun(*f))
            }
            Node::Apply(_) | Node::Integral(_) => return Err(NumError::UnboundSymbol(e.to_string())),
            Node::Poly(ts) => {
                for t in ts {
                    ops.push(Op::Push(t.coef.to_f64().unwrap_or(f64::NAN)));
                    for f in &t.factors {
                        self.emit(&f.base, ops)?;
                        if f.exp.is_integer() {
                            let n = f.exp.to_integer().to_i32().unwrap_or(i32::MAX);
                            if n != 1 {
                                ops.push(Op::Powi(n));
                            }
                        } else {
                            ops.push(Op::Powf(f.exp.to_f64().unwrap_or(f64::NAN)));
                        }
                    }
                    ops.push(Op::Mul(t.factors.len() + 1));
                }
                ops.push(Op::Add(ts.len()));
            }
        }
        Ok(())
    }

    /// State vector from named coordinates; unnamed entries are zero.
    pub fn initial_state(&self, values: &BTreeMap<String, f64>) -> Result<Vec<f64>, NumError> {
        let mut y = vec![0.0; self.dim()];
        for (name, v) in values {
            let i = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| NumError::UnknownCoordinate(name.clone()))?;
            y[i] = *v;
        }
        Ok(y)
    }

    /// `dy/dt` at `(t, y)`.
    pub fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64], stack: &mut Vec<f64>) {
        for (i, p) in self.accel.iter().enumerate() {
            dy[2 * i] = y[2 * i + 1];
            dy[2 * i + 1] = p.eval(t, y, stack);
        }
    }
}

/// Sampled solution on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.y.last().expect("non-empty trajectory")
    }
}

/// Classical fixed-step fourth-order Runge–Kutta.
pub fn integrate(model: &NumericModel, y0: &[f64], grid: &Grid) -> Result<Trajectory, NumError> {
    assert_eq!(y0.len(), model.dim(), "initial state dimension");
    let mut stack = Vec::new();
    rk4(|t, y, dy| model.rhs(t, y, dy, &mut stack), y0, grid)
}

/// RK4 for an arbitrary right-hand side `f(t, y, dy)`.
pub fn rk4(mut f: impl FnMut(f64, &[f64], &mut [f64]), y0: &[f64], grid: &Grid) -> Result<Trajectory, NumError> {
    let n = grid.steps()?;
    let d = y0.len();
    let h = grid.h;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut ts = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let mut y = y0.to_vec();
    ts.push(grid.t0);
    ys.push(y.clone());
    for s in 0..n {
        let t = grid.t0 + s as f64 * h;
        f(t, &y, &mut k1);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..d {
            tmp[i] = y[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..d {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t1 = grid.t0 + (s + 1) as f64 * h;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NumError::NonFiniteState { t: t1 });
        }
        ts.push(t1);
        ys.push(y.clone());
    }
    Ok(Trajectory { t: ts, y: ys })
}

/// Values of each ε-coefficient of `law` along a trajectory.
pub fn evaluate(traj: &Trajectory, model: &NumericModel, law: &EpsSeries) -> Result<Vec<Vec<f64>>, NumError> {
    let progs = law.coeffs().iter().map(|c| model.compile(c)).collect::<Result<Vec<_>, _>>()?;
    let mut stack = Vec::new();
    Ok(progs
        .iter()
        .map(|p| traj.t.iter().zip(&traj.y).map(|(t, y)| p.eval(*t, y, &mut stack)).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    /// `max_t |I_k(t) − I_k(t0)|` per ε-order.
    pub max_drift: Vec<f64>,
    /// Richardson estimate of the final-state integration error, if computed.
    pub error_estimate: Option<f64>,
}

impl DriftReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("serializable")
    }

    pub fn worst(&self) -> f64 {
        self.max_drift.iter().cloned().fold(0.0, f64::max)
    }
}

fn max_dev(v: &[f64]) -> f64 {
    let v0 = v.first().copied().unwrap_or(0.0);
    v.iter().map(|x| (x - v0).abs()).fold(0.0, f64::max)
}

pub fn drift(traj: &Trajectory, model: &NumericModel, law: &EpsSeries) -> Result<DriftReport, NumError> {
    let values = evaluate(traj, model, law)?;
    Ok(DriftReport {
        max_drift: values.iter().map(|v| max_dev(v)).collect(),
        error_estimate: None,
    })
}

/// Integrate at `h` and `h/2`; the drift is taken from the `h` run and the
/// error estimate is `|y_h − y_{h/2}|∞ / 15`.
pub fn drift_with_estimate(model: &NumericModel, y0: &[f64], grid: &Grid, law: &EpsSeries) -> Result<DriftReport, NumError> {
    let (a, b) = rayon::join(|| integrate(model, y0, grid), || integrate(model, y0, &grid.halved()));
    let (a, b) = (a?, b?);
    let mut report = drift(&a, model, law)?;
    let err = a.last().iter().zip(b.last()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / 15.0;
    report.error_estimate = Some(err);
    Ok(report)
}

/// `drift(h) / drift(h/2)` for the worst ε-order: ≈16 for RK4 above the
/// rounding floor.
pub fn order_ratio(model: &NumericModel, y0: &[f64], grid: &Grid, law: &EpsSeries) -> Result<f64, NumError> {
    let (a, b) = rayon::join(|| integrate(model, y0, grid), || integrate(model, y0, &grid.halved()));
    let da = drift(&a?, model, law)?.worst();
    let db = drift(&b?, model, law)?.worst();
    Ok(da / db)
}

/// CSV dump: `t,state...,I0,I1,...`.
pub fn write_csv<W: Write>(out: W, traj: &Trajectory, model: &NumericModel, law: Option<&EpsSeries>) -> Result<(), Box<dyn std::error::Error>> {
    let values = match law {
        Some(l) => evaluate(traj, model, l)?,
        None => Vec::new(),
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(model.names.iter().cloned());
    header.extend((0..values.len()).map(|k| format!("I{k}")));
    w.write_record(&header)?;
    for (s, (t, y)) in traj.t.iter().zip(&traj.y).enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(y.iter().map(f64::to_string));
        rec.extend(values.iter().map(|v| v[s].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Numeric model, initial state and grid declared by a model file.
pub fn prepare(model: &Model) -> Result<(NumericModel, Vec<f64>, Grid), NumError> {
    let nm = compile_numeric(&model.lagrangian, &model.file.bindings)?;
    let y0 = nm.initial_state(&model.file.initial)?;
    let g = model
        .file
        .grid
        .as_ref()
        .map(|g| Grid::new(g.t0, g.t1, g.h))
        .ok_or_else(|| NumError::InvalidGrid("model declares no grid".into()))?;
    Ok((nm, y0, g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub eps: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `log drift` against `log ε` over the nonzero ε.
    pub slope: f64,
}

impl SweepReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("serializable")
    }
}

/// Name of the constant standing in for ε in the full equation.
const EPS_VALUE: &str = "eps_value";

/// Integrate the full perturbed equation at each ε and measure the drift of
/// `Σ ε^k I_k`, with `u_(0)` the unperturbed solution from the same initial
/// data and `u_(1) = (u − u_(0))/ε`; higher orders are set to zero.
pub fn eps_sweep(model: &Model, law: &EpsSeries, eps: &[f64], grid: &Grid) -> Result<SweepReport, NumError> {
    let hier = compile_numeric(&model.lagrangian, &model.file.bindings)?;
    let space = model.space();
    let full_space = JetSpace::new(
        &space.independent.iter().map(String::as_str).collect::<Vec<_>>(),
        &space.dependent.iter().map(String::as_str).collect::<Vec<_>>(),
        0,
        space.max_derivative,
    );
    let mut sub = Bindings::new();
    sub.insert(Expr::eps(), Expr::sym(EPS_VALUE));
    let full_l = PerturbedLagrangian::from_source(full_space.clone(), &substitute(&model.source, &sub))?;
    let run = |e: f64| -> Result<Trajectory, NumError> {
        let mut b = model.file.bindings.clone();
        b.insert(EPS_VALUE.into(), e);
        let nm = compile_numeric(&full_l, &b)?;
        // Full initial data u = u_(0) + ε u_(1) at t0.
        let h0 = hier.initial_state(&model.file.initial)?;
        let mut y0 = vec![0.0; nm.dim()];
        for (i, v) in y0.iter_mut().enumerate() {
            *v = h0[i] + if hier.dim() > nm.dim() { e * h0[nm.dim() + i] } else { 0.0 };
        }
        integrate(&nm, &y0, grid)
    };
    let base = run(0.0)?;
    let progs = law.coeffs().iter().map(|c| hier.compile(c)).collect::<Result<Vec<_>, _>>()?;
    let points = eps
        .par_iter()
        .map(|&e| -> Result<SweepPoint, NumError> {
            let full = run(e)?;
            let d = base.y[0].len();
            let mut stack = Vec::new();
            let mut y = vec![0.0; hier.dim()];
            let mut vals = Vec::with_capacity(full.t.len());
            for (s, t) in full.t.iter().enumerate() {
                y[..d].copy_from_slice(&base.y[s]);
                if y.len() > d {
                    for i in 0..d {
                        y[d + i] = if e == 0.0 { 0.0 } else { (full.y[s][i] - base.y[s][i]) / e };
                    }
                }
                let mut total = 0.0;
                let mut w = 1.0;
                for p in &progs {
                    total += w * p.eval(*t, &y, &mut stack);
                    w *= e;
                }
                vals.push(total);
            }
            Ok(SweepPoint { eps: e, drift: max_dev(&vals) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.eps > 0.0 && p.drift > 0.0)
        .map(|p| (p.eps.ln(), p.drift.ln()))
        .collect();
    Ok(SweepReport { slope: slope(&fit), points })
}

fn slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    if xy.len() < 2 {
        return f64::NAN;
    }
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_with;
    use crate::models::load_builtin;

    fn lagrangian(dep: &[&str], p: u32, src: &str, consts: &[&str]) -> PerturbedLagrangian {
        let space = JetSpace::ode(dep, p);
        let c: Vec<String> = consts.iter().map(|s| s.to_string()).collect();
        let e = parse_with(src, &space.context(&c)).unwrap();
        PerturbedLagrangian::from_source(space, &e).unwrap().with_constants(c)
    }

    fn series(model: &NumericModel, coeffs: &[&str]) -> EpsSeries {
        let ctx = model.space.context(&[]);
        EpsSeries::new(coeffs.iter().map(|c| parse_with(c, &ctx).unwrap()).collect())
    }

    #[test]
    fn decaying_exponential() {
        let tr = rk4(|_, y, dy| dy[0] = -y[0], &[1.0], &Grid::new(0.0, 1.0, 1e-3)).unwrap();
        assert!((tr.last()[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn free_particle_is_uniform_motion() {
        let l = lagrangian(&["u"], 0, "1/2*du#t^2", &[]);
        let m = compile_numeric(&l, &BTreeMap::new()).unwrap();
        assert_eq!(m.names, ["u0", "du0#t"]);
        let tr = integrate(&m, &[1.0, 2.0], &Grid::new(0.0, 1.0, 0.1)).unwrap();
        assert!((tr.last()[0] - 3.0).abs() < 1e-12);
        assert_eq!(tr.last()[1], 2.0);
    }

    #[test]
    fn zero_rhs_is_constant() {
        let l = lagrangian(&["u"], 0, "1/2*du#t^2", &[]);
        let m = compile_numeric(&l, &BTreeMap::new()).unwrap();
        let tr = integrate(&m, &[4.0, 0.0], &Grid::new(0.0, 2.0, 0.25)).unwrap();
        assert!(tr.y.iter().all(|y| y == &[4.0, 0.0]));
    }

    #[test]
    fn quadratic_oscillator_rhs() {
        let model = load_builtin("oscillator-quadratic").unwrap();
        let (m, _, _) = prepare(&model).unwrap();
        assert_eq!(m.names, ["u0", "du0#t", "u1", "du1#t"]);
        let y = [0.3, -0.7, 1.1, 0.2];
        let mut dy = [0.0; 4];
        m.rhs(0.0, &y, &mut dy, &mut Vec::new());
        let want = [-0.7, -0.3, 0.2, -1.1 - 0.09];
        for (a, b) in dy.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{dy:?}");
        }
    }

    #[test]
    fn oscillator_order_zero_is_cosine() {
        let model = load_builtin("oscillator-quadratic").unwrap();
        let (m, y0, g) = prepare(&model).unwrap();
        let tr = integrate(&m, &y0, &g).unwrap();
        let worst = tr.t.iter().zip(&tr.y).map(|(t, y)| (y[0] - t.cos()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn energy_is_conserved_and_position_is_not() {
        let model = load_builtin("oscillator-quadratic").unwrap();
        let (m, y0, g) = prepare(&model).unwrap();
        let tr = integrate(&m, &y0, &g).unwrap();
        let i1 = series(&m, &["1/2*(du0#t^2 + u0^2)", "du0#t*du1#t + u0*u1 + u0^3/3"]);
        let d = drift(&tr, &m, &i1).unwrap();
        assert!(d.max_drift.iter().all(|x| *x <= 1e-8), "{d:?}");
        let bad = drift(&tr, &m, &series(&m, &["u0"])).unwrap();
        assert!(bad.max_drift[0] > 0.5);
    }

    #[test]
    fn time_reversal() {
        let model = load_builtin("oscillator-quadratic").unwrap();
        let (m, y0, g) = prepare(&model).unwrap();
        let fwd = integrate(&m, &y0, &g).unwrap();
        let back = integrate(&m, fwd.last(), &g.reversed()).unwrap();
        let err = back.last().iter().zip(&y0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn three_body_momentum() {
        let model = load_builtin("three-body").unwrap();
        let (m, y0, g) = prepare(&model).unwrap();
        let tr = integrate(&m, &y0, &g).unwrap();
        let (_, i2x) = model.golden_quantities().into_iter().find(|(l, _)| l == "I2x").unwrap();
        let d = drift(&tr, &m, &i2x).unwrap();
        assert!(d.worst() <= 1e-8, "{d:?}");
    }

    #[test]
    fn unbound_and_bad_grid() {
        let l = lagrangian(&["u"], 0, "1/2*du#t^2 - k*u^2", &["k"]);
        assert_eq!(compile_numeric(&l, &BTreeMap::new()).unwrap_err(), NumError::UnboundSymbol("k".into()));
        assert!(matches!(Grid::new(0.0, 1.0, -0.1).steps(), Err(NumError::InvalidGrid(_))));
        assert!(matches!(Grid::new(0.0, 1.0, 0.3).steps(), Err(NumError::InvalidGrid(_))));
    }

    #[test]
    fn blow_up_is_reported() {
        let l = lagrangian(&["u"], 0, "1/2*du#t^2 + u^4", &[]);
        let m = compile_numeric(&l, &BTreeMap::new()).unwrap();
        let err = integrate(&m, &[10.0, 0.0], &Grid::new(0.0, 10.0, 0.01)).unwrap_err();
        assert!(matches!(err, NumError::NonFiniteState { .. }));
    }

    #[test]
    fn csv_header() {
        let l = lagrangian(&["u"], 0, "1/2*du#t^2", &[]);
        let m = compile_numeric(&l, &BTreeMap::new()).unwrap();
        let tr = integrate(&m, &[0.0, 1.0], &Grid::new(0.0, 0.5, 0.25)).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &tr, &m, Some(&series(&m, &["du0#t"]))).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "t,u0,du0#t,I0");
        assert_eq!(s.lines().count(), 4);
    }
}

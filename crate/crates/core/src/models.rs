//! Model files and the built-in example models with their golden data.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::determine::{AnsatzSpace, DetermineError};
use crate::expr::{differentiate, is_zero, parse_with, substitute, Bindings, Context, Expr, ExprError, Node};
use crate::jet::JetSpace;
use crate::noether::{
    classify, divergence_check, match_golden, noether_fluxes, variational_residual, Classification,
    ConservationLaw, DependencyTerm, FluxFormula, GaugeTerm, NoetherError, PerturbedLagrangian,
};
use crate::perturb::EpsSeries;
use crate::symmetry::ApproximateGenerator;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid model file at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported schema version {0}")]
    UnsupportedSchema(u32),
    #[error("in `{field}`: {source}")]
    Parse { field: String, source: ExprError },
    #[error("function `{0}` is used through its antiderivative, which is not declared")]
    MissingAntiderivative(String),
    #[error(transparent)]
    Noether(#[from] NoetherError),
    #[error(transparent)]
    Determine(#[from] DetermineError),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSpec {
    #[serde(default)]
    pub assume: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub arity: u32,
    /// Closed form in `variable`; absent for an arbitrary function.
    #[serde(default)]
    pub concrete: Option<String>,
    #[serde(default)]
    pub antiderivative: Option<String>,
    #[serde(default = "default_variable")]
    pub variable: String,
}

fn default_variable() -> String {
    "z".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenSpec {
    pub label: String,
    /// `[k][i]`.
    pub xi: Vec<Vec<String>>,
    /// `[k][α]`.
    pub eta: Vec<Vec<String>>,
    /// `[k][i]`.
    pub phi: Vec<Vec<String>>,
    #[serde(default)]
    pub quantity_label: Option<String>,
    /// `[k][i]`; absent when only a trivial law is expected.
    #[serde(default)]
    pub quantity: Option<Vec<Vec<String>>>,
    /// `"nontrivial"` (default) or `"trivial"`.
    #[serde(default)]
    pub expect: Option<String>,
    /// Known discrepancy of the transcribed data; reported, not failed.
    #[serde(default)]
    pub erratum: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationTerm {
    /// A `quantity_label`.
    pub law: String,
    #[serde(default)]
    pub shifted: bool,
    pub coef: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependencySpec {
    pub text: String,
    pub relation: Vec<RelationTerm>,
}

/// The JSON model-file schema (version 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub independent: Vec<String>,
    pub dependent: Vec<String>,
    pub order_p: u32,
    pub lagrangian: String,
    #[serde(default)]
    pub constants: BTreeMap<String, ConstantSpec>,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionSpec>,
    /// Absent: the default ansatz.
    #[serde(default)]
    pub ansatz: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default)]
    pub oscillatory: bool,
    #[serde(default)]
    pub bindings: BTreeMap<String, f64>,
    /// Initial values by coordinate, e.g. `"u0"`, `"du0#t"`; missing are 0.
    #[serde(default)]
    pub initial: BTreeMap<String, f64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub golden: Vec<GoldenSpec>,
    #[serde(default)]
    pub dependencies: Vec<DependencySpec>,
}

/// A golden generator/gauge/quantity record, parsed.
#[derive(Debug, Clone)]
pub struct GoldenRecord {
    pub label: String,
    pub generator: ApproximateGenerator,
    pub gauge: GaugeTerm,
    pub quantity_label: Option<String>,
    pub quantity: Option<EpsSeries>,
    pub expect_trivial: bool,
    pub erratum: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub file: ModelFile,
    /// The Lagrangian in `eps` and the unexpanded variables, with concrete
    /// functions substituted.
    pub source: Expr,
    pub lagrangian: PerturbedLagrangian,
    pub golden: Vec<GoldenRecord>,
}

const BUILTINS: &[(&str, &str)] = &[
    ("oscillator-arbitraryF", include_str!("../models/oscillator-arbitraryF.json")),
    ("oscillator-quadratic", include_str!("../models/oscillator-quadratic.json")),
    ("oscillator-cubic-inverse", include_str!("../models/oscillator-cubic-inverse.json")),
    ("coupled-system", include_str!("../models/coupled-system.json")),
    ("three-body", include_str!("../models/three-body.json")),
    ("free-particle", include_str!("../models/free-particle.json")),
];

/// Names of the built-in models.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// Source JSON of a built-in model.
pub fn builtin_source(name: &str) -> Result<&'static str, ModelError> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| ModelError::UnknownModel(name.to_string()))
}

pub fn load_builtin(name: &str) -> Result<Model, ModelError> {
    Model::from_json(builtin_source(name)?)
}

/// Replace declared concrete functions (and their derivatives and
/// antiderivatives) by closed forms.
fn concretize(e: &Expr, functions: &BTreeMap<String, (Expr, Option<Expr>, Expr)>) -> Result<Expr, ModelError> {
    if functions.is_empty() {
        return Ok(e.clone());
    }
    let mut found = BTreeSet::new();
    e.collect_matching(
        &|x| match x.node() {
            Node::Apply(a) => a.family.is_none() && functions.contains_key(&*a.name),
            Node::Integral(i) => i.family.is_none() && functions.contains_key(&*i.name),
            _ => false,
        },
        &mut found,
    );
    let mut b = Bindings::new();
    for atom in found {
        let v = match atom.node() {
            Node::Apply(a) => {
                let (f, _, z) = &functions[&*a.name];
                let mut v = f.clone();
                for _ in 0..a.derivs[0] {
                    v = differentiate(&v, z);
                }
                let arg = concretize(&a.args[0], functions)?;
                substitute(&v, &Bindings::from([(z.clone(), arg)]))
            }
            Node::Integral(i) => {
                let (_, anti, z) = &functions[&*i.name];
                let anti = anti.as_ref().ok_or_else(|| ModelError::MissingAntiderivative(i.name.to_string()))?;
                let arg = concretize(&i.arg, functions)?;
                substitute(anti, &Bindings::from([(z.clone(), arg)]))
            }
            _ => unreachable!(),
        };
        b.insert(atom, v);
    }
    Ok(substitute(e, &b))
}

impl Model {
    /// Parse and validate a model file; schema errors carry the JSON path.
    pub fn from_json(text: &str) -> Result<Model, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| ModelError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        Model::from_file(file)
    }

    pub fn from_file(file: ModelFile) -> Result<Model, ModelError> {
        if file.schema != 1 {
            return Err(ModelError::UnsupportedSchema(file.schema));
        }
        let ind: Vec<&str> = file.independent.iter().map(String::as_str).collect();
        let dep: Vec<&str> = file.dependent.iter().map(String::as_str).collect();
        let space = JetSpace::new(&ind, &dep, file.order_p, 2);
        let consts: Vec<String> = file.constants.keys().cloned().collect();
        let ctx = space.context(&consts);
        let parse = |field: &str, s: &str, ctx: &Context| {
            parse_with(s, ctx).map_err(|source| ModelError::Parse {
                field: field.to_string(),
                source,
            })
        };
        let mut functions = BTreeMap::new();
        for (name, f) in &file.functions {
            if let Some(c) = &f.concrete {
                let mut fctx = ctx.clone();
                fctx.constants.push(f.variable.clone());
                let z = Expr::sym(&f.variable);
                let body = parse(&format!("functions.{name}.concrete"), c, &fctx)?;
                let anti = f
                    .antiderivative
                    .as_ref()
                    .map(|a| parse(&format!("functions.{name}.antiderivative"), a, &fctx))
                    .transpose()?;
                functions.insert(name.clone(), (body, anti, z));
            }
        }
        let source = concretize(&parse("lagrangian", &file.lagrangian, &ctx)?, &functions)?;
        let lagrangian = PerturbedLagrangian::from_source(space.clone(), &source)?.with_constants(consts.iter().cloned());
        let p = file.order_p as usize;
        let matrix = |field: String, m: &[Vec<String>], width: usize| -> Result<Vec<Vec<Expr>>, ModelError> {
            if m.len() != p + 1 || m.iter().any(|r| r.len() != width) {
                return Err(ModelError::Schema {
                    path: field,
                    message: format!("expected a [{}][{width}] matrix", p + 1),
                });
            }
            m.iter()
                .enumerate()
                .map(|(k, r)| {
                    r.iter()
                        .enumerate()
                        .map(|(i, s)| concretize(&parse(&format!("{field}[{k}][{i}]"), s, &ctx)?, &functions))
                        .collect()
                })
                .collect()
        };
        let mut golden = Vec::new();
        for (n, g) in file.golden.iter().enumerate() {
            let at = |f: &str| format!("golden[{n}].{f}");
            let generator = ApproximateGenerator::from_matrix(
                space.clone(),
                matrix(at("xi"), &g.xi, space.n())?,
                matrix(at("eta"), &g.eta, space.m())?,
            )
            .map_err(NoetherError::from)?;
            let gauge = GaugeTerm::from_matrix(&space, matrix(at("phi"), &g.phi, space.n())?)?;
            let quantity = g
                .quantity
                .as_ref()
                .map(|q| matrix(at("quantity"), q, 1).map(|m| EpsSeries::new(m.into_iter().map(|r| r[0].clone()).collect())))
                .transpose()?;
            golden.push(GoldenRecord {
                label: g.label.clone(),
                generator,
                gauge,
                quantity_label: g.quantity_label.clone(),
                quantity,
                expect_trivial: g.expect.as_deref() == Some("trivial"),
                erratum: g.erratum.clone(),
            });
        }
        Ok(Model {
            file,
            source,
            lagrangian,
            golden,
        })
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn space(&self) -> &JetSpace {
        &self.lagrangian.space
    }

    pub fn constants(&self) -> &BTreeSet<String> {
        &self.lagrangian.constants
    }

    /// Parsing context for expressions over this model's space.
    pub fn context(&self) -> Context {
        let c: Vec<String> = self.constants().iter().cloned().collect();
        self.space().context(&c)
    }

    /// The declared ansatz, or the default one.
    pub fn ansatz(&self) -> Result<AnsatzSpace, ModelError> {
        Ok(match &self.file.ansatz {
            Some(spec) => AnsatzSpace::from_spec(self.space(), self.constants().clone(), spec)?,
            None => AnsatzSpace::default_for(self.space(), self.constants().clone(), self.file.oscillatory),
        })
    }

    /// Golden quantities by label (first record per label).
    pub fn golden_quantities(&self) -> Vec<(String, EpsSeries)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for g in &self.golden {
            if let (Some(l), Some(q)) = (&g.quantity_label, &g.quantity) {
                if seen.insert(l.clone()) {
                    out.push((l.clone(), q.clone()));
                }
            }
        }
        out
    }

    /// Check each declared dependency among golden quantities with
    /// [`classify`].
    pub fn check_dependencies(&self) -> Result<Vec<(String, bool)>, ModelError> {
        let qs = self.golden_quantities();
        let laws: Vec<ConservationLaw> = qs.iter().map(|(_, q)| ConservationLaw::from_fluxes(vec![q.clone()])).collect();
        let report = classify(&laws, &self.lagrangian)?;
        let ctx = self.context();
        let mut out = Vec::new();
        for d in &self.file.dependencies {
            let mut terms = Vec::new();
            let mut known = true;
            for t in &d.relation {
                match qs.iter().position(|(l, _)| *l == t.law) {
                    Some(law) => terms.push(DependencyTerm {
                        law,
                        shifted: t.shifted,
                        coef: parse_with(&t.coef, &ctx).map_err(|source| ModelError::Parse {
                            field: format!("dependencies.{}", d.text),
                            source,
                        })?,
                    }),
                    None => known = false,
                }
            }
            out.push((d.text.clone(), known && report.implies(&terms)?));
        }
        Ok(out)
    }
}

/// Outcome of one golden record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Failed, but the record is marked as a known discrepancy.
    Flagged,
}

#[derive(Debug, Clone, Serialize)]
pub struct GoldenEntry {
    pub label: String,
    pub residual_zero: bool,
    /// Flux formula verified and reproducing the golden quantity.
    pub quantity_match: Option<bool>,
    /// Divergence of the golden quantity vanishes on shell, per ε-order.
    pub divergence: Vec<bool>,
    pub classification: Option<Classification>,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GoldenReport {
    pub model: String,
    pub entries: Vec<GoldenEntry>,
    pub dependencies: Vec<(String, bool)>,
}

impl GoldenReport {
    pub fn passed(&self) -> usize {
        self.entries.iter().filter(|e| e.status == Status::Pass).count()
    }

    /// No entry failed (flagged entries are allowed) and every declared
    /// dependency holds.
    pub fn ok(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail) && self.dependencies.iter().all(|(_, b)| *b)
    }

    pub fn to_json(&self) -> Value {
        json!(self)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("model {}: {}/{} golden records pass\n", self.model, self.passed(), self.entries.len());
        for e in &self.entries {
            let st = match e.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Flagged => "FLAG",
            };
            s.push_str(&format!("  {st} {}: {}\n", e.label, e.detail));
        }
        for (d, ok) in &self.dependencies {
            s.push_str(&format!("  {} dependency {d}\n", if *ok { "PASS" } else { "FAIL" }));
        }
        s
    }
}

fn check_record(model: &Model, g: &GoldenRecord) -> Result<GoldenEntry, ModelError> {
    let l = &model.lagrangian;
    let mut entry = GoldenEntry {
        label: g.label.clone(),
        residual_zero: false,
        quantity_match: None,
        divergence: Vec::new(),
        classification: None,
        status: Status::Fail,
        detail: String::new(),
    };
    let residual = variational_residual(&g.generator, l, &g.gauge)?;
    if let Some((k, r)) = residual.coeffs().iter().enumerate().find(|(_, r)| !is_zero(r).is_zero()) {
        entry.detail = format!("residual at order {k}: {r}");
        return Ok(entry);
    }
    entry.residual_zero = true;
    let law = match noether_fluxes(&g.generator, l, &g.gauge, FluxFormula::Expanded) {
        Ok(law) => law,
        Err(e @ NoetherError::FormulaMismatch { .. }) => {
            entry.detail = e.to_string();
            return Ok(entry);
        }
        Err(e) => return Err(e.into()),
    };
    entry.classification = Some(law.classification);
    let mut ok = true;
    let mut notes = Vec::new();
    if g.expect_trivial {
        let trivial = matches!(law.classification, Classification::Trivial | Classification::OnShellTrivial);
        ok &= trivial;
        notes.push(format!("law is {}", law.classification));
    }
    if let Some(q) = &g.quantity {
        let golden_law = ConservationLaw::from_fluxes(vec![q.clone()]);
        entry.divergence = divergence_check(&golden_law, l)?;
        ok &= entry.divergence.iter().all(|b| *b);
        let others: Vec<Vec<EpsSeries>> = model
            .golden_quantities()
            .into_iter()
            .filter(|(lab, _)| Some(lab) != g.quantity_label.as_ref())
            .map(|(_, s)| vec![s])
            .collect();
        // Smallest set of other quantities first: with all of them the golden
        // one may itself be redundant, which hides a genuine match.
        let mut m = match_golden(&law.fluxes, &[q.clone()], &[], model.constants())?;
        for o in &others {
            if m.is_some() {
                break;
            }
            m = match_golden(&law.fluxes, &[q.clone()], std::slice::from_ref(o), model.constants())?;
        }
        if m.is_none() {
            m = match_golden(&law.fluxes, &[q.clone()], &others, model.constants())?;
        }
        entry.quantity_match = Some(m.is_some());
        match m {
            Some(m) => {
                notes.push(format!("flux = ({}) * {}", m.scale, g.quantity_label.as_deref().unwrap_or("golden")));
                if !m.others.is_empty() {
                    notes.push(format!("plus {} other golden term(s)", m.others.len()));
                }
            }
            None => {
                ok = false;
                notes.push("flux does not reproduce the golden quantity".into());
            }
        }
        if !entry.divergence.iter().all(|b| *b) {
            notes.push(format!("golden divergence check {:?}", entry.divergence));
        }
    }
    entry.status = match (ok, &g.erratum) {
        (true, _) => Status::Pass,
        (false, Some(_)) => Status::Flagged,
        (false, None) => Status::Fail,
    };
    if let (false, Some(e)) = (ok, &g.erratum) {
        notes.push(format!("known discrepancy: {e}"));
    }
    entry.detail = notes.join("; ");
    Ok(entry)
}

/// Verify every golden record: zero residual, verified flux reproducing
/// the golden quantity, and the golden quantity's divergence check.
pub fn golden_check(model: &Model) -> Result<GoldenReport, ModelError> {
    use rayon::prelude::*;
    let entries = model
        .golden
        .par_iter()
        .map(|g| check_record(model, g))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GoldenReport {
        model: model.name().to_string(),
        entries,
        dependencies: model.check_dependencies()?,
    })
}

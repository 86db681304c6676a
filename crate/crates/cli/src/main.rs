use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use approxsym::determine::{self, Solution};
use approxsym::expr::{parse_with, to_json, to_latex, Expr};
use approxsym::models::{builtin_names, builtin_source, golden_check, load_builtin, Model, ModelError};
use approxsym::noether::{classify, noether_fluxes, ConservationLaw, FluxFormula, GaugeTerm};
use approxsym::numverify::{drift_with_estimate, eps_sweep, integrate, prepare, write_csv};
use approxsym::perturb::EpsSeries;
use approxsym::symmetry::ApproximateGenerator;
use approxsym::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "approxsym", version, about = "Approximate Noether symmetries of perturbed Lagrangians")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Use a built-in model instead of a file.
    #[arg(long, global = true)]
    model: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Latex,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print the ε-expansion L_0..L_p.
    Expand { file: Option<PathBuf> },
    /// Solve the determining equations over the model's ansatz.
    Determine {
        file: Option<PathBuf>,
        /// Print the raw determining equations instead of the solutions.
        #[arg(long)]
        dump_system: bool,
    },
    /// Assemble and verify conservation laws.
    Noether {
        file: Option<PathBuf>,
        /// Only the generator with this label.
        #[arg(long)]
        generator: Option<String>,
        /// Use discovered generators even if the model has golden ones.
        #[arg(long)]
        determined: bool,
        /// Append triviality and dependency analysis.
        #[arg(long)]
        classify: bool,
        /// Custom ξ component as `c0;c1;...` by ε-order (repeat per independent variable).
        #[arg(long)]
        xi: Vec<String>,
        /// Custom η component as `c0;c1;...` (repeat per dependent variable).
        #[arg(long)]
        eta: Vec<String>,
        /// Custom gauge component as `c0;c1;...`.
        #[arg(long)]
        phi: Vec<String>,
    },
    /// Verify golden laws symbolically, optionally numerically.
    Verify {
        file: Option<PathBuf>,
        /// Restrict numeric checks to this quantity label (default: all).
        #[arg(long)]
        law: Option<String>,
        /// Integrate the hierarchy and report drift.
        #[arg(long)]
        numeric: bool,
        /// Comma-separated ε values for a sweep against the full equation.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<f64>,
        /// Write the trajectory with the first selected quantity.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// List built-in models, or print one.
    Models { name: Option<String> },
}

struct Failure {
    code: i32,
    message: String,
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        Failure {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}

fn load(cli: &Cli, file: &Option<PathBuf>) -> Result<Model, Failure> {
    match (&cli.model, file) {
        (Some(name), None) => Ok(load_builtin(name)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| fail(2, format!("{}: {e}", path.display())))?;
            Ok(Model::from_json(&text)?)
        }
        (Some(_), Some(_)) => Err(fail(2, "give either a model file or --model, not both")),
        (None, None) => Err(fail(2, "no model: give a file or --model <name>")),
    }
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Expand { file } => expand(cli, &load(cli, file)?),
        Command::Determine { file, dump_system } => determine_cmd(cli, &load(cli, file)?, *dump_system),
        Command::Noether {
            file,
            generator,
            determined,
            classify,
            xi,
            eta,
            phi,
        } => {
            let model = load(cli, file)?;
            let gens = if !(xi.is_empty() && eta.is_empty() && phi.is_empty()) {
                vec![("custom".to_string(), custom_generator(&model, xi, eta, phi)?)]
            } else {
                select(&model, generator.as_deref(), *determined)?
            };
            noether_cmd(cli, &model, gens, *classify)
        }
        Command::Verify {
            file,
            law,
            numeric,
            sweep,
            csv,
        } => verify(cli, &load(cli, file)?, law.as_deref(), *numeric, sweep, csv.as_ref()),
        Command::Models { name } => models(cli, name.as_deref()),
    }
}

fn expand(cli: &Cli, model: &Model) -> Result<String, Failure> {
    let l = model.lagrangian.l.coeffs();
    Ok(match cli.format {
        Format::Text => l.iter().enumerate().map(|(k, e)| format!("L{k} = {e}\n")).collect(),
        Format::Latex => l
            .iter()
            .enumerate()
            .map(|(k, e)| format!("\\mathcal{{L}}_{{{k}}} = {}\n", to_latex(e)))
            .collect(),
        Format::Json => json_line(json!({"model": model.name(), "L": l.iter().map(to_json).collect::<Vec<_>>()})),
    })
}

fn json_line(v: Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable"))
}

fn discover(model: &Model) -> Result<Vec<Solution>, Failure> {
    let ansatz = model.ansatz()?;
    let sys = determine::extract(&model.lagrangian, &ansatz)?;
    let kernel = determine::solve(&sys)?;
    Ok(determine::report(&ansatz, &kernel)?)
}

fn determine_cmd(cli: &Cli, model: &Model, dump: bool) -> Result<String, Failure> {
    if dump {
        let ansatz = model.ansatz()?;
        let sys = determine::extract(&model.lagrangian, &ansatz)?;
        return Ok(match cli.format {
            Format::Json => json_line(sys.to_json()),
            _ => sys.dump(),
        });
    }
    let sols = discover(model)?;
    Ok(match cli.format {
        Format::Text => {
            let mut s = format!("model {}: {} generators\n", model.name(), sols.len());
            for (n, sol) in sols.iter().enumerate() {
                let _ = writeln!(s, "Xi{}: {}\n  {}", n + 1, sol.generator, sol.gauge_text());
            }
            s
        }
        Format::Latex => sols
            .iter()
            .enumerate()
            .map(|(n, sol)| format!("\\Xi_{{{}}} = {}\n", n + 1, sol.to_latex()))
            .collect(),
        Format::Json => json_line(json!({
            "model": model.name(),
            "dimension": sols.len(),
            "solutions": sols.iter().map(Solution::to_json).collect::<Vec<_>>(),
        })),
    })
}

type Labelled = (String, (ApproximateGenerator, GaugeTerm));

fn select(model: &Model, label: Option<&str>, determined: bool) -> Result<Vec<Labelled>, Failure> {
    let all: Vec<Labelled> = if determined || model.golden.is_empty() {
        discover(model)?
            .into_iter()
            .enumerate()
            .map(|(n, s)| (format!("Xi{}", n + 1), (s.generator, s.gauge)))
            .collect()
    } else {
        model
            .golden
            .iter()
            .map(|g| (g.label.clone(), (g.generator.clone(), g.gauge.clone())))
            .collect()
    };
    match label {
        None => Ok(all),
        Some(l) => {
            let hit: Vec<Labelled> = all.into_iter().filter(|(n, _)| n == l).collect();
            if hit.is_empty() {
                Err(fail(2, format!("no generator labelled `{l}`")))
            } else {
                Ok(hit)
            }
        }
    }
}

/// Components given as `c0;c1;...`; missing components and orders are zero.
fn components(model: &Model, flag: &str, given: &[String], width: usize) -> Result<Vec<Vec<Expr>>, Failure> {
    let p = model.space().order as usize;
    if given.len() > width {
        return Err(fail(2, format!("--{flag}: at most {width} components")));
    }
    let ctx = model.context();
    let mut m = vec![vec![Expr::zero(); width]; p + 1];
    for (i, s) in given.iter().enumerate() {
        let parts: Vec<&str> = s.split(';').collect();
        if parts.len() > p + 1 {
            return Err(fail(2, format!("--{flag}: at most {} ε-orders", p + 1)));
        }
        for (k, part) in parts.iter().enumerate() {
            m[k][i] = parse_with(part.trim(), &ctx).map_err(|e| fail(2, format!("--{flag}: {e}")))?;
        }
    }
    Ok(m)
}

fn custom_generator(model: &Model, xi: &[String], eta: &[String], phi: &[String]) -> Result<(ApproximateGenerator, GaugeTerm), Failure> {
    let space = model.space();
    let g = ApproximateGenerator::from_matrix(
        space.clone(),
        components(model, "xi", xi, space.n())?,
        components(model, "eta", eta, space.m())?,
    )
    .map_err(|e| Failure::from(approxsym::noether::NoetherError::from(e)))?;
    let gauge = GaugeTerm::from_matrix(space, components(model, "phi", phi, space.n())?)?;
    Ok((g, gauge))
}

fn noether_cmd(cli: &Cli, model: &Model, gens: Vec<Labelled>, with_classify: bool) -> Result<String, Failure> {
    let l = &model.lagrangian;
    let mut laws = Vec::new();
    for (label, (g, phi)) in &gens {
        let law = noether_fluxes(g, l, phi, FluxFormula::Expanded).map_err(|e| {
            let f = Failure::from(e);
            fail(f.code, format!("{label}: {}", f.message))
        })?;
        laws.push((label.clone(), law));
    }
    let report = if with_classify {
        let ls: Vec<ConservationLaw> = laws.iter().map(|(_, l)| l.clone()).collect();
        Some(classify(&ls, l)?)
    } else {
        None
    };
    let labels: Vec<String> = laws.iter().map(|(n, _)| n.clone()).collect();
    let deps: Vec<String> = report
        .iter()
        .flat_map(|r| r.dependencies.iter().map(|d| d.render(&labels)))
        .collect();
    Ok(match cli.format {
        Format::Text => {
            let mut s = String::new();
            for (label, law) in &laws {
                let _ = writeln!(s, "{label}: verified, {}", law.classification);
                for (i, flux) in law.fluxes.iter().enumerate() {
                    for (k, c) in flux.coeffs().iter().enumerate() {
                        let _ = writeln!(s, "  Phi{}_({k}) = {c}", i + 1);
                    }
                }
            }
            for d in &deps {
                let _ = writeln!(s, "dependency: {d}");
            }
            s
        }
        Format::Latex => {
            let mut s = String::new();
            for (label, law) in &laws {
                let _ = writeln!(s, "% {label}\n{}", law.to_latex());
            }
            for d in &deps {
                let _ = writeln!(s, "% dependency: {d}");
            }
            s
        }
        Format::Json => json_line(json!({
            "model": model.name(),
            "laws": laws.iter().map(|(n, l)| {
                let mut v = l.to_json();
                v["label"] = json!(n);
                v
            }).collect::<Vec<_>>(),
            "dependencies": deps,
        })),
    })
}

fn verify(
    cli: &Cli,
    model: &Model,
    law: Option<&str>,
    numeric: bool,
    sweep: &[f64],
    csv: Option<&PathBuf>,
) -> Result<String, Failure> {
    let golden = golden_check(model)?;
    let mut quantities: Vec<(String, EpsSeries)> = model.golden_quantities();
    if let Some(l) = law {
        quantities.retain(|(n, _)| n == l);
        if quantities.is_empty() {
            return Err(fail(2, format!("no quantity labelled `{l}`")));
        }
    }
    let mut drifts = Vec::new();
    let mut sweeps = Vec::new();
    if numeric || !sweep.is_empty() || csv.is_some() {
        let (nm, y0, grid) = prepare(model)?;
        let traj = integrate(&nm, &y0, &grid)?;
        if numeric {
            for (n, q) in &quantities {
                drifts.push((n.clone(), drift_with_estimate(&nm, &y0, &grid, q)?));
            }
        }
        if !sweep.is_empty() {
            for (n, q) in &quantities {
                sweeps.push((n.clone(), eps_sweep(model, q, sweep, &grid)?));
            }
        }
        if let Some(path) = csv {
            let file = std::fs::File::create(path).map_err(|e| fail(1, format!("{}: {e}", path.display())))?;
            write_csv(file, &traj, &nm, quantities.first().map(|(_, q)| q)).map_err(|e| fail(1, e.to_string()))?;
        }
    }
    let out = match cli.format {
        Format::Json => json_line(json!({
            "golden": golden.to_json(),
            "drift": drifts.iter().map(|(n, d)| json!({"law": n, "report": d.to_json()})).collect::<Vec<_>>(),
            "sweep": sweeps.iter().map(|(n, r)| json!({"law": n, "report": r.to_json()})).collect::<Vec<_>>(),
        })),
        _ => {
            let mut s = golden.to_text();
            for (n, d) in &drifts {
                let per: Vec<String> = d.max_drift.iter().enumerate().map(|(k, x)| format!("I{k} {x:.3e}")).collect();
                let _ = writeln!(
                    s,
                    "drift {n}: {} (integration error ~{:.1e})",
                    per.join(", "),
                    d.error_estimate.unwrap_or(f64::NAN)
                );
            }
            for (n, r) in &sweeps {
                let pts: Vec<String> = r.points.iter().map(|p| format!("eps={:e}: {:.3e}", p.eps, p.drift)).collect();
                let _ = writeln!(s, "sweep {n}: {}; slope {:.3}", pts.join(", "), r.slope);
            }
            s
        }
    };
    if !golden.ok() {
        print!("{out}");
        return Err(fail(4, format!("{} golden records failed", golden.entries.len() - golden.passed())));
    }
    Ok(out)
}

fn models(cli: &Cli, name: Option<&str>) -> Result<String, Failure> {
    let name = name.or(cli.model.as_deref());
    Ok(match name {
        Some(n) => builtin_source(n).map_err(|e: ModelError| Failure::from(e))?.to_string(),
        None => match cli.format {
            Format::Json => json_line(json!(builtin_names())),
            _ => builtin_names().iter().map(|n| format!("{n}\n")).collect(),
        },
    })
}

mod input;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use qcw_core::atoms::{self, K0Expression, PointAssignment};
use qcw_core::basechange::{apply_base_change, BaseChange, BaseChangeDoc};
use qcw_core::catalog::{entry_json, generate_builtin, CatalogEntry};
use qcw_core::convergence::{convergence_experiment, RaySpec};
use qcw_core::matrix::SeriesMatrixDoc;
use qcw_core::quantum::{dimension_validate, leading_k_decomposition, PurityStatus};
use qcw_core::spectral::{SpectralConfig, SpectrumMultiset};
use qcw_core::{QQuantumModel, QSeriesMatrix};

#[derive(Parser)]
#[command(name = "qcw", version, about = "Quantum connection matrices, products, base change and spectra")]
struct Cli {
    /// Relative eigen-residual tolerance.
    #[arg(long, global = true)]
    tol_eig: Option<f64>,
    /// Absolute eigenvalue clustering tolerance.
    #[arg(long, global = true)]
    tol_cluster: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Catalog name, bundle file, or model file (with --potential).
    #[arg(long)]
    model: String,
    /// Potential document replacing the model's own.
    #[arg(long)]
    potential: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Associativity,
    Frobenius,
    Purity,
    Decomposition,
    Hom,
    Dimension,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model and the dimension constraint of its potential.
    Validate(ModelArgs),
    /// Connection matrix K as exact series.
    Kmatrix {
        #[command(flatten)]
        m: ModelArgs,
        /// Maximal q-order, `p/q` accepted.
        #[arg(long)]
        q_order: Option<String>,
        #[arg(long)]
        t_degree: Option<u32>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Catalog bundle of X × Y.
    Product {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalue clusters of K at a numeric point.
    Spectrum {
        #[command(flatten)]
        m: ModelArgs,
        /// `name=value` pairs; complex values as `a+bi`.
        #[arg(long, value_delimiter = ',')]
        point: Vec<String>,
    },
    /// Spectrum distance of X × Y against pairwise sums along q = εν.
    Converge {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Direction, one value per Novikov variable of the product, in order.
        #[arg(long, value_delimiter = ',', required = true)]
        nu: Vec<String>,
        /// Insertion values, `name=value`.
        #[arg(long, value_delimiter = ',')]
        t: Vec<String>,
        #[arg(long, default_value_t = 1e-2)]
        eps0: f64,
        #[arg(long, default_value_t = 0.5)]
        factor: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// T⁻¹KT followed by a Novikov substitution.
    Basechange {
        #[command(flatten)]
        m: ModelArgs,
        /// Base-change document: `{"T": …, "q_subst": …}`.
        #[arg(long)]
        spec: PathBuf,
        /// Transform this matrix document instead of the model's K.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Atom proxy (spectrum of K) at a numeric point.
    Atom {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        point: Vec<String>,
    },
    /// φ of a formal combination, e.g. `[P1]*[P1] - [P1xP1] + 2*[pt]`.
    Phi {
        #[arg(long)]
        expr: String,
        /// `variety:name=value,...`; repeat per variety.
        #[arg(long)]
        point: Vec<String>,
    },
    /// Run a verification suite.
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
    },
    /// Built-in catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Show {
        name: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Write the built-in bundles, as generated from code, into a directory.
    Generate { dir: PathBuf },
}

enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = input::spectral_config(cli.tol_eig, cli.tol_cluster)?;
    match cli.command {
        Command::Validate(m) => validate(&m),
        Command::Kmatrix { m, q_order, t_degree, format, out } => {
            let entry = input::truncate(input::entry(&m.model, m.potential.as_ref())?, q_order.as_deref(), t_degree)?;
            let k = entry.quantum()?.connection_k()?;
            input::emit(out.as_ref(), &render_matrix(&k, format))?;
            Ok(Outcome::Ok)
        }
        Command::Product { x, y, out } => {
            let p = input::catalog()?.product(&x, &y)?;
            input::emit(out.as_ref(), &entry_json(&p))?;
            Ok(Outcome::Ok)
        }
        Command::Spectrum { m, point } | Command::Atom { m, point } => {
            let entry = input::entry(&m.model, m.potential.as_ref())?;
            let qm = entry.quantum()?;
            let p = input::assignments(&point)?;
            input::check_point(&p, qm.gamma().vars(), &entry.model.name)?;
            let atom = atoms::atom_of(&qm, &p, &cfg)?;
            let doc = json!({
                "model": entry.model.name,
                "point": point_json(&p),
                "eig_tol": cfg.eig_tol,
                "cluster_tol": cfg.cluster_tol,
                "eigenvalues": spectrum_json(&atom.spectrum),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(Outcome::Ok)
        }
        Command::Converge { x, y, nu, t, eps0, factor, steps, out } => {
            converge(&x, &y, &nu, &t, eps0, factor, steps, out.as_ref(), &cfg)
        }
        Command::Basechange { m, spec, matrix, format, out } => {
            let doc: BaseChangeDoc = serde_json::from_str(&input::read(&spec)?)
                .map_err(|e| anyhow!("{}: {e}", spec.display()))?;
            let bc = BaseChange::from_doc(&doc).with_context(|| spec.display().to_string())?;
            let k = match matrix {
                Some(path) => {
                    let d: SeriesMatrixDoc = serde_json::from_str(&input::read(&path)?)
                        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
                    QSeriesMatrix::from_doc(&d).with_context(|| path.display().to_string())?
                }
                None => input::entry(&m.model, m.potential.as_ref())?.quantum()?.connection_k()?,
            };
            let transformed = apply_base_change(&k, &bc)?;
            input::emit(out.as_ref(), &render_matrix(&transformed, format))?;
            Ok(Outcome::Ok)
        }
        Command::Phi { expr, point } => phi(&expr, &point, &cfg),
        Command::Check { suite, model, potential, x, y } => check(suite, model, potential, x, y, &cfg),
        Command::Catalog { action } => catalog(action),
    }
}

fn render_matrix(k: &QSeriesMatrix, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&k.to_doc()).expect("documents serialize");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            for i in 0..k.size() {
                for j in 0..k.size() {
                    let _ = writeln!(s, "K[{}][{}] = {}", i + 1, j + 1, k.get(i, j));
                }
            }
            s
        }
    }
}

fn complex_json(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn point_json(p: &BTreeMap<String, Complex64>) -> serde_json::Value {
    p.iter().map(|(k, v)| (k.clone(), complex_json(*v))).collect::<serde_json::Map<_, _>>().into()
}

fn spectrum_json(s: &SpectrumMultiset<f64>) -> serde_json::Value {
    s.clusters
        .iter()
        .map(|(z, m)| json!({ "re": z.re, "im": z.im, "multiplicity": m }))
        .collect::<Vec<_>>()
        .into()
}

fn validate(m: &ModelArgs) -> Result<Outcome> {
    let entry = input::entry(&m.model, m.potential.as_ref())?;
    let mut ok = true;
    let violations = entry.model.validate();
    for v in &violations {
        println!("model: {v:?}");
        ok = false;
    }
    if violations.is_empty() {
        for v in dimension_validate(&entry.model, &entry.potential) {
            println!("dimension: {} has {} != {}", v.display, v.lhs, v.rhs);
            ok = false;
        }
        if let Err(e) = entry.quantum() {
            println!("potential: {e}");
            ok = false;
        }
    }
    println!("{}: {}", entry.model.name, if ok { "valid" } else { "INVALID" });
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}

#[allow(clippy::too_many_arguments)]
fn converge(
    x: &str,
    y: &str,
    nu: &[String],
    t: &[String],
    eps0: f64,
    factor: f64,
    steps: usize,
    out: Option<&PathBuf>,
    cfg: &SpectralConfig,
) -> Result<Outcome> {
    let cat = input::catalog()?;
    let (ex, ey) = (cat.get(x)?, cat.get(y)?);
    let prod = cat.product(x, y)?;
    let qxy = prod.quantum()?;
    let q_names = qxy.gamma().vars().q_names().to_vec();
    if nu.len() != q_names.len() {
        bail!(
            "--nu has {} components but {} has Novikov variables {:?}",
            nu.len(),
            prod.model.name,
            q_names
        );
    }
    let nu = q_names
        .iter()
        .zip(nu)
        .map(|(q, v)| Ok((q.clone(), input::complex(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let ray = RaySpec {
        nu,
        t_point: input::assignments(t)?,
        eps0,
        factor,
        steps,
    };
    let table = convergence_experiment(&ex.quantum()?, &ey.quantum()?, &qxy, &ray, cfg)?;
    input::emit(out, &table.to_csv())?;
    for r in table.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("epsilon {:e}: {}", r.epsilon, r.error.as_deref().unwrap_or_default());
    }
    eprintln!(
        "{} steps, final distance {:e}, strictly decreasing: {}",
        table.rows.len(),
        table.final_distance().unwrap_or(f64::NAN),
        table.strictly_decreasing()
    );
    Ok(Outcome::Ok)
}

/// `variety:name=value,...`
fn point_assignment(items: &[String]) -> Result<PointAssignment> {
    let mut pa = PointAssignment::default();
    for item in items {
        let (variety, rest) = item
            .split_once(':')
            .ok_or_else(|| anyhow!("--point: expected `variety:name=value,...`, got `{item}`"))?;
        pa.set(variety, input::assignments(&[rest.to_string()])?);
    }
    Ok(pa)
}

fn phi(expr: &str, point: &[String], cfg: &SpectralConfig) -> Result<Outcome> {
    let e = K0Expression::parse(expr)?;
    let value = atoms::phi(&e, &input::catalog()?, &point_assignment(point)?, cfg)?;
    let terms: Vec<serde_json::Value> = value
        .terms
        .iter()
        .map(|(a, c)| {
            json!({
                "coefficient": c,
                "models": a.provenance.iter().map(|p| p.model.clone()).collect::<Vec<_>>(),
                "eigenvalues": spectrum_json(&a.spectrum),
            })
        })
        .collect();
    let doc = json!({ "expression": e.to_string(), "terms": terms });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(Outcome::Ok)
}

fn verdict(name: &str, ok: bool) -> Outcome {
    println!("{name}: {}", if ok { "PASS" } else { "FAIL" });
    if ok {
        Outcome::Ok
    } else {
        Outcome::Failed
    }
}

fn model_for(model: Option<String>, potential: Option<PathBuf>) -> Result<(CatalogEntry, QQuantumModel)> {
    let name = model.ok_or_else(|| anyhow!("this suite needs --model"))?;
    let entry = input::entry(&name, potential.as_ref())?;
    let qm = entry.quantum()?;
    Ok((entry, qm))
}

/// Factors of a product from `--x/--y`, or from the model's factor split.
fn factors_for(
    model: Option<String>,
    potential: Option<PathBuf>,
    x: Option<String>,
    y: Option<String>,
) -> Result<(QQuantumModel, QQuantumModel, QQuantumModel)> {
    let cat = input::catalog()?;
    let (x, y, prod) = match (x, y, model) {
        (Some(x), Some(y), None) => {
            let p = cat.product(&x, &y)?;
            (x, y, p)
        }
        (x, y, Some(m)) => {
            let p = input::entry(&m, potential.as_ref())?;
            let f = p
                .model
                .factors
                .clone()
                .ok_or_else(|| anyhow!("`{}` carries no factor split", p.model.name))?;
            (x.unwrap_or(f.x), y.unwrap_or(f.y), p)
        }
        _ => bail!("this suite needs --model, or both --x and --y"),
    };
    Ok((cat.get(&x)?.quantum()?, cat.get(&y)?.quantum()?, prod.quantum()?))
}

fn check(
    suite: Suite,
    model: Option<String>,
    potential: Option<PathBuf>,
    x: Option<String>,
    y: Option<String>,
    cfg: &SpectralConfig,
) -> Result<Outcome> {
    match suite {
        Suite::Associativity => {
            let (entry, qm) = model_for(model, potential)?;
            let r = qm.associativity_check(None)?;
            println!("{}: {} triples checked, {} failing", entry.model.name, r.checked, r.failures.len());
            for ((i, j, k), c) in r.failures.iter().take(20) {
                println!("  ({i}, {j}, {k}): max |residual coefficient| {c}");
            }
            Ok(verdict("associativity", r.passed()))
        }
        Suite::Frobenius => {
            let (entry, qm) = model_for(model, potential)?;
            let r = qm.frobenius_check()?;
            println!("{}: {} triples checked, {} failing", entry.model.name, r.checked, r.failures.len());
            Ok(verdict("frobenius", r.passed()))
        }
        Suite::Dimension => {
            let (entry, _) = model_for(model, potential)?;
            let v = dimension_validate(&entry.model, &entry.potential);
            for d in &v {
                println!("  {}: {} != {}", d.display, d.lhs, d.rhs);
            }
            Ok(verdict("dimension", v.is_empty()))
        }
        Suite::Purity => {
            let (entry, qm) = model_for(model, potential)?;
            let n = qm.rank();
            let mut ok = true;
            let mut nonempty = 0;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        match qm.leading_purity_check(a, b, c)? {
                            PurityStatus::Pass => nonempty += 1,
                            PurityStatus::Empty => {}
                            PurityStatus::Violation(ms) => {
                                ok = false;
                                nonempty += 1;
                                println!("  ({a}, {b}, {c}): mixed leading terms {}", ms.join(", "));
                            }
                        }
                    }
                }
            }
            println!("{}: {} triples, {} with nonzero Γ", entry.model.name, n * n * n, nonempty);
            Ok(verdict("purity", ok))
        }
        Suite::Decomposition => {
            let (qx, qy, qxy) = factors_for(model, potential, x, y)?;
            let r = leading_k_decomposition(&qx, &qy, &qxy)?;
            let mut ok = true;
            for g in &r.gaps {
                if !(g.gap_ok && g.mixed_only) {
                    ok = false;
                    println!(
                        "  R[{}][{}] = {}  (order gap {}, mixed only {})",
                        g.row + 1,
                        g.col + 1,
                        r.residual.get(g.row, g.col),
                        g.gap_ok,
                        g.mixed_only
                    );
                }
            }
            Ok(verdict("decomposition", ok))
        }
        Suite::Hom => {
            let (x, y) = match (x, y) {
                (Some(x), Some(y)) => (x, y),
                _ => bail!("the hom suite needs --x and --y"),
            };
            let r = atoms::hom_check(&input::catalog()?, &x, &y, &atoms::default_hom_schedule(), 1.0, cfg)?;
            for row in &r.rows {
                println!("  epsilon {:.1e}: d = {:.6e}", row.epsilon, row.distance);
            }
            for (rel, why) in &r.skipped {
                println!("  {rel}: SKIPPED ({why})");
            }
            let ok = r.decreasing() && r.final_distance().is_some_and(|d| d <= 1e-8);
            let trivial = r.all_within(1e-12);
            Ok(verdict(&format!("hom {}", r.product), ok || trivial))
        }
    }
}

fn catalog(action: CatalogAction) -> Result<Outcome> {
    match action {
        CatalogAction::List => {
            for n in input::catalog()?.names() {
                println!("{n}");
            }
        }
        CatalogAction::Show { name, format } => {
            let cat = input::catalog()?;
            let e = cat.get(&name)?;
            match format {
                Format::Json => print!("{}", entry_json(e)),
                Format::Text => print!("{}", describe(e)),
            }
        }
        CatalogAction::Generate { dir } => {
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for e in generate_builtin() {
                let path = dir.join(format!("{}.json", e.name()));
                std::fs::write(&path, entry_json(&e)).with_context(|| format!("writing {}", path.display()))?;
                println!("{}", path.display());
            }
        }
    }
    Ok(Outcome::Ok)
}

fn describe(e: &CatalogEntry) -> String {
    let m = &e.model;
    let mut s = String::new();
    let _ = writeln!(s, "name: {}", m.name);
    let _ = writeln!(s, "dim: {}", m.dim_c);
    let basis: Vec<String> = m.basis.iter().map(|b| format!("{} (deg {})", b.name, b.degree)).collect();
    let _ = writeln!(s, "basis: {}", basis.join(", "));
    let c1: Vec<String> = m
        .c1
        .iter()
        .zip(&m.basis)
        .filter(|(c, _)| *c != &qcw_core::Rational::from_integer(0.into()))
        .map(|(c, b)| if *c == qcw_core::Rational::from_integer(1.into()) { b.name.clone() } else { format!("{c}*{}", b.name) })
        .collect();
    let _ = writeln!(s, "c1: {}", if c1.is_empty() { "0".to_string() } else { c1.join(" + ") });
    if let Some(f) = &m.factors {
        let _ = writeln!(s, "factors: {} x {}", f.x, f.y);
    }
    let tr = e.potential.series.truncation();
    let _ = writeln!(s, "Gamma: {}", e.potential.series);
    let _ = writeln!(s, "truncation: q-order {}, t-degree {}", tr.q, tr.t);
    s
}

//! Loading models, potentials and numeric points from flags and files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use qcw_core::catalog::{canonical_name, Catalog, CatalogEntry, EntryDoc};
use qcw_core::cohomology::{CohomologyModel, ModelDoc};
use qcw_core::quantum::{Potential, PotentialDoc};
use qcw_core::series::Truncation;
use qcw_core::spectral::SpectralConfig;

pub fn catalog() -> Result<Catalog> {
    Catalog::from_env().context("loading the catalog")
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn looks_like_path(s: &str) -> bool {
    s.ends_with(".json") || s.contains('/') || s.contains(std::path::MAIN_SEPARATOR)
}

/// `--model` is a catalog name, a bundle file or a bare model file (the
/// last needs `--potential`). `--potential` replaces the bundled potential.
pub fn entry(model: &str, potential: Option<&PathBuf>) -> Result<CatalogEntry> {
    let base: Option<CatalogEntry>;
    let bare_model: Option<CohomologyModel<qcw_core::Rational>>;
    if looks_like_path(model) {
        let path = Path::new(model);
        let text = read(path)?;
        let value: serde_json::Value = parse_json(path, &text)?;
        if value.get("model").is_some() && value.get("potential").is_some() {
            let doc: EntryDoc = parse_json(path, &text)?;
            base = Some(CatalogEntry::from_doc(&doc).with_context(|| format!("{}", path.display()))?);
            bare_model = None;
        } else {
            let doc: ModelDoc = parse_json(path, &text)?;
            bare_model = Some(CohomologyModel::from_doc(&doc).with_context(|| format!("{}", path.display()))?);
            base = None;
        }
    } else {
        base = Some(catalog()?.get(model)?.clone());
        bare_model = None;
    }
    let model = match (&base, bare_model) {
        (Some(b), _) => b.model.clone(),
        (None, Some(m)) => m,
        (None, None) => unreachable!("one of the two is set"),
    };
    let potential = match potential {
        Some(path) => {
            let doc: PotentialDoc = parse_json(path, &read(path)?)?;
            let p = Potential::from_doc(&doc).with_context(|| format!("{}", path.display()))?;
            if canonical_name(&p.model_ref) != canonical_name(&model.name) {
                bail!(
                    "{}: field `model_ref` is `{}` but the model is `{}`",
                    path.display(),
                    p.model_ref,
                    model.name
                );
            }
            p
        }
        None => match base {
            Some(b) => b.potential,
            None => bail!("`{model}` is a bare model document; pass --potential", model = model.name),
        },
    };
    Ok(CatalogEntry { model, potential })
}

/// Truncates the potential to the requested orders, if any.
pub fn truncate(entry: CatalogEntry, q_order: Option<&str>, t_degree: Option<u32>) -> Result<CatalogEntry> {
    if q_order.is_none() && t_degree.is_none() {
        return Ok(entry);
    }
    let current = entry.potential.series.truncation();
    let q = match q_order {
        Some(s) => num_rational::Rational64::from_str(s.trim()).map_err(|_| anyhow!("--q-order: `{s}` is not a rational"))?,
        None => current.q,
    };
    let t = t_degree.unwrap_or(current.t);
    let trunc = Truncation::new(q, t);
    Ok(CatalogEntry {
        potential: entry.potential.truncated(trunc),
        ..entry
    })
}

pub fn complex(s: &str) -> Result<Complex64> {
    Complex64::from_str(s.trim()).map_err(|_| anyhow!("`{s}` is not a number"))
}

/// `name=value` pairs, comma separated or repeated.
pub fn assignments(items: &[String]) -> Result<BTreeMap<String, Complex64>> {
    let mut out = BTreeMap::new();
    for item in items.iter().flat_map(|s| s.split(',')).filter(|s| !s.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("expected `name=value`, got `{item}`"))?;
        if out.insert(k.trim().to_string(), complex(v)?).is_some() {
            bail!("`{}` assigned twice", k.trim());
        }
    }
    Ok(out)
}

/// Checks that a point assigns exactly the variables of a series.
pub fn check_point(point: &BTreeMap<String, Complex64>, vars: &qcw_core::series::Variables, what: &str) -> Result<()> {
    for v in vars.q_names().iter().chain(vars.t_names()) {
        if !point.contains_key(v) {
            bail!("--point: no value for `{v}` of {what}");
        }
    }
    for k in point.keys() {
        if vars.lookup(k).is_none() {
            bail!("--point: `{k}` is not a variable of {what}");
        }
    }
    Ok(())
}

pub fn spectral_config(tol_eig: Option<f64>, tol_cluster: Option<f64>) -> Result<SpectralConfig> {
    let mut cfg = SpectralConfig::default();
    if let Some(t) = tol_eig {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--tol-eig must be positive");
        }
        cfg.eig_tol = t;
    }
    if let Some(t) = tol_cluster {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--tol-cluster must be positive");
        }
        cfg.cluster_tol = t;
    }
    Ok(cfg)
}

/// Writes to a file, or stdout when no path is given.
pub fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

//! Built-in models and potentials: the point, P¹ and P¹×P¹.
//!
//! Each catalog file is a bundle `{"model": …, "potential": …}`. The
//! shipped files are compiled in; `QCW_CATALOG_DIR` points to a directory
//! of bundles to use instead.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohomology::{kunneth_product, BasisElement, CohomologyModel, ModelDoc, ModelError};
use crate::quantum::{Potential, PotentialDoc, QuantumError, QuantumModel};
use crate::scalar::Coefficient;
use crate::series::{Monomial, Series, SeriesError, Truncation, Variables};

pub const CATALOG_DIR_ENV: &str = "QCW_CATALOG_DIR";

const BUILTIN: [(&str, &str); 3] = [
    ("point", include_str!("../../../catalog/point.json")),
    ("p1", include_str!("../../../catalog/p1.json")),
    ("p1xp1", include_str!("../../../catalog/p1xp1.json")),
];

/// Truncation of the shipped P¹×P¹ potential.
pub const P1XP1_TRUNCATION: (i64, u32) = (3, 5);

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown variety `{0}`")]
    Unknown(String),
    #[error("no catalog model for the product {0} × {1}")]
    NoProduct(String, String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub model: ModelDoc,
    pub potential: PotentialDoc,
}

/// A model with its potential, exact coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub model: CohomologyModel<BigRational>,
    pub potential: Potential<BigRational>,
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        &self.model.name
    }

    pub fn quantum(&self) -> Result<QuantumModel<BigRational>, QuantumError> {
        QuantumModel::new(self.model.clone(), self.potential.clone())
    }

    pub fn to_doc(&self) -> EntryDoc {
        EntryDoc {
            model: self.model.to_doc(),
            potential: self.potential.to_doc(),
        }
    }

    pub fn from_doc(doc: &EntryDoc) -> Result<Self, CatalogError> {
        Ok(CatalogEntry {
            model: CohomologyModel::from_doc(&doc.model)?,
            potential: Potential::from_doc(&doc.potential)?,
        })
    }

    pub fn parse(source: &str, text: &str) -> Result<Self, CatalogError> {
        let doc: EntryDoc = serde_json::from_str(text).map_err(|e| CatalogError::Parse {
            path: source.to_string(),
            message: e.to_string(),
        })?;
        Self::from_doc(&doc)
    }
}

#[derive(Debug, Clone)]
pub struct Catalog {
    entries: BTreeMap<String, CatalogEntry>,
}

impl Catalog {
    pub fn builtin() -> Self {
        let entries = BUILTIN
            .iter()
            .map(|(name, text)| {
                let e = CatalogEntry::parse(name, text).expect("shipped catalog parses");
                (e.model.name.clone(), e)
            })
            .collect();
        Catalog { entries }
    }

    /// Loads every `*.json` bundle of a directory.
    pub fn from_dir(dir: &Path) -> Result<Self, CatalogError> {
        let io = |e: std::io::Error| CatalogError::Io {
            path: dir.to_path_buf(),
            message: e.to_string(),
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut entries = BTreeMap::new();
        for p in paths {
            let text = std::fs::read_to_string(&p).map_err(|e| CatalogError::Io {
                path: p.clone(),
                message: e.to_string(),
            })?;
            let e = CatalogEntry::parse(&p.display().to_string(), &text)?;
            entries.insert(e.model.name.clone(), e);
        }
        Ok(Catalog { entries })
    }

    /// The directory named by `QCW_CATALOG_DIR`, else the built-in catalog.
    pub fn from_env() -> Result<Self, CatalogError> {
        match std::env::var_os(CATALOG_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::from_dir(Path::new(&dir)),
            _ => Ok(Self::builtin()),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Case-insensitive lookup; `pt` is an alias of `point`.
    pub fn get(&self, name: &str) -> Result<&CatalogEntry, CatalogError> {
        let key = canonical_name(name);
        self.entries
            .get(&key)
            .or_else(|| self.entries.iter().find(|(k, _)| k.to_lowercase() == key).map(|(_, v)| v))
            .ok_or_else(|| CatalogError::Unknown(name.to_string()))
    }

    pub fn insert(&mut self, entry: CatalogEntry) {
        self.entries.insert(entry.model.name.clone(), entry);
    }

    /// The catalog model of `x × y`. Products with the point are built on
    /// the fly; other products must be shipped as `{x}x{y}`.
    pub fn product(&self, x: &str, y: &str) -> Result<CatalogEntry, CatalogError> {
        let ex = self.get(x)?;
        let ey = self.get(y)?;
        if ex.model.rank() == 1 && ex.model.name == "point" {
            return point_product(ey);
        }
        if ey.model.rank() == 1 && ey.model.name == "point" {
            return product_with_point(ex);
        }
        let name = format!("{}x{}", ex.model.name, ey.model.name);
        let entry = self
            .entries
            .get(&name)
            .ok_or_else(|| CatalogError::NoProduct(ex.model.name.clone(), ey.model.name.clone()))?;
        match &entry.model.factors {
            Some(f) if f.x == ex.model.name && f.y == ey.model.name => Ok(entry.clone()),
            _ => Err(CatalogError::NoProduct(ex.model.name.clone(), ey.model.name.clone())),
        }
    }
}

pub fn canonical_name(name: &str) -> String {
    let lower = name.trim().to_lowercase();
    if lower == "pt" {
        "point".into()
    } else {
        lower
    }
}

fn q(n: i64) -> BigRational {
    BigRational::from_ratio(n, 1)
}

pub fn point_model() -> CohomologyModel<BigRational> {
    CohomologyModel {
        name: "point".into(),
        dim_c: 0,
        basis: vec![BasisElement { name: "1".into(), degree: 0 }],
        pairing: vec![vec![q(1)]],
        cup: vec![vec![vec![q(1)]]],
        c1: vec![q(0)],
        divisor_indices: vec![],
        unit_index: 0,
        factors: None,
    }
}

pub fn p1_model() -> CohomologyModel<BigRational> {
    CohomologyModel {
        name: "p1".into(),
        dim_c: 1,
        basis: vec![
            BasisElement { name: "1".into(), degree: 0 },
            BasisElement { name: "H".into(), degree: 2 },
        ],
        pairing: vec![vec![q(0), q(1)], vec![q(1), q(0)]],
        cup: vec![
            vec![vec![q(1), q(0)], vec![q(0), q(1)]],
            vec![vec![q(0), q(1)], vec![q(0), q(0)]],
        ],
        c1: vec![q(0), q(2)],
        divisor_indices: vec![1],
        unit_index: 0,
        factors: None,
    }
}

pub fn point_potential() -> Potential<BigRational> {
    let vars = Variables::new(Vec::<String>::new(), Vec::<String>::new()).expect("no variables");
    Potential {
        model_ref: "point".into(),
        series: Series::zero(vars, Truncation::integral(P1XP1_TRUNCATION.0, 0)),
    }
}

/// `Γ = q`.
pub fn p1_potential() -> Potential<BigRational> {
    let vars = Variables::new(["q"], Vec::<&str>::new()).expect("distinct names");
    let series = Series::from_terms(
        vars,
        Truncation::integral(P1XP1_TRUNCATION.0, 0),
        [(Monomial::int(&[1], &[]), q(1))],
    )
    .expect("term within truncation");
    Potential {
        model_ref: "p1".into(),
        series,
    }
}

pub fn p1xp1_model() -> CohomologyModel<BigRational> {
    kunneth_product(&p1_model(), &p1_model()).expect("P1 is valid")
}

/// The Example 3.4 terms through q-order 3 and t-degree 5.
pub fn p1xp1_potential() -> Potential<BigRational> {
    let vars = Variables::new(["q1", "q2"], ["tp"]).expect("distinct names");
    let (qmax, tmax) = P1XP1_TRUNCATION;
    let r = |n: i64, d: i64| BigRational::from_ratio(n, d);
    let series = Series::from_terms(
        vars,
        Truncation::integral(qmax, tmax),
        [
            (Monomial::int(&[1, 0], &[1]), r(1, 1)),
            (Monomial::int(&[0, 1], &[1]), r(1, 1)),
            (Monomial::int(&[1, 1], &[3]), r(1, 6)),
            (Monomial::int(&[2, 1], &[5]), r(1, 120)),
            (Monomial::int(&[1, 2], &[5]), r(1, 120)),
        ],
    )
    .expect("terms within truncation");
    Potential {
        model_ref: "p1xp1".into(),
        series,
    }
}

/// The catalog as generated from code, in shipping order.
pub fn generate_builtin() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry { model: point_model(), potential: point_potential() },
        CatalogEntry { model: p1_model(), potential: p1_potential() },
        CatalogEntry { model: p1xp1_model(), potential: p1xp1_potential() },
    ]
}

/// `point × X`: Künneth model (isomorphic to X) with X's potential.
pub fn point_product(x: &CatalogEntry) -> Result<CatalogEntry, CatalogError> {
    let model = kunneth_product(&point_model(), &x.model)?;
    Ok(CatalogEntry {
        potential: Potential {
            model_ref: model.name.clone(),
            series: x.potential.series.clone(),
        },
        model,
    })
}

/// `X × point`.
pub fn product_with_point(x: &CatalogEntry) -> Result<CatalogEntry, CatalogError> {
    let model = kunneth_product(&x.model, &point_model())?;
    Ok(CatalogEntry {
        potential: Potential {
            model_ref: model.name.clone(),
            series: x.potential.series.clone(),
        },
        model,
    })
}

pub fn point_entry() -> CatalogEntry {
    Catalog::builtin().get("point").expect("shipped").clone()
}

pub fn p1_entry() -> CatalogEntry {
    Catalog::builtin().get("p1").expect("shipped").clone()
}

pub fn p1xp1_entry() -> CatalogEntry {
    Catalog::builtin().get("p1xp1").expect("shipped").clone()
}

/// Pretty JSON of a bundle, as shipped.
pub fn entry_json(entry: &CatalogEntry) -> String {
    let mut s = serde_json::to_string_pretty(&entry.to_doc()).expect("documents serialize");
    s.push('\n');
    s
}

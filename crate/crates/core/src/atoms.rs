//! Spectrum-level atom proxies and the toy motivic measure on formal
//! combinations of catalog varieties.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use num_traits::Float;
use rayon::prelude::*;
use thiserror::Error;

use crate::catalog::{canonical_name, Catalog, CatalogEntry, CatalogError};
use crate::cohomology::Side;
use crate::quantum::{QuantumError, QuantumModel};
use crate::scalar::Coefficient;
use crate::series::SeriesError;
use crate::spectral::{matching_distance, pairwise_sums, spectrum, SpectralConfig, SpectralError, SpectrumMultiset};

pub type Point = BTreeMap<String, Complex<f64>>;

#[derive(Debug, Error)]
pub enum AtomError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("no point assigned for `{variety}` (missing `{variable}`)")]
    MissingPoint { variety: String, variable: String },
    #[error("expression syntax error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("coefficient overflow")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, AtomError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance<T> {
    pub model: String,
    pub point: Vec<(String, Complex<T>)>,
}

/// Exponent multiset of a connection plus where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomProxy<T> {
    pub spectrum: SpectrumMultiset<T>,
    pub provenance: Vec<Provenance<T>>,
}

impl<T: Float> AtomProxy<T> {
    pub fn empty(tol: T) -> Self {
        AtomProxy {
            spectrum: SpectrumMultiset::empty(tol),
            provenance: Vec::new(),
        }
    }

    /// `{(0, 1)}`, the unit for [`atom_tensor`].
    pub fn unit(tol: T) -> Self {
        AtomProxy {
            spectrum: SpectrumMultiset::from_values(&[Complex::new(T::zero(), T::zero())], tol),
            provenance: Vec::new(),
        }
    }

    pub fn from_clusters(clusters: &[(Complex<T>, usize)], tol: T) -> Self {
        AtomProxy {
            spectrum: SpectrumMultiset::from_weighted(clusters, tol),
            provenance: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.spectrum.rank()
    }

    pub fn clusters(&self) -> &[(Complex<T>, usize)] {
        &self.spectrum.clusters
    }

    pub fn distance(&self, other: &Self) -> std::result::Result<T, SpectralError> {
        matching_distance(&self.spectrum.expanded(), &other.spectrum.expanded())
    }
}

/// Spectrum of `K` evaluated at `point`.
pub fn atom_of<C: Coefficient>(qm: &QuantumModel<C>, point: &Point, cfg: &SpectralConfig) -> Result<AtomProxy<f64>> {
    let m = qm.connection_k()?.evaluate::<f64>(point)?;
    Ok(AtomProxy {
        spectrum: spectrum(&m, cfg)?,
        provenance: vec![Provenance {
            model: qm.model().name.clone(),
            point: point.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        }],
    })
}

/// Pairwise sums, multiplicities multiplied, re-clustered.
pub fn atom_tensor<T: Float>(a: &AtomProxy<T>, b: &AtomProxy<T>) -> AtomProxy<T> {
    let tol = a.spectrum.tol.max(b.spectrum.tol);
    let weighted: Vec<(Complex<T>, usize)> = a
        .clusters()
        .iter()
        .flat_map(|&(x, m)| b.clusters().iter().map(move |&(y, n)| (x + y, m * n)))
        .collect();
    AtomProxy {
        spectrum: SpectrumMultiset::from_weighted(&weighted, tol),
        provenance: a.provenance.iter().chain(&b.provenance).cloned().collect(),
    }
}

/// Multiset union, re-clustered.
pub fn atom_sum<T: Float>(a: &AtomProxy<T>, b: &AtomProxy<T>) -> AtomProxy<T> {
    let tol = a.spectrum.tol.max(b.spectrum.tol);
    let all: Vec<(Complex<T>, usize)> = a.clusters().iter().chain(b.clusters()).copied().collect();
    AtomProxy {
        spectrum: SpectrumMultiset::from_weighted(&all, tol),
        provenance: a.provenance.iter().chain(&b.provenance).cloned().collect(),
    }
}

/// Formal ℤ-combination of products of catalog varieties. A term is a
/// sorted list of canonical names; the empty list is the class of a point.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct K0Expression {
    terms: BTreeMap<Vec<String>, i64>,
}

impl K0Expression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::variety("point")
    }

    pub fn variety(name: &str) -> Self {
        let name = canonical_name(name);
        let key = if name == "point" { Vec::new() } else { vec![name] };
        K0Expression {
            terms: BTreeMap::from([(key, 1)]),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[String], i64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn accumulate(&mut self, key: Vec<String>, c: i64) -> Result<()> {
        let e = self.terms.entry(key.clone()).or_insert(0);
        *e = e.checked_add(c).ok_or(AtomError::Overflow)?;
        if *e == 0 {
            self.terms.remove(&key);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.accumulate(k.clone(), *v)?;
        }
        Ok(out)
    }

    pub fn scale(&self, k: i64) -> Result<Self> {
        let mut out = Self::zero();
        for (key, v) in &self.terms {
            out.accumulate(key.clone(), v.checked_mul(k).ok_or(AtomError::Overflow)?)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1)?)
    }

    /// `[X]·[Y] = [X×Y]`, as a formal product of names.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let mut key: Vec<String> = a.iter().chain(b).cloned().collect();
                key.sort();
                out.accumulate(key, x.checked_mul(*y).ok_or(AtomError::Overflow)?)?;
            }
        }
        Ok(out)
    }

    /// Parses e.g. `[P1]*[P1] - [P1xP1] + 2*[pt]`; parentheses group.
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for K0Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (key, c)) in self.terms.iter().enumerate() {
            let sign = if *c < 0 { "-" } else { "+" };
            if i == 0 {
                if *c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let body = if key.is_empty() {
                "[point]".to_string()
            } else {
                key.iter().map(|n| format!("[{n}]")).collect::<Vec<_>>().join("*")
            };
            if c.abs() == 1 {
                write!(f, "{body}")?;
            } else {
                write!(f, "{}*{body}", c.abs())?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> AtomError {
        AtomError::Parse {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<K0Expression> {
        let mut sign = 1;
        if self.peek() == Some(b'-') {
            self.pos += 1;
            sign = -1;
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        let mut acc = self.term()?.scale(sign)?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<K0Expression> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul(&self.factor()?)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<K0Expression> {
        match self.peek() {
            Some(b'[') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos] != b']' {
                    self.pos += 1;
                }
                if self.pos == self.src.len() {
                    return Err(self.error("unterminated `[`"));
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ASCII slice of valid UTF-8").trim();
                if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-') {
                    return Err(AtomError::Parse {
                        pos: start,
                        message: format!("bad variety name `{name}`"),
                    });
                }
                self.pos += 1;
                Ok(K0Expression::variety(name))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let n: i64 = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("digits")
                    .parse()
                    .map_err(|_| AtomError::Overflow)?;
                K0Expression::one().scale(n)
            }
            _ => Err(self.error("expected `[name]`, an integer or `(`")),
        }
    }
}

/// Formal ℤ-combination of atoms. Atoms with identical spectra merge.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiValue {
    pub terms: Vec<(AtomProxy<f64>, i64)>,
}

impl PhiValue {
    pub fn zero() -> Self {
        PhiValue { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, atom: AtomProxy<f64>, c: i64) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.0.spectrum == atom.spectrum) {
            t.1 += c;
        } else {
            self.terms.push((atom, c));
        }
        self.terms.retain(|t| t.1 != 0);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.push(a.clone(), *c);
        }
        out
    }

    pub fn scale(&self, k: i64) -> Self {
        let mut out = PhiValue::zero();
        for (a, c) in &self.terms {
            out.push(a.clone(), c * k);
        }
        out
    }

    /// Equality of the formal combinations, ignoring provenance and order.
    pub fn same_combination(&self, other: &Self) -> bool {
        let diff = self.add(&other.scale(-1));
        diff.is_zero()
    }
}

/// Evaluation points per variety. Product varieties get the points induced
/// from their factors, plus the entry under their own name for variables
/// no factor provides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointAssignment {
    pub points: BTreeMap<String, Point>,
}

impl PointAssignment {
    pub fn set(&mut self, variety: &str, point: Point) {
        self.points.insert(canonical_name(variety), point);
    }

    fn get(&self, variety: &str) -> Point {
        self.points.get(&canonical_name(variety)).cloned().unwrap_or_default()
    }

    fn for_entry(&self, entry: &CatalogEntry) -> Result<Point> {
        let vars = entry.potential.series.vars();
        let own = self.get(&entry.model.name);
        let mut out = Point::new();
        for v in vars.q_names().iter().chain(vars.t_names()) {
            let value = own.get(v).ok_or_else(|| AtomError::MissingPoint {
                variety: entry.model.name.clone(),
                variable: v.clone(),
            })?;
            out.insert(v.clone(), *value);
        }
        Ok(out)
    }

    fn for_product(&self, x: &CatalogEntry, y: &CatalogEntry, xy: &QuantumModel<crate::Rational>) -> Result<Point> {
        let mut out = self.get(&xy.model().name);
        for (side, f) in [(Side::X, x), (Side::Y, y)] {
            let fp = self.for_entry(f)?;
            let fq = f.quantum()?;
            let (q_map, t_map) = xy.factor_embedding(side, &fq)?;
            let fv = f.potential.series.vars();
            let pv = xy.gamma().vars();
            for (k, &p) in q_map.iter().enumerate() {
                out.insert(pv.q_names()[p].clone(), fp[&fv.q_names()[k]]);
            }
            for (a, &p) in t_map.iter().enumerate() {
                out.insert(pv.t_names()[p].clone(), fp[&fv.t_names()[a]]);
            }
        }
        let vars = xy.gamma().vars();
        for v in vars.q_names().iter().chain(vars.t_names()) {
            if !out.contains_key(v) {
                return Err(AtomError::MissingPoint {
                    variety: xy.model().name.clone(),
                    variable: v.clone(),
                });
            }
        }
        Ok(out)
    }
}

/// Additive extension of `atom_of`; products go through catalog product
/// models with induced factor points.
pub fn phi(e: &K0Expression, catalog: &Catalog, points: &PointAssignment, cfg: &SpectralConfig) -> Result<PhiValue> {
    let mut out = PhiValue::zero();
    for (key, c) in e.terms() {
        out.push(phi_monomial(key, catalog, points, cfg)?, c);
    }
    Ok(out)
}

fn phi_monomial(key: &[String], catalog: &Catalog, points: &PointAssignment, cfg: &SpectralConfig) -> Result<AtomProxy<f64>> {
    match key {
        [] => {
            let pt = catalog.get("point")?;
            atom_of(&pt.quantum()?, &Point::new(), cfg)
        }
        [name] => {
            let entry = catalog.get(name)?;
            atom_of(&entry.quantum()?, &points.for_entry(entry)?, cfg)
        }
        [x, y] => {
            let (ex, ey) = (catalog.get(x)?, catalog.get(y)?);
            let prod = catalog.product(x, y)?;
            let qm = prod.quantum()?;
            let p = points.for_product(ex, ey, &qm)?;
            atom_of(&qm, &p, cfg)
        }
        _ => Err(CatalogError::NoProduct(key[..key.len() - 1].join("x"), key[key.len() - 1].clone()).into()),
    }
}

/// φ of each factor, tensored.
pub fn phi_tensor_of_factors(
    key: &[String],
    catalog: &Catalog,
    points: &PointAssignment,
    cfg: &SpectralConfig,
) -> Result<AtomProxy<f64>> {
    let mut acc = AtomProxy::unit(cfg.cluster_tol);
    for name in key {
        acc = atom_tensor(&acc, &phi_monomial(std::slice::from_ref(name), catalog, points, cfg)?);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomRow {
    pub epsilon: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomReport {
    pub product: String,
    pub rows: Vec<HomRow>,
    /// Relations that cannot be checked with the shipped data, with reasons.
    pub skipped: Vec<(String, String)>,
}

impl HomReport {
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].distance < w[0].distance)
    }

    pub fn final_distance(&self) -> Option<f64> {
        self.rows.last().map(|r| r.distance)
    }

    pub fn all_within(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.distance <= tol)
    }
}

pub fn default_hom_schedule() -> Vec<f64> {
    (0..5).map(|k| 10f64.powi(-2 - k)).collect()
}

/// Compares `φ([X]·[Y])` with `φ([X]) ⊗ φ([Y])` at points where every
/// Novikov variable equals ε and every insertion variable `t_value`.
pub fn hom_check(
    catalog: &Catalog,
    x: &str,
    y: &str,
    schedule: &[f64],
    t_value: f64,
    cfg: &SpectralConfig,
) -> Result<HomReport> {
    let key = K0Expression::variety(x).mul(&K0Expression::variety(y))?;
    let (key, _) = key.terms().next().map(|(k, c)| (k.to_vec(), c)).expect("a product is one term");
    let product = catalog.product(x, y)?;
    let names: Vec<&CatalogEntry> = vec![catalog.get(x)?, catalog.get(y)?, &product];
    let rows = schedule
        .par_iter()
        .map(|&eps| -> Result<HomRow> {
            let mut points = PointAssignment::default();
            for e in &names {
                let vars = e.potential.series.vars();
                let p: Point = vars
                    .q_names()
                    .iter()
                    .map(|q| (q.clone(), Complex::new(eps, 0.0)))
                    .chain(vars.t_names().iter().map(|t| (t.clone(), Complex::new(t_value, 0.0))))
                    .collect();
                points.set(&e.model.name, p);
            }
            let lhs = match key.len() {
                0 | 1 => phi_monomial(&key, catalog, &points, cfg)?,
                _ => {
                    let qm = product.quantum()?;
                    let p = points.for_product(names[0], names[1], &qm)?;
                    atom_of(&qm, &p, cfg)?
                }
            };
            let rhs = phi_tensor_of_factors(&key, catalog, &points, cfg)?;
            Ok(HomRow {
                epsilon: eps,
                distance: lhs.distance(&rhs)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HomReport {
        product: product.model.name.clone(),
        rows,
        skipped: vec![(
            "[Bl_Z X] + [Z] = [X] + [E]".into(),
            "no blow-up models in the catalog".into(),
        )],
    })
}

pub fn pairwise_atom_values<T: Float>(a: &AtomProxy<T>, b: &AtomProxy<T>) -> Vec<Complex<T>> {
    pairwise_sums(&a.spectrum.expanded(), &b.spectrum.expanded())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{p1_entry, p1xp1_entry, point_entry};

    type C = Complex<f64>;
    const TOL: f64 = 1e-8;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn pt(pairs: &[(&str, f64)]) -> Point {
        pairs.iter().map(|(k, v)| (k.to_string(), c(*v))).collect()
    }

    fn approx(a: &AtomProxy<f64>, expected: &[(f64, usize)]) -> bool {
        a.clusters().len() == expected.len()
            && a.clusters().iter().zip(expected).all(|((v, m), (e, n))| (v - c(*e)).norm() < 1e-10 && m == n)
    }

    #[test]
    fn atoms_of_catalog_models() {
        let cfg = SpectralConfig::default();
        let p1 = atom_of(&p1_entry().quantum().unwrap(), &pt(&[("q", 1.0)]), &cfg).unwrap();
        assert!(approx(&p1, &[(-2.0, 1), (2.0, 1)]));
        let point = atom_of(&point_entry().quantum().unwrap(), &Point::new(), &cfg).unwrap();
        assert!(approx(&point, &[(0.0, 1)]));
        let prod = atom_of(&p1xp1_entry().quantum().unwrap(), &pt(&[("q1", 1.0), ("q2", 1.0), ("tp", 0.0)]), &cfg).unwrap();
        assert!(approx(&prod, &[(-4.0, 1), (0.0, 2), (4.0, 1)]));
    }

    #[test]
    fn tensor_examples() {
        let a = AtomProxy::from_clusters(&[(c(2.0), 1), (c(-2.0), 1)], TOL);
        assert!(approx(&atom_tensor(&a, &a), &[(-4.0, 1), (0.0, 2), (4.0, 1)]));
        assert_eq!(atom_tensor(&a, &AtomProxy::unit(TOL)).spectrum, a.spectrum);
        let z2 = AtomProxy::from_clusters(&[(c(0.0), 2)], TOL);
        let z3 = AtomProxy::from_clusters(&[(c(0.0), 3)], TOL);
        assert_eq!(atom_tensor(&z2, &z3).clusters(), &[(c(0.0), 6)]);
    }

    #[test]
    fn sum_examples() {
        let two = AtomProxy::from_clusters(&[(c(2.0), 1)], TOL);
        assert_eq!(atom_sum(&two, &two).clusters(), &[(c(2.0), 2)]);
        assert_eq!(atom_sum(&two, &AtomProxy::empty(TOL)).spectrum, two.spectrum);
        let cfg = SpectralConfig::default();
        let p1 = atom_of(&p1_entry().quantum().unwrap(), &pt(&[("q", 1.0)]), &cfg).unwrap();
        let point = atom_of(&point_entry().quantum().unwrap(), &Point::new(), &cfg).unwrap();
        assert!(approx(&atom_sum(&p1, &point), &[(-2.0, 1), (0.0, 1), (2.0, 1)]));
    }

    #[test]
    fn expression_grammar_and_normal_form() {
        let e = K0Expression::parse("[P1]*[P1] - [P1xP1] + 2*[pt]").unwrap();
        assert_eq!(e.to_string(), "2*[point] + [p1]*[p1] - [p1xp1]");
        assert_eq!(K0Expression::parse("[P1] + [P1]").unwrap(), K0Expression::parse("2*[p1]").unwrap());
        assert!(K0Expression::parse("[P1] - [p1]").unwrap().is_zero());
        assert_eq!(K0Expression::parse("[pt]*[P1]").unwrap(), K0Expression::variety("p1"));
        assert_eq!(
            K0Expression::parse("([P1] + [pt]) * [P1]").unwrap(),
            K0Expression::parse("[P1]*[P1] + [P1]").unwrap()
        );
        assert_eq!(K0Expression::parse("-[P1] + 3").unwrap().to_string(), "3*[point] - [p1]");
        for bad in ["", "[P1", "[P1] +", "P1", "[P1] [P1]", "[]", "(2"] {
            assert!(matches!(K0Expression::parse(bad), Err(AtomError::Parse { .. })), "{bad}");
        }
    }

    fn small_points(eps: f64) -> PointAssignment {
        let mut p = PointAssignment::default();
        p.set("p1", pt(&[("q", eps)]));
        p.set("p1xp1", pt(&[("tp", 1.0)]));
        p
    }

    #[test]
    fn phi_is_additive() {
        let cat = Catalog::builtin();
        let cfg = SpectralConfig::default();
        let pts = small_points(1.0);
        let p1 = phi(&K0Expression::variety("p1"), &cat, &pts, &cfg).unwrap();
        let two = phi(&K0Expression::parse("[P1] + [P1]").unwrap(), &cat, &pts, &cfg).unwrap();
        assert!(two.same_combination(&p1.scale(2)));
        assert!(phi(&K0Expression::zero(), &cat, &pts, &cfg).unwrap().is_zero());
        let mixed = phi(&K0Expression::parse("[P1] + [pt]").unwrap(), &cat, &pts, &cfg).unwrap();
        let separately = p1.add(&phi(&K0Expression::one(), &cat, &pts, &cfg).unwrap());
        assert!(mixed.same_combination(&separately));
    }

    #[test]
    fn phi_of_a_product_is_close_to_the_tensor_at_small_q() {
        let cat = Catalog::builtin();
        let cfg = SpectralConfig::default();
        let pts = small_points(1e-6);
        let prod = phi(&K0Expression::parse("[P1]*[P1]").unwrap(), &cat, &pts, &cfg).unwrap();
        let tensor = phi_tensor_of_factors(&["p1".into(), "p1".into()], &cat, &pts, &cfg).unwrap();
        assert_eq!(prod.terms.len(), 1);
        assert!(prod.terms[0].0.distance(&tensor).unwrap() < 1e-8);
    }

    #[test]
    fn unknown_names_and_missing_points() {
        let cat = Catalog::builtin();
        let cfg = SpectralConfig::default();
        assert!(matches!(
            phi(&K0Expression::variety("p2"), &cat, &small_points(1.0), &cfg),
            Err(AtomError::Catalog(CatalogError::Unknown(_)))
        ));
        assert!(matches!(
            phi(&K0Expression::variety("p1"), &cat, &PointAssignment::default(), &cfg),
            Err(AtomError::MissingPoint { .. })
        ));
        let mut no_tp = small_points(1.0);
        no_tp.points.remove("p1xp1");
        assert!(matches!(
            phi(&K0Expression::parse("[P1]*[P1]").unwrap(), &cat, &no_tp, &cfg),
            Err(AtomError::MissingPoint { .. })
        ));
    }

    #[test]
    fn hom_check_for_p1_times_p1() {
        let r = hom_check(&Catalog::builtin(), "p1", "p1", &default_hom_schedule(), 1.0, &SpectralConfig::default()).unwrap();
        assert_eq!(r.rows.len(), 5);
        assert!(r.decreasing(), "{:?}", r.rows);
        assert!(r.final_distance().unwrap() <= 1e-8);
        assert_eq!(r.skipped.len(), 1);
    }

    #[test]
    fn hom_check_for_point_times_p1() {
        let r = hom_check(&Catalog::builtin(), "pt", "p1", &default_hom_schedule(), 1.0, &SpectralConfig::default()).unwrap();
        assert!(r.all_within(1e-12), "{:?}", r.rows);
    }
}

//! Truncated multivariate series in Novikov variables `q` (rational
//! exponents, bounded below) and insertion variables `t` (nonnegative
//! integer exponents).
//!
//! A series carries its own truncation: a threshold on the total q-order
//! and one on the total t-degree. Terms beyond either threshold are never
//! stored. Binary operations truncate to the componentwise minimum of their
//! inputs and never extend truncation.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Float, One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{format_rational64, parse_rational64, Coefficient};

/// Default lower bound on every q-exponent.
pub const DEFAULT_Q_FLOOR: i64 = -8;
/// Largest denominator bound `substitute` may introduce.
pub const DEFAULT_DENOMINATOR_LIMIT: i64 = 720;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("variable lists differ: {left} vs {right}")]
    VariableMismatch { left: String, right: String },
    #[error("denominator bounds differ: {0} vs {1}")]
    DenominatorMismatch(i64, i64),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("t-truncation exhausted while differentiating by `{var}`")]
    TruncationExhausted { var: String },
    #[error("q-exponent {exponent} is below the floor {floor}")]
    FloorViolation { exponent: String, floor: String },
    #[error("exponent {exponent} has a denominator not dividing the bound {bound}")]
    DenominatorBound { exponent: String, bound: i64 },
    #[error("denominator bound {needed} exceeds the limit {limit}")]
    DenominatorOverflow { needed: i64, limit: i64 },
    #[error("no substitution rule for `{0}`")]
    MissingRule(String),
    #[error("no value assigned to `{0}`")]
    MissingValue(String),
    #[error("`{0}` is zero but carries a negative or fractional exponent")]
    SingularPoint(String),
    #[error("operation undefined on the zero series")]
    ZeroSeries,
    #[error("malformed series document: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// Ordered variable names of a series.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variables {
    q: Vec<String>,
    t: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarId {
    Q(usize),
    T(usize),
}

impl Variables {
    pub fn new<S: Into<String>>(
        q: impl IntoIterator<Item = S>,
        t: impl IntoIterator<Item = S>,
    ) -> Result<Arc<Self>> {
        let q: Vec<String> = q.into_iter().map(Into::into).collect();
        let t: Vec<String> = t.into_iter().map(Into::into).collect();
        let mut seen = std::collections::BTreeSet::new();
        for name in q.iter().chain(t.iter()) {
            if !seen.insert(name.as_str()) {
                return Err(SeriesError::DuplicateVariable(name.clone()));
            }
        }
        Ok(Arc::new(Variables { q, t }))
    }

    pub fn q_names(&self) -> &[String] {
        &self.q
    }

    pub fn t_names(&self) -> &[String] {
        &self.t
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        if let Some(i) = self.q.iter().position(|v| v == name) {
            return Some(VarId::Q(i));
        }
        self.t.iter().position(|v| v == name).map(VarId::T)
    }

    pub fn name(&self, id: VarId) -> &str {
        match id {
            VarId::Q(i) => &self.q[i],
            VarId::T(i) => &self.t[i],
        }
    }

    fn describe(&self) -> String {
        format!("q{:?} t{:?}", self.q, self.t)
    }
}

/// Truncation thresholds: maximal total q-order and maximal total t-degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Truncation {
    pub q: Rational64,
    pub t: u32,
}

impl Truncation {
    pub fn new(q: Rational64, t: u32) -> Self {
        Truncation { q, t }
    }

    pub fn integral(q: i64, t: u32) -> Self {
        Truncation { q: Rational64::from_integer(q), t }
    }

    pub fn min(self, other: Truncation) -> Truncation {
        Truncation {
            q: self.q.min(other.q),
            t: self.t.min(other.t),
        }
    }

    pub fn admits(&self, m: &Monomial) -> bool {
        m.q_order() <= self.q && m.t_degree() <= self.t
    }
}

/// `q^a t^n` with rational `a` and nonnegative integer `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    q: Vec<Rational64>,
    t: Vec<u32>,
}

impl Monomial {
    pub fn new(q: Vec<Rational64>, t: Vec<u32>) -> Self {
        Monomial { q, t }
    }

    /// Integer q-exponents; convenient for tests and catalog data.
    pub fn int(q: &[i64], t: &[u32]) -> Self {
        Monomial {
            q: q.iter().map(|&e| Rational64::from_integer(e)).collect(),
            t: t.to_vec(),
        }
    }

    pub fn one(nq: usize, nt: usize) -> Self {
        Monomial {
            q: vec![Rational64::zero(); nq],
            t: vec![0; nt],
        }
    }

    pub fn q_exps(&self) -> &[Rational64] {
        &self.q
    }

    pub fn t_exps(&self) -> &[u32] {
        &self.t
    }

    pub fn q_order(&self) -> Rational64 {
        self.q.iter().fold(Rational64::zero(), |acc, e| acc + e)
    }

    pub fn t_degree(&self) -> u32 {
        self.t.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.q.iter().all(Zero::is_zero) && self.t.iter().all(|&n| n == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            q: self.q.iter().zip(&other.q).map(|(a, b)| a + b).collect(),
            t: self.t.iter().zip(&other.t).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.q_order()
            .cmp(&other.q_order())
            .then_with(|| self.q.cmp(&other.q))
            .then_with(|| self.t.cmp(&other.t))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Branch used for fractional powers in [`Series::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `z^e = exp(e · Log z)` with the principal logarithm.
    Principal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<T> {
    pub value: Complex<T>,
    pub branch: Branch,
    /// Whether any non-integer power was taken.
    pub fractional_powers: bool,
}

/// Old q-variable ↦ monomial in new q-variables, stored as an exponent
/// matrix (row per old variable, column per new variable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialMap {
    new_q: Vec<String>,
    rows: Vec<Vec<Rational64>>,
}

impl MonomialMap {
    pub fn new(new_q: Vec<String>, rows: Vec<Vec<Rational64>>) -> Self {
        MonomialMap { new_q, rows }
    }

    /// Builds the map from named rules, `old ↦ {new: exponent}`.
    pub fn from_rules(
        old_q: &[String],
        new_q: Vec<String>,
        rules: &BTreeMap<String, BTreeMap<String, Rational64>>,
    ) -> Result<Self> {
        for key in rules.keys() {
            if !old_q.contains(key) {
                return Err(SeriesError::UnknownVariable(key.clone()));
            }
        }
        let mut rows = Vec::with_capacity(old_q.len());
        for old in old_q {
            let rule = rules
                .get(old)
                .ok_or_else(|| SeriesError::MissingRule(old.clone()))?;
            let mut row = vec![Rational64::zero(); new_q.len()];
            for (name, e) in rule {
                let j = new_q
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| SeriesError::UnknownVariable(name.clone()))?;
                row[j] = *e;
            }
            rows.push(row);
        }
        Ok(MonomialMap { new_q, rows })
    }

    pub fn identity(names: &[String]) -> Self {
        let n = names.len();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Rational64::from_integer((i == j) as i64))
                    .collect()
            })
            .collect();
        MonomialMap { new_q: names.to_vec(), rows }
    }

    pub fn new_names(&self) -> &[String] {
        &self.new_q
    }

    pub fn rows(&self) -> &[Vec<Rational64>] {
        &self.rows
    }

    fn apply(&self, q: &[Rational64]) -> Vec<Rational64> {
        let mut out = vec![Rational64::zero(); self.new_q.len()];
        for (e, row) in q.iter().zip(&self.rows) {
            if e.is_zero() {
                continue;
            }
            for (o, r) in out.iter_mut().zip(row) {
                *o += e * r;
            }
        }
        out
    }

    fn denominator_lcm(&self) -> i64 {
        self.rows
            .iter()
            .flatten()
            .fold(1, |acc, e| acc.lcm(e.denom()))
    }
}

/// A truncated series with coefficients in `C`.
#[derive(Debug, Clone)]
pub struct Series<C> {
    vars: Arc<Variables>,
    den_bound: i64,
    floor: Rational64,
    trunc: Truncation,
    terms: BTreeMap<Monomial, C>,
}

/// Equality of variables, truncation and terms. The denominator bound and
/// exponent floor are capacities, not part of the value.
impl<C: PartialEq> PartialEq for Series<C> {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.trunc == other.trunc && self.terms == other.terms
    }
}

impl<C: Coefficient> Series<C> {
    pub fn zero(vars: Arc<Variables>, trunc: Truncation) -> Self {
        Series {
            vars,
            den_bound: 1,
            floor: Rational64::from_integer(DEFAULT_Q_FLOOR),
            trunc,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: Arc<Variables>, trunc: Truncation, c: C) -> Self {
        let mut s = Self::zero(vars, trunc);
        let one = Monomial::one(s.vars.q.len(), s.vars.t.len());
        if !c.is_zero() && trunc.admits(&one) {
            s.terms.insert(one, c);
        }
        s
    }

    /// A constant with the same variables, truncation and bounds as `self`.
    pub fn constant_like(&self, c: C) -> Self {
        let mut out = self.empty_like(self.trunc);
        let one = Monomial::one(self.vars.q.len(), self.vars.t.len());
        if !c.is_zero() && self.trunc.admits(&one) {
            out.terms.insert(one, c);
        }
        out
    }

    pub fn zero_like(&self) -> Self {
        self.empty_like(self.trunc)
    }

    /// Sums the given terms; terms beyond the truncation are dropped.
    pub fn from_terms(
        vars: Arc<Variables>,
        trunc: Truncation,
        terms: impl IntoIterator<Item = (Monomial, C)>,
    ) -> Result<Self> {
        Self::zero(vars, trunc).with_terms(terms)
    }

    /// Same series with a different denominator bound (validated).
    pub fn with_den_bound(mut self, den_bound: i64) -> Result<Self> {
        if den_bound < 1 {
            return Err(SeriesError::Schema(format!(
                "denominator bound must be positive, got {den_bound}"
            )));
        }
        self.den_bound = den_bound;
        for m in self.terms.keys() {
            self.check_exponents(m)?;
        }
        Ok(self)
    }

    pub fn with_floor(mut self, floor: Rational64) -> Result<Self> {
        self.floor = floor;
        for m in self.terms.keys() {
            self.check_exponents(m)?;
        }
        Ok(self)
    }

    pub fn with_terms(mut self, terms: impl IntoIterator<Item = (Monomial, C)>) -> Result<Self> {
        for (m, c) in terms {
            if m.q.len() != self.vars.q.len() || m.t.len() != self.vars.t.len() {
                return Err(SeriesError::Schema(format!(
                    "monomial arity ({}, {}) does not match variables {}",
                    m.q.len(),
                    m.t.len(),
                    self.vars.describe()
                )));
            }
            self.check_exponents(&m)?;
            if self.trunc.admits(&m) {
                accumulate(&mut self.terms, m, c);
            }
        }
        Ok(self)
    }

    fn check_exponents(&self, m: &Monomial) -> Result<()> {
        for e in &m.q {
            if *e < self.floor {
                return Err(SeriesError::FloorViolation {
                    exponent: format_rational64(e),
                    floor: format_rational64(&self.floor),
                });
            }
            if self.den_bound % e.denom() != 0 {
                return Err(SeriesError::DenominatorBound {
                    exponent: format_rational64(e),
                    bound: self.den_bound,
                });
            }
        }
        Ok(())
    }

    pub fn vars(&self) -> &Arc<Variables> {
        &self.vars
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn den_bound(&self) -> i64 {
        self.den_bound
    }

    pub fn floor(&self) -> Rational64 {
        self.floor
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in storage order: by total q-order, then lexicographically.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// The minimal total q-order of a term, `None` for the zero series.
    pub fn order(&self) -> Option<Rational64> {
        self.terms.keys().next().map(Monomial::q_order)
    }

    /// Same series restricted to the smaller of its own and `trunc`.
    pub fn truncated(&self, trunc: Truncation) -> Self {
        let trunc = self.trunc.min(trunc);
        Series {
            vars: self.vars.clone(),
            den_bound: self.den_bound,
            floor: self.floor,
            trunc,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| trunc.admits(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars {
            return Err(SeriesError::VariableMismatch {
                left: self.vars.describe(),
                right: other.vars.describe(),
            });
        }
        if self.den_bound != other.den_bound {
            return Err(SeriesError::DenominatorMismatch(
                self.den_bound,
                other.den_bound,
            ));
        }
        Ok(())
    }

    fn empty_like(&self, trunc: Truncation) -> Self {
        Series {
            vars: self.vars.clone(),
            den_bound: self.den_bound,
            floor: self.floor,
            trunc,
            terms: BTreeMap::new(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.truncated(other.trunc);
        out.floor = self.floor.max(other.floor);
        for (m, c) in &other.terms {
            if out.trunc.admits(m) {
                accumulate(&mut out.terms, m.clone(), c.clone());
            }
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.empty_like(self.trunc.min(other.trunc));
        out.floor = self.floor.max(other.floor);
        for (ma, ca) in &self.terms {
            let oa = ma.q_order();
            for (mb, cb) in &other.terms {
                // both maps iterate by ascending q-order
                if oa + mb.q_order() > out.trunc.q {
                    break;
                }
                let m = ma.mul(mb);
                if m.t_degree() > out.trunc.t {
                    continue;
                }
                out.check_exponents(&m)?;
                accumulate(&mut out.terms, m, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn scale(&self, k: &C) -> Self {
        if k.is_zero() {
            return self.empty_like(self.trunc);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.clone() * k.clone();
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    /// Logarithmic derivative `q ∂/∂q` for a q-variable, ordinary partial
    /// derivative for a t-variable.
    pub fn derive(&self, var: &str) -> Result<Self> {
        let id = self
            .vars
            .lookup(var)
            .ok_or_else(|| SeriesError::UnknownVariable(var.to_string()))?;
        self.derive_by(id)
    }

    pub fn derive_by(&self, id: VarId) -> Result<Self> {
        match id {
            VarId::Q(i) => {
                let mut out = self.empty_like(self.trunc);
                for (m, c) in &self.terms {
                    let e = m.q[i];
                    if !e.is_zero() {
                        accumulate(
                            &mut out.terms,
                            m.clone(),
                            c.clone() * C::from_rational64(e),
                        );
                    }
                }
                Ok(out)
            }
            VarId::T(i) => {
                // coefficients of degree T_max are only known up to T_max - 1 after ∂t
                if self.trunc.t == 0 {
                    return Err(SeriesError::TruncationExhausted {
                        var: self.vars.t[i].clone(),
                    });
                }
                let mut out = self.empty_like(Truncation::new(self.trunc.q, self.trunc.t - 1));
                for (m, c) in &self.terms {
                    let n = m.t[i];
                    if n > 0 {
                        let mut m2 = m.clone();
                        m2.t[i] -= 1;
                        accumulate(&mut out.terms, m2, c.clone() * C::from_ratio(n as i64, 1));
                    }
                }
                Ok(out)
            }
        }
    }

    /// Substitutes every q-variable by a monomial in new q-variables.
    /// The q-order threshold is kept and applied in the new variables.
    pub fn substitute(&self, map: &MonomialMap) -> Result<Self> {
        self.substitute_with_limit(map, DEFAULT_DENOMINATOR_LIMIT)
    }

    pub fn substitute_with_limit(&self, map: &MonomialMap, limit: i64) -> Result<Self> {
        if map.rows.len() != self.vars.q.len() {
            let missing = self
                .vars
                .q
                .get(map.rows.len())
                .cloned()
                .unwrap_or_else(|| "<extra rule>".to_string());
            return Err(SeriesError::MissingRule(missing));
        }
        if map.rows.iter().any(|r| r.len() != map.new_q.len()) {
            return Err(SeriesError::Schema("ragged substitution matrix".into()));
        }
        let vars = Variables::new(map.new_q.iter().cloned(), self.vars.t.iter().cloned())?;
        let mut den = self.den_bound.lcm(&map.denominator_lcm());
        let mut mapped = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let q = map.apply(&m.q);
            for e in &q {
                den = den.lcm(e.denom());
            }
            mapped.push((Monomial::new(q, m.t.clone()), c.clone()));
        }
        if den > limit {
            return Err(SeriesError::DenominatorOverflow { needed: den, limit });
        }
        let out = Series {
            vars,
            den_bound: den,
            floor: self.floor,
            trunc: self.trunc,
            terms: BTreeMap::new(),
        };
        out.with_terms(mapped)
    }

    /// Rewrites the series in a larger variable set: own q-variable `i`
    /// becomes target q-variable `q_map[i]`, likewise for t. The caller
    /// states the truncation the embedded series is valid to.
    pub fn embed(
        &self,
        vars: Arc<Variables>,
        q_map: &[usize],
        t_map: &[usize],
        trunc: Truncation,
    ) -> Result<Self> {
        if q_map.len() != self.vars.q.len() || t_map.len() != self.vars.t.len() {
            return Err(SeriesError::Schema("embedding arity mismatch".into()));
        }
        let nq = vars.q.len();
        let nt = vars.t.len();
        if q_map.iter().any(|&j| j >= nq) || t_map.iter().any(|&j| j >= nt) {
            return Err(SeriesError::Schema("embedding index out of range".into()));
        }
        let mut out = Series {
            vars,
            den_bound: self.den_bound,
            floor: self.floor,
            trunc,
            terms: BTreeMap::new(),
        };
        for (m, c) in &self.terms {
            let mut q = vec![Rational64::zero(); nq];
            let mut t = vec![0; nt];
            for (i, e) in m.q.iter().enumerate() {
                q[q_map[i]] += e;
            }
            for (i, n) in m.t.iter().enumerate() {
                t[t_map[i]] += n;
            }
            let m = Monomial::new(q, t);
            if trunc.admits(&m) {
                accumulate(&mut out.terms, m, c.clone());
            }
        }
        Ok(out)
    }

    /// The terms of minimal total q-order (t-exponents are ignored).
    pub fn min_order_part(&self) -> Result<Self> {
        let order = self.order().ok_or(SeriesError::ZeroSeries)?;
        let mut out = self.empty_like(self.trunc);
        out.terms = self
            .terms
            .iter()
            .take_while(|(m, _)| m.q_order() == order)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Ok(out)
    }

    /// Numeric value at a point. Coefficients are converted to floating
    /// point only here.
    pub fn evaluate<T: Float>(&self, point: &BTreeMap<String, Complex<T>>) -> Result<Evaluation<T>> {
        let lookup = |name: &String| {
            point
                .get(name)
                .copied()
                .ok_or_else(|| SeriesError::MissingValue(name.clone()))
        };
        let qv: Vec<Complex<T>> = self.vars.q.iter().map(lookup).collect::<Result<_>>()?;
        let tv: Vec<Complex<T>> = self.vars.t.iter().map(lookup).collect::<Result<_>>()?;
        let mut fractional = false;
        let mut total = Complex::new(T::zero(), T::zero());
        for (m, c) in &self.terms {
            let mut v = Complex::new(to_float::<T>(c.to_f64()), T::zero());
            for (i, e) in m.q.iter().enumerate() {
                if e.is_zero() {
                    continue;
                }
                let z = qv[i];
                let singular = *e < Rational64::zero() || !e.is_integer();
                if singular && z.re.is_zero() && z.im.is_zero() {
                    return Err(SeriesError::SingularPoint(self.vars.q[i].clone()));
                }
                if e.is_integer() {
                    v = v * z.powi(*e.numer() as i32);
                } else {
                    fractional = true;
                    let ex = to_float::<T>(*e.numer() as f64 / *e.denom() as f64);
                    v = v * (z.ln() * ex).exp();
                }
            }
            for (i, &n) in m.t.iter().enumerate() {
                if n > 0 {
                    v = v * tv[i].powi(n as i32);
                }
            }
            total = total + v;
        }
        Ok(Evaluation {
            value: total,
            branch: Branch::Principal,
            fractional_powers: fractional,
        })
    }

    pub fn to_doc(&self) -> SeriesDoc {
        SeriesDoc {
            q_vars: self.vars.q.clone(),
            t_vars: self.vars.t.clone(),
            den_bound: self.den_bound,
            trunc: TruncDoc {
                q: format_rational64(&self.trunc.q),
                t: self.trunc.t,
            },
            floor: (self.floor != Rational64::from_integer(DEFAULT_Q_FLOOR))
                .then(|| format_rational64(&self.floor)),
            terms: self.terms.iter().map(|(m, c)| term_doc(m, c)).collect(),
        }
    }

    pub fn from_doc(doc: &SeriesDoc) -> Result<Self> {
        let vars = Variables::new(doc.q_vars.iter().cloned(), doc.t_vars.iter().cloned())?;
        let trunc = Truncation::new(
            parse_rational64(&doc.trunc.q)
                .ok_or_else(|| SeriesError::Schema(format!("trunc.q: `{}`", doc.trunc.q)))?,
            doc.trunc.t,
        );
        let mut s = Series::zero(vars, trunc).with_den_bound(doc.den_bound)?;
        if let Some(f) = &doc.floor {
            let floor =
                parse_rational64(f).ok_or_else(|| SeriesError::Schema(format!("floor: `{f}`")))?;
            s = s.with_floor(floor)?;
        }
        let mut terms = Vec::with_capacity(doc.terms.len());
        for (k, t) in doc.terms.iter().enumerate() {
            let (m, c) = parse_term::<C>(t, k)?;
            if !trunc.admits(&m) {
                return Err(SeriesError::Schema(format!(
                    "terms[{k}] lies beyond the declared truncation"
                )));
            }
            terms.push((m, c));
        }
        s.with_terms(terms)
    }
}

fn to_float<T: Float>(x: f64) -> T {
    T::from(x).unwrap_or_else(T::nan)
}

fn accumulate<C: Coefficient>(terms: &mut BTreeMap<Monomial, C>, m: Monomial, c: C) {
    if c.is_zero() {
        return;
    }
    match terms.entry(m) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let sum = o.get().clone() + c;
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        /// Panics when the operands are incompatible; use the `checked_`
        /// method to handle that case.
        impl<'a, C: Coefficient> std::ops::$tr<&'a Series<C>> for &'a Series<C> {
            type Output = Series<C>;
            fn $method(self, rhs: &'a Series<C>) -> Series<C> {
                match self.$checked(rhs) {
                    Ok(s) => s,
                    Err(e) => panic!("series {}: {e}", stringify!($method)),
                }
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl<C: Coefficient> std::ops::Neg for &Series<C> {
    type Output = Series<C>;
    fn neg(self) -> Series<C> {
        Series::neg(self)
    }
}

impl<C: Coefficient> fmt::Display for Series<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let negative = *c < C::zero();
            let abs = if negative { -c.clone() } else { c.clone() };
            if k == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { '-' } else { '+' })?;
            }
            let mono = format_monomial(&self.vars, m);
            match (abs.is_one(), mono.is_empty()) {
                (_, true) => write!(f, "{}", abs.format_coeff())?,
                (true, false) => write!(f, "{mono}")?,
                (false, false) => write!(f, "{}*{mono}", abs.format_coeff())?,
            }
        }
        Ok(())
    }
}

fn format_monomial(vars: &Variables, m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (name, e) in vars.q.iter().zip(&m.q) {
        if e.is_zero() {
            continue;
        }
        if e.is_one() {
            parts.push(name.clone());
        } else if e.is_integer() {
            parts.push(format!("{name}^{}", e.numer()));
        } else {
            parts.push(format!("{name}^({})", format_rational64(e)));
        }
    }
    for (name, &n) in vars.t.iter().zip(&m.t) {
        match n {
            0 => {}
            1 => parts.push(name.clone()),
            _ => parts.push(format!("{name}^{n}")),
        }
    }
    parts.join("*")
}

/// JSON form of a series; exponents and coefficients as rational strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesDoc {
    pub q_vars: Vec<String>,
    pub t_vars: Vec<String>,
    pub den_bound: i64,
    pub trunc: TruncDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<String>,
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncDoc {
    pub q: String,
    pub t: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub q: Vec<String>,
    pub t: Vec<u32>,
    pub c: String,
}

pub(crate) fn term_doc<C: Coefficient>(m: &Monomial, c: &C) -> TermDoc {
    TermDoc {
        q: m.q.iter().map(format_rational64).collect(),
        t: m.t.clone(),
        c: c.format_coeff(),
    }
}

pub(crate) fn parse_term<C: Coefficient>(t: &TermDoc, k: usize) -> Result<(Monomial, C)> {
    let q = t
        .q
        .iter()
        .map(|e| {
            parse_rational64(e)
                .ok_or_else(|| SeriesError::Schema(format!("terms[{k}].q: `{e}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let c = C::parse_coeff(&t.c)
        .ok_or_else(|| SeriesError::Schema(format!("terms[{k}].c: `{}`", t.c)))?;
    Ok((Monomial::new(q, t.t.clone()), c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type S = Series<BigRational>;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn vars() -> Arc<Variables> {
        Variables::new(["q1", "q2"], ["tp"]).unwrap()
    }

    fn tr() -> Truncation {
        Truncation::integral(6, 8)
    }

    fn s(terms: &[(i64, i64, &[i64], &[u32])]) -> S {
        S::from_terms(
            vars(),
            tr(),
            terms.iter().map(|&(n, d, q, t)| (Monomial::int(q, t), r(n, d))),
        )
        .unwrap()
    }

    #[test]
    fn addition_is_termwise() {
        let a = s(&[(1, 1, &[1, 0], &[0]), (1, 1, &[0, 1], &[0])]);
        let b = s(&[(1, 1, &[1, 0], &[0])]);
        assert_eq!(&a + &b, s(&[(2, 1, &[1, 0], &[0]), (1, 1, &[0, 1], &[0])]));
        assert!((&a - &a).is_zero());
    }

    #[test]
    fn product_respects_t_truncation() {
        let v = vars();
        let t3 = Truncation::integral(6, 3);
        let a = S::from_terms(v.clone(), t3, [(Monomial::int(&[1, 0], &[1]), r(1, 1))]).unwrap();
        let b = S::from_terms(v.clone(), t3, [(Monomial::int(&[0, 1], &[2]), r(1, 1))]).unwrap();
        let p = &a * &b;
        assert_eq!(p.coeff(&Monomial::int(&[1, 1], &[3])), r(1, 1));
        let p2 = &p * &a;
        assert!(p2.is_zero(), "t-degree 4 exceeds the bound 3");
    }

    #[test]
    fn half_exponents_add() {
        let v = Variables::new(["q1"], Vec::<&str>::new()).unwrap();
        let half = Monomial::new(vec![Rational64::new(1, 2)], vec![]);
        let a = S::from_terms(v.clone(), Truncation::integral(2, 0), [(half, r(1, 1))])
            .unwrap_err();
        assert!(matches!(a, SeriesError::DenominatorBound { .. }));
        let a = S::zero(v.clone(), Truncation::integral(2, 0))
            .with_den_bound(2)
            .unwrap()
            .with_terms([(Monomial::new(vec![Rational64::new(1, 2)], vec![]), r(1, 1))])
            .unwrap();
        let p = &a * &a;
        assert_eq!(p.len(), 1);
        assert_eq!(p.coeff(&Monomial::int(&[1], &[])), r(1, 1));
    }

    #[test]
    fn incompatible_operands_are_errors() {
        let a = s(&[(1, 1, &[1, 0], &[0])]);
        let other = S::from_terms(
            Variables::new(["q1", "q3"], ["tp"]).unwrap(),
            tr(),
            [(Monomial::int(&[1, 0], &[0]), r(1, 1))],
        )
        .unwrap();
        assert!(matches!(
            a.checked_add(&other),
            Err(SeriesError::VariableMismatch { .. })
        ));
        let d2 = a.clone().with_den_bound(2).unwrap();
        assert!(matches!(
            a.checked_mul(&d2),
            Err(SeriesError::DenominatorMismatch(1, 2))
        ));
    }

    #[test]
    fn derivatives() {
        let g = s(&[(1, 6, &[1, 1], &[3])]);
        assert_eq!(g.derive("q1").unwrap(), g);
        let dt = g.derive("tp").unwrap();
        assert_eq!(dt.coeff(&Monomial::int(&[1, 1], &[2])), r(1, 2));
        assert_eq!(dt.truncation().t, 7);
        assert!(matches!(
            g.derive("x"),
            Err(SeriesError::UnknownVariable(_))
        ));
        let exhausted = g.truncated(Truncation::integral(6, 0));
        assert!(matches!(
            exhausted.derive("tp"),
            Err(SeriesError::TruncationExhausted { .. })
        ));
    }

    #[test]
    fn floor_is_enforced() {
        let a = s(&[(1, 1, &[-5, 0], &[0])]);
        assert!(matches!(
            a.checked_mul(&a),
            Err(SeriesError::FloorViolation { .. })
        ));
        let ok = a.clone().with_floor(Rational64::from_integer(-10)).unwrap();
        assert_eq!((&ok * &ok).len(), 1);
    }

    #[test]
    fn min_order_part_of_zero_is_an_error() {
        assert_eq!(S::zero(vars(), tr()).min_order_part(), Err(SeriesError::ZeroSeries));
        let a = s(&[(2, 1, &[0, 0], &[0]), (-1, 3, &[1, 1], &[3])]);
        assert_eq!(a.min_order_part().unwrap(), s(&[(2, 1, &[0, 0], &[0])]));
    }

    #[test]
    fn evaluation_rejects_singular_points() {
        let v = Variables::new(["q"], Vec::<&str>::new()).unwrap();
        let a = S::from_terms(v, Truncation::integral(2, 0), [(Monomial::int(&[-1], &[]), r(1, 1))])
            .unwrap();
        let mut p = BTreeMap::new();
        p.insert("q".to_string(), Complex::new(0.0f64, 0.0));
        assert_eq!(a.evaluate(&p), Err(SeriesError::SingularPoint("q".into())));
        p.clear();
        assert_eq!(a.evaluate::<f64>(&p), Err(SeriesError::MissingValue("q".into())));
    }

    #[test]
    fn display_is_readable() {
        let a = s(&[(2, 1, &[1, 0], &[0]), (-1, 3, &[1, 1], &[3]), (1, 1, &[0, 0], &[0])]);
        assert_eq!(a.to_string(), "1 + 2*q1 - 1/3*q1*q2*tp^3");
    }

    #[test]
    fn document_rejects_terms_beyond_truncation() {
        let mut doc = s(&[(1, 1, &[1, 0], &[1])]).to_doc();
        doc.trunc.q = "0".into();
        assert!(matches!(S::from_doc(&doc), Err(SeriesError::Schema(_))));
    }
}

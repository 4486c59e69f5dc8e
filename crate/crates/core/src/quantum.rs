//! Gromov–Witten potentials, the quantum product and the quantum
//! connection matrices, plus structural checks for product varieties.
//!
//! Variable conventions: the k-th Novikov variable belongs to the k-th
//! divisor in increasing basis order, the a-th insertion variable to the
//! a-th basis element that is neither the unit nor a divisor. The unit
//! carries no variable (`t₀ = 0`), so `∂₀Γ = 0`.

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohomology::{kunneth_product, CohomologyModel, DualData, FactorSplit, ModelError, Side};
use crate::matrix::{Dense, SeriesMatrix};
use crate::scalar::Coefficient;
use crate::series::{Monomial, Series, SeriesDoc, SeriesError, Truncation, TruncDoc, TermDoc, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantumError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("potential refers to model `{potential}` but the model is `{model}`")]
    ModelMismatch { potential: String, model: String },
    #[error("potential has {found} {kind}-variables, model needs {expected}")]
    VariableCount { kind: &'static str, found: usize, expected: usize },
    #[error("truncation too small for Γ_{{{i}{j}{k}}}: needs t-degree ≥ {required}")]
    InsufficientTruncation { i: usize, j: usize, k: usize, required: u32 },
    #[error("model `{0}` carries no factor split")]
    MissingFactorSplit(String),
    #[error("basis order of `{product}` does not match the Künneth product of its factors")]
    BasisOrderMismatch { product: String },
    #[error("index {0} out of range")]
    Index(usize),
}

pub type Result<T> = std::result::Result<T, QuantumError>;

/// The quantum part of the genus-zero potential of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<C> {
    pub model_ref: String,
    pub series: Series<C>,
}

impl<C: Coefficient> Potential<C> {
    pub fn to_doc(&self) -> PotentialDoc {
        let s = self.series.to_doc();
        PotentialDoc {
            model_ref: self.model_ref.clone(),
            q_vars: s.q_vars,
            t_vars: s.t_vars,
            den_bound: s.den_bound,
            trunc: s.trunc,
            floor: s.floor,
            terms: s.terms,
        }
    }

    pub fn from_doc(doc: &PotentialDoc) -> std::result::Result<Self, SeriesError> {
        let series = Series::from_doc(&SeriesDoc {
            q_vars: doc.q_vars.clone(),
            t_vars: doc.t_vars.clone(),
            den_bound: doc.den_bound,
            trunc: doc.trunc.clone(),
            floor: doc.floor.clone(),
            terms: doc.terms.clone(),
        })?;
        Ok(Potential {
            model_ref: doc.model_ref.clone(),
            series,
        })
    }

    pub fn truncated(&self, trunc: Truncation) -> Self {
        Potential {
            model_ref: self.model_ref.clone(),
            series: self.series.truncated(trunc),
        }
    }
}

/// Series document plus the name of the model it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialDoc {
    pub model_ref: String,
    pub q_vars: Vec<String>,
    pub t_vars: Vec<String>,
    pub den_bound: i64,
    pub trunc: TruncDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<String>,
    pub terms: Vec<TermDoc>,
}

/// What a basis element contributes as a coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Unit,
    Novikov(usize),
    Insertion(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionViolation {
    pub monomial: Monomial,
    pub display: String,
    pub lhs: String,
    pub rhs: String,
}

/// `K`, the `A_i` and `G` of the quantum connection.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionFamily<C> {
    pub k: SeriesMatrix<C>,
    pub a: Vec<SeriesMatrix<C>>,
    pub g: Dense<C>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport<C> {
    pub checked: usize,
    /// Triples with a nonzero residual, with the largest |coefficient|.
    pub failures: Vec<((usize, usize, usize), C)>,
    pub max_residual: C,
    pub truncation: Option<Truncation>,
}

impl<C: Coefficient> IdentityReport<C> {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Classification {
    pub pure_x: Vec<Monomial>,
    pub pure_y: Vec<Monomial>,
    pub mixed: Vec<Monomial>,
    pub constant: Vec<Monomial>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureMismatch {
    pub side: Side,
    /// Product monomial(s) that strip to `factor_monomial`, or empty when
    /// the factor term has no counterpart.
    pub product_monomials: Vec<String>,
    pub factor_monomial: String,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureMatchReport {
    pub mismatches: Vec<PureMismatch>,
    /// Pure monomials whose other-side or mixed insertions were stripped:
    /// `(product monomial, stripped factor)`.
    pub bookkeeping: Vec<(String, String)>,
    /// Stripped monomials hit by more than one product monomial.
    pub ambiguous: Vec<String>,
    pub mixed_terms: usize,
    pub constant_terms: usize,
}

impl PureMatchReport {
    pub fn agrees(&self) -> bool {
        self.mismatches.is_empty() && self.ambiguous.is_empty()
    }

    /// The potential is exactly pure-X plus pure-Y with matching parts.
    pub fn decomposition_exact(&self) -> bool {
        self.agrees() && self.mixed_terms == 0 && self.constant_terms == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PurityStatus {
    Pass,
    /// `Γ_abc` vanishes at this truncation.
    Empty,
    Violation(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapEntry {
    pub row: usize,
    pub col: usize,
    pub residual_order: Option<Rational64>,
    pub kronecker_order: Option<Rational64>,
    /// Residual order exceeds Kronecker order (vacuous when either is zero).
    pub gap_ok: bool,
    /// Every residual monomial involves Novikov variables of both factors.
    pub mixed_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport<C> {
    pub kronecker: SeriesMatrix<C>,
    pub residual: SeriesMatrix<C>,
    pub gaps: Vec<GapEntry>,
}

impl<C: Coefficient> DecompositionReport<C> {
    /// The leading-order statement: wherever the Kronecker part is
    /// nonzero, the residual starts at strictly higher order.
    pub fn gaps_hold(&self) -> bool {
        self.gaps.iter().all(|g| g.gap_ok)
    }

    pub fn residual_is_zero(&self) -> bool {
        self.residual.entries().all(|(_, s)| s.is_zero())
    }
}

/// A model together with its potential and cached third derivatives.
#[derive(Debug, Clone)]
pub struct QuantumModel<C> {
    model: CohomologyModel<C>,
    dual: DualData<C>,
    potential: Potential<C>,
    roles: Vec<Role>,
    third: Vec<std::result::Result<Series<C>, QuantumError>>,
}

impl<C: Coefficient> QuantumModel<C> {
    pub fn new(model: CohomologyModel<C>, potential: Potential<C>) -> Result<Self> {
        model.ensure_valid()?;
        if potential.model_ref != model.name {
            return Err(QuantumError::ModelMismatch {
                potential: potential.model_ref.clone(),
                model: model.name.clone(),
            });
        }
        let n = model.rank();
        let mut roles = vec![Role::Unit; n];
        let novikov = model.novikov_indices();
        let insertions = model.insertion_indices();
        for (k, &i) in novikov.iter().enumerate() {
            roles[i] = Role::Novikov(k);
        }
        for (a, &i) in insertions.iter().enumerate() {
            roles[i] = Role::Insertion(a);
        }
        let vars = potential.series.vars();
        if vars.q_names().len() != novikov.len() {
            return Err(QuantumError::VariableCount {
                kind: "q",
                found: vars.q_names().len(),
                expected: novikov.len(),
            });
        }
        if vars.t_names().len() != insertions.len() {
            return Err(QuantumError::VariableCount {
                kind: "t",
                found: vars.t_names().len(),
                expected: insertions.len(),
            });
        }
        let dual = model.dual_basis()?;
        let mut qm = QuantumModel {
            model,
            dual,
            potential,
            roles,
            third: Vec::new(),
        };
        qm.third = qm.third_derivatives();
        Ok(qm)
    }

    fn derive_index(&self, s: &Series<C>, i: usize) -> std::result::Result<Series<C>, SeriesError> {
        match self.roles[i] {
            Role::Unit => Ok(s.zero_like()),
            Role::Novikov(k) => s.derive_by(VarId::Q(k)),
            Role::Insertion(a) => s.derive_by(VarId::T(a)),
        }
    }

    fn third_derivatives(&self) -> Vec<std::result::Result<Series<C>, QuantumError>> {
        let n = self.rank();
        let gamma = &self.potential.series;
        let mut sorted: BTreeMap<(usize, usize, usize), std::result::Result<Series<C>, QuantumError>> =
            BTreeMap::new();
        for i in 0..n {
            let d1 = self.derive_index(gamma, i);
            for j in i..n {
                let d2 = d1.clone().and_then(|s| self.derive_index(&s, j));
                for k in j..n {
                    let d3 = d2.clone().and_then(|s| self.derive_index(&s, k));
                    let d3 = d3.map_err(|e| match e {
                        SeriesError::TruncationExhausted { .. } => {
                            let required = [i, j, k]
                                .iter()
                                .filter(|&&x| matches!(self.roles[x], Role::Insertion(_)))
                                .count() as u32;
                            QuantumError::InsufficientTruncation { i, j, k, required }
                        }
                        other => other.into(),
                    });
                    sorted.insert((i, j, k), d3);
                }
            }
        }
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut key = [i, j, k];
                    key.sort_unstable();
                    out.push(sorted[&(key[0], key[1], key[2])].clone());
                }
            }
        }
        out
    }

    pub fn model(&self) -> &CohomologyModel<C> {
        &self.model
    }

    pub fn dual(&self) -> &DualData<C> {
        &self.dual
    }

    pub fn potential(&self) -> &Potential<C> {
        &self.potential
    }

    pub fn gamma(&self) -> &Series<C> {
        &self.potential.series
    }

    pub fn rank(&self) -> usize {
        self.model.rank()
    }

    pub fn role(&self, i: usize) -> Role {
        self.roles[i]
    }

    /// The basis index carrying Novikov variable `k`.
    pub fn novikov_index(&self, k: usize) -> usize {
        self.roles.iter().position(|r| *r == Role::Novikov(k)).expect("novikov variable")
    }

    /// The basis index carrying insertion variable `a`.
    pub fn insertion_index(&self, a: usize) -> usize {
        self.roles.iter().position(|r| *r == Role::Insertion(a)).expect("insertion variable")
    }

    /// `Γ_ijk = ∂_i ∂_j ∂_k Γ`.
    pub fn gamma_ijk(&self, i: usize, j: usize, k: usize) -> Result<&Series<C>> {
        let n = self.rank();
        if i >= n || j >= n || k >= n {
            return Err(QuantumError::Index(i.max(j).max(k)));
        }
        self.third[(i * n + j) * n + k].as_ref().map_err(Clone::clone)
    }

    /// Coefficients of `T_i ∗ T_j = T_i·T_j + Σ Γ_ije g^ef T_f`.
    pub fn quantum_product(&self, i: usize, j: usize) -> Result<Vec<Series<C>>> {
        let n = self.rank();
        if i >= n || j >= n {
            return Err(QuantumError::Index(i.max(j)));
        }
        let ginv = &self.dual.pairing_inverse;
        let gamma = self.gamma();
        let mut out = Vec::with_capacity(n);
        for f in 0..n {
            let mut v = gamma.constant_like(self.model.cup[i][j][f].clone());
            for e in 0..n {
                if ginv[e][f].is_zero() {
                    continue;
                }
                let g = self.gamma_ijk(i, j, e)?;
                v = v.checked_add(&g.scale(&ginv[e][f]))?;
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Coefficients of `c1 + Σ (2 − deg T_a) t_a T_a` over insertion
    /// directions.
    pub fn euler_field(&self) -> Vec<Series<C>> {
        let gamma = self.gamma();
        let vars = gamma.vars();
        (0..self.rank())
            .map(|a| {
                let mut e = gamma.constant_like(self.model.c1[a].clone());
                if let Role::Insertion(t) = self.roles[a] {
                    let weight = 2 - self.model.degree(a) as i64;
                    if weight != 0 {
                        let mut texp = vec![0; vars.t_names().len()];
                        texp[t] = 1;
                        let m = Monomial::new(vec![Rational64::zero(); vars.q_names().len()], texp);
                        let term = gamma
                            .zero_like()
                            .with_terms([(m, C::from_ratio(weight, 1))])
                            .expect("unit monomial fits the potential's bounds");
                        e = &e + &term;
                    }
                }
                e
            })
            .collect()
    }

    /// Matrix of quantum multiplication by `T_a`; column `j` is `T_a ∗ T_j`.
    pub fn multiplication_matrix(&self, a: usize) -> Result<SeriesMatrix<C>> {
        let n = self.rank();
        let cols = (0..n).map(|j| self.quantum_product(a, j)).collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix::from_fn(n, |f, j| cols[j][f].clone()))
    }

    /// `K`: quantum multiplication by the Euler field.
    pub fn connection_k(&self) -> Result<SeriesMatrix<C>> {
        let n = self.rank();
        let euler = self.euler_field();
        let products = self.all_products()?;
        let zero = self.gamma().zero_like();
        let mut rows = vec![vec![zero.clone(); n]; n];
        for (a, e) in euler.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            for j in 0..n {
                for f in 0..n {
                    let prod = &products[a][j][f];
                    if prod.is_zero() {
                        // keep the entry's truncation unaffected by exact zeros
                        continue;
                    }
                    rows[f][j] = rows[f][j].checked_add(&e.checked_mul(prod)?)?;
                }
            }
        }
        Ok(SeriesMatrix::from_rows(rows)?)
    }

    pub fn connection_family(&self) -> Result<ConnectionFamily<C>> {
        Ok(ConnectionFamily {
            k: self.connection_k()?,
            a: (0..self.rank())
                .map(|a| self.multiplication_matrix(a))
                .collect::<Result<_>>()?,
            g: grading_g(&self.model),
        })
    }

    fn all_products(&self) -> Result<Vec<Vec<Vec<Series<C>>>>> {
        let n = self.rank();
        (0..n)
            .map(|i| (0..n).map(|j| self.quantum_product(i, j)).collect())
            .collect()
    }

    /// Flags monomials violating `Σ n_a (deg T_a/2 − 1) = dim − 3 + ∫_β c1`.
    pub fn dimension_validate(&self) -> Vec<DimensionViolation> {
        dimension_validate(&self.model, &self.potential)
    }

    /// Exact check of `(T_i∗T_j)∗T_k = T_i∗(T_j∗T_k)` for all triples,
    /// compared at the common truncation (further cut to `order`).
    pub fn associativity_check(&self, order: Option<Truncation>) -> Result<IdentityReport<C>> {
        let n = self.rank();
        let p = self.all_products()?;
        let triples: Vec<(usize, usize, usize)> = (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
            .collect();
        let residuals = triples
            .par_iter()
            .map(|&(i, j, k)| -> Result<C> {
                let mut worst = C::zero();
                for f in 0..n {
                    let mut lhs = self.gamma().zero_like();
                    let mut rhs = self.gamma().zero_like();
                    for m in 0..n {
                        lhs = lhs.checked_add(&p[i][j][m].checked_mul(&p[m][k][f])?)?;
                        rhs = rhs.checked_add(&p[j][k][m].checked_mul(&p[i][m][f])?)?;
                    }
                    worst = max_abs(worst, &residual(&lhs, &rhs, order)?);
                }
                Ok(worst)
            })
            .collect::<Result<Vec<C>>>()?;
        Ok(collect_report(&triples, residuals, order))
    }

    /// Exact check of `g(T_i∗T_j, T_k) = g(T_i, T_j∗T_k)`.
    pub fn frobenius_check(&self) -> Result<IdentityReport<C>> {
        let n = self.rank();
        let p = self.all_products()?;
        let g = &self.model.pairing;
        let mut triples = Vec::new();
        let mut residuals = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut lhs = self.gamma().zero_like();
                    let mut rhs = self.gamma().zero_like();
                    for f in 0..n {
                        if !g[f][k].is_zero() {
                            lhs = lhs.checked_add(&p[i][j][f].scale(&g[f][k]))?;
                        }
                        if !g[i][f].is_zero() {
                            rhs = rhs.checked_add(&p[j][k][f].scale(&g[i][f]))?;
                        }
                    }
                    triples.push((i, j, k));
                    residuals.push(max_abs(C::zero(), &residual(&lhs, &rhs, None)?));
                }
            }
        }
        Ok(collect_report(&triples, residuals, None))
    }

    fn split(&self) -> Result<&FactorSplit> {
        self.model
            .factors
            .as_ref()
            .ok_or_else(|| QuantumError::MissingFactorSplit(self.model.name.clone()))
    }

    /// Side of each Novikov variable of a product model.
    fn novikov_sides(&self) -> Result<Vec<Side>> {
        let fs = self.split()?;
        let n_q = self.gamma().vars().q_names().len();
        Ok((0..n_q)
            .map(|k| fs.side(self.novikov_index(k)).expect("divisors of a product lie on one factor"))
            .collect())
    }

    /// Partitions the potential's monomials by the factors their curve
    /// class involves.
    pub fn classify_monomials(&self) -> Result<Classification> {
        let sides = self.novikov_sides()?;
        let mut out = Classification::default();
        for (m, _) in self.gamma().terms() {
            match support(m, &sides) {
                (false, false) => out.constant.push(m.clone()),
                (true, false) => out.pure_x.push(m.clone()),
                (false, true) => out.pure_y.push(m.clone()),
                (true, true) => out.mixed.push(m.clone()),
            }
        }
        Ok(out)
    }

    /// Maps of a factor's q- and t-variables into this product's variables:
    /// factor index `i` ↦ product index `(i, unit)` (or `(unit, i)`).
    pub fn factor_embedding(&self, side: Side, factor: &QuantumModel<C>) -> Result<(Vec<usize>, Vec<usize>)> {
        let fs = self.split()?;
        let (name, rank) = match side {
            Side::X => (&fs.x, fs.x_rank),
            Side::Y => (&fs.y, fs.y_rank),
        };
        if *name != factor.model.name || rank != factor.rank() {
            return Err(QuantumError::BasisOrderMismatch {
                product: self.model.name.clone(),
            });
        }
        let lift = |i: usize| match side {
            Side::X => fs.join(i, fs.y_unit),
            Side::Y => fs.join(fs.x_unit, i),
        };
        let fv = factor.gamma().vars();
        let q_map = (0..fv.q_names().len())
            .map(|k| match self.roles[lift(factor.novikov_index(k))] {
                Role::Novikov(p) => Ok(p),
                _ => Err(QuantumError::BasisOrderMismatch {
                    product: self.model.name.clone(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        let t_map = (0..fv.t_names().len())
            .map(|a| match self.roles[lift(factor.insertion_index(a))] {
                Role::Insertion(p) => Ok(p),
                _ => Err(QuantumError::BasisOrderMismatch {
                    product: self.model.name.clone(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((q_map, t_map))
    }

    /// Compares the pure parts of this product potential with the factor
    /// potentials. Other-side and mixed insertions attached to a pure
    /// class are stripped and listed rather than compared.
    pub fn pure_part_match(&self, px: &QuantumModel<C>, py: &QuantumModel<C>) -> Result<PureMatchReport> {
        let fs = self.split()?;
        let class = self.classify_monomials()?;
        let vars = self.gamma().vars();
        let mut report = PureMatchReport {
            mismatches: Vec::new(),
            bookkeeping: Vec::new(),
            ambiguous: Vec::new(),
            mixed_terms: class.mixed.len(),
            constant_terms: class.constant.len(),
        };
        for (side, factor, monos) in [(Side::X, px, &class.pure_x), (Side::Y, py, &class.pure_y)] {
            let (q_map, t_map) = self.factor_embedding(side, factor)?;
            let fvars = factor.gamma().vars().clone();
            let common = Truncation::new(
                self.gamma().truncation().q.min(factor.gamma().truncation().q),
                self.gamma().truncation().t,
            );
            let mut stripped: BTreeMap<Monomial, (C, Vec<String>)> = BTreeMap::new();
            for m in monos.iter() {
                if m.q_order() > common.q {
                    continue;
                }
                let fq: Vec<Rational64> = q_map.iter().map(|&p| m.q_exps()[p]).collect();
                let ft: Vec<u32> = t_map.iter().map(|&p| m.t_exps()[p]).collect();
                let fm = Monomial::new(fq, ft);
                let mut rest = m.t_exps().to_vec();
                for &p in &t_map {
                    rest[p] = 0;
                }
                let display = monomial_display(vars, m);
                if rest.iter().any(|&x| x > 0) {
                    let factor_part = Monomial::new(vec![Rational64::zero(); m.q_exps().len()], rest);
                    report.bookkeeping.push((display.clone(), monomial_display(vars, &factor_part)));
                }
                let c = self.gamma().coeff(m);
                let entry = stripped.entry(fm).or_insert_with(|| (C::zero(), Vec::new()));
                entry.0 = entry.0.clone() + c;
                entry.1.push(display);
            }
            for (fm, (_, origins)) in &stripped {
                if origins.len() > 1 {
                    report.ambiguous.push(monomial_display(&fvars, fm));
                }
            }
            let fgamma = factor.gamma();
            let mut keys: Vec<&Monomial> = stripped.keys().collect();
            for (m, _) in fgamma.terms() {
                if m.q_order() <= common.q && !stripped.contains_key(m) {
                    keys.push(m);
                }
            }
            keys.sort();
            for fm in keys {
                let found = stripped.get(fm).map(|(c, _)| c.clone()).unwrap_or_else(C::zero);
                let expected = fgamma.coeff(fm);
                if found != expected {
                    report.mismatches.push(PureMismatch {
                        side,
                        product_monomials: stripped.get(fm).map(|(_, o)| o.clone()).unwrap_or_default(),
                        factor_monomial: monomial_display(&fvars, fm),
                        expected: expected.format_coeff(),
                        found: found.format_coeff(),
                    });
                }
            }
            let _ = fs;
        }
        Ok(report)
    }

    /// Checks that no minimal-order monomial of `Γ_abc` comes from a mixed
    /// curve class.
    pub fn leading_purity_check(&self, a: usize, b: usize, c: usize) -> Result<PurityStatus> {
        let sides = self.novikov_sides()?;
        let g = self.gamma_ijk(a, b, c)?;
        if g.is_zero() {
            return Ok(PurityStatus::Empty);
        }
        let lead = g.min_order_part()?;
        let bad: Vec<String> = lead
            .terms()
            .filter(|(m, _)| support(m, &sides) == (true, true))
            .map(|(m, _)| monomial_display(g.vars(), m))
            .collect();
        Ok(if bad.is_empty() {
            PurityStatus::Pass
        } else {
            PurityStatus::Violation(bad)
        })
    }
}

fn support(m: &Monomial, sides: &[Side]) -> (bool, bool) {
    let mut x = false;
    let mut y = false;
    for (e, s) in m.q_exps().iter().zip(sides) {
        if !e.is_zero() {
            match s {
                Side::X => x = true,
                Side::Y => y = true,
            }
        }
    }
    (x, y)
}

fn residual<C: Coefficient>(lhs: &Series<C>, rhs: &Series<C>, order: Option<Truncation>) -> Result<Series<C>> {
    let mut d = lhs.checked_sub(rhs)?;
    if let Some(t) = order {
        d = d.truncated(t);
    }
    Ok(d)
}

fn max_abs<C: Coefficient>(acc: C, s: &Series<C>) -> C {
    s.terms().fold(acc, |acc, (_, c)| {
        let a = c.abs();
        if a > acc {
            a
        } else {
            acc
        }
    })
}

fn collect_report<C: Coefficient>(
    triples: &[(usize, usize, usize)],
    residuals: Vec<C>,
    order: Option<Truncation>,
) -> IdentityReport<C> {
    let mut failures = Vec::new();
    let mut max_residual = C::zero();
    for (t, r) in triples.iter().zip(residuals) {
        if !r.is_zero() {
            if r > max_residual {
                max_residual = r.clone();
            }
            failures.push((*t, r));
        }
    }
    IdentityReport {
        checked: triples.len(),
        failures,
        max_residual,
        truncation: order,
    }
}

pub(crate) fn monomial_display(vars: &crate::series::Variables, m: &Monomial) -> String {
    let s = Series::<num_rational::BigRational>::from_terms(
        std::sync::Arc::new(vars.clone()),
        Truncation::new(m.q_order(), m.t_degree()),
        [(m.clone(), num_rational::BigRational::from_ratio(1, 1))],
    );
    match s {
        Ok(s) if !s.is_zero() => s.to_string(),
        _ => format!("{:?}", m),
    }
}

/// `G` acting on degree-d classes as `(d − 2)/2`.
pub fn grading_g<C: Coefficient>(model: &CohomologyModel<C>) -> Dense<C> {
    let n = model.rank();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        C::from_ratio(model.degree(i) as i64 - 2, 2)
                    } else {
                        C::zero()
                    }
                })
                .collect()
        })
        .collect()
}

/// Dimension constraint on every monomial of a potential. Assumes the
/// potential's variables follow the model's variable conventions.
pub fn dimension_validate<C: Coefficient>(
    model: &CohomologyModel<C>,
    potential: &Potential<C>,
) -> Vec<DimensionViolation> {
    let insertions = model.insertion_indices();
    let vars = potential.series.vars();
    let mut out = Vec::new();
    for (m, _) in potential.series.terms() {
        let lhs = m
            .t_exps()
            .iter()
            .zip(&insertions)
            .fold(C::zero(), |acc, (&n, &a)| {
                acc + C::from_ratio(n as i64 * (model.degree(a) as i64 / 2 - 1), 1)
            });
        let rhs = model.c1_degree(m.q_exps()) + C::from_ratio(model.dim_c as i64 - 3, 1);
        if lhs != rhs {
            out.push(DimensionViolation {
                monomial: m.clone(),
                display: monomial_display(vars, m),
                lhs: lhs.format_coeff(),
                rhs: rhs.format_coeff(),
            });
        }
    }
    out
}

/// Residual `K_{X×Y} − (K_X ⊗ I + I ⊗ K_Y)` and its order-gap table.
pub fn leading_k_decomposition<C: Coefficient>(
    qmx: &QuantumModel<C>,
    qmy: &QuantumModel<C>,
    qmxy: &QuantumModel<C>,
) -> Result<DecompositionReport<C>> {
    let expected = kunneth_product(qmx.model(), qmy.model())?;
    let product = qmxy.model();
    let degrees = |m: &CohomologyModel<C>| m.basis.iter().map(|b| b.degree).collect::<Vec<_>>();
    if expected.pairing != product.pairing
        || expected.cup != product.cup
        || degrees(&expected) != degrees(product)
        || expected.factors.as_ref().map(|f| (f.x_rank, f.y_rank))
            != product.factors.as_ref().map(|f| (f.x_rank, f.y_rank))
    {
        return Err(QuantumError::BasisOrderMismatch {
            product: product.name.clone(),
        });
    }
    let target = qmxy.gamma();
    let vars = target.vars().clone();
    let embed = |qm: &QuantumModel<C>, side: Side| -> Result<SeriesMatrix<C>> {
        let (q_map, t_map) = qmxy.factor_embedding(side, qm)?;
        let k = qm.connection_k()?;
        let no_t = qm.gamma().vars().t_names().is_empty();
        k.map(|s| {
            // a factor without insertion variables is exact in every t
            let t = if no_t { target.truncation().t } else { s.truncation().t };
            let trunc = Truncation::new(s.truncation().q, t);
            s.embed(vars.clone(), &q_map, &t_map, trunc)
                .and_then(|e| e.with_den_bound(target.den_bound()))
        })
        .map_err(Into::into)
    };
    let kx = embed(qmx, Side::X)?;
    let ky = embed(qmy, Side::Y)?;
    let kron = SeriesMatrix::kronecker_sum(&kx, &ky)?;
    let k = qmxy.connection_k()?;
    let residual = k.checked_sub(&kron)?;
    let sides = qmxy.novikov_sides()?;
    let gaps = residual
        .entries()
        .map(|((row, col), r)| {
            let kr = kron.get(row, col);
            let residual_order = r.order();
            let kronecker_order = kr.order();
            let gap_ok = match (residual_order, kronecker_order) {
                (Some(a), Some(b)) => a > b,
                _ => true,
            };
            let mixed_only = r.terms().all(|(m, _)| support(m, &sides) == (true, true));
            GapEntry {
                row,
                col,
                residual_order,
                kronecker_order,
                gap_ok,
                mixed_only,
            }
        })
        .collect();
    Ok(DecompositionReport {
        kronecker: kron,
        residual,
        gaps,
    })
}

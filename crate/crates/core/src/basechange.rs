//! Changes of cohomology basis: conjugation `T⁻¹ K T` followed by the
//! matching monomial change of Novikov variables.

use std::collections::BTreeMap;

use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohomology::{CohomologyModel, RatValue};
use crate::matrix::{determinant, inverse, is_square, mat_mul, Dense, SeriesMatrix};
use crate::scalar::{format_rational64, parse_rational64, Coefficient};
use crate::series::{MonomialMap, SeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaseChangeError {
    #[error("base change matrix is singular")]
    SingularMatrix,
    #[error("base change matrix is {rows}×{cols}, connection matrix is {n}×{n}")]
    SizeMismatch { rows: usize, cols: usize, n: usize },
    #[error("substitution for `{0}` is the trivial monomial")]
    TrivialRule(String),
    #[error("monomial substitution is not invertible (exponent matrix {old}×{new}, determinant 0 or not square)")]
    NotInvertible { old: usize, new: usize },
    #[error("substitution covers {found:?}, matrix has Novikov variables {expected:?}")]
    VariableMismatch { found: Vec<String>, expected: Vec<String> },
    #[error("malformed base change document: {0}")]
    Schema(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T> = std::result::Result<T, BaseChangeError>;

/// `T` (columns are the new basis vectors in old coordinates) and the
/// substitution old q-variable ↦ monomial in the new ones.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseChange<C> {
    t: Dense<C>,
    t_inv: Dense<C>,
    rules: BTreeMap<String, BTreeMap<String, Rational64>>,
    new_names: Vec<String>,
}

impl<C: Coefficient> BaseChange<C> {
    /// `new_names` fixes the order of the new variables; by default they
    /// appear in order of first use in the (name-sorted) rules.
    pub fn new(
        t: Dense<C>,
        rules: BTreeMap<String, BTreeMap<String, Rational64>>,
        new_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if !is_square(&t) {
            return Err(BaseChangeError::SizeMismatch {
                rows: t.len(),
                cols: t.first().map_or(0, Vec::len),
                n: t.len(),
            });
        }
        let t_inv = inverse(&t).ok_or(BaseChangeError::SingularMatrix)?;
        let rules: BTreeMap<String, BTreeMap<String, Rational64>> = rules
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().filter(|(_, e)| !e.is_zero()).collect()))
            .collect();
        if let Some((name, _)) = rules.iter().find(|(_, r)| r.is_empty()) {
            return Err(BaseChangeError::TrivialRule(name.clone()));
        }
        let new_names = new_names.unwrap_or_else(|| {
            let mut names: Vec<String> = Vec::new();
            for r in rules.values() {
                for k in r.keys() {
                    if !names.contains(k) {
                        names.push(k.clone());
                    }
                }
            }
            names
        });
        let bc = BaseChange {
            t,
            t_inv,
            rules,
            new_names,
        };
        bc.exponent_inverse()?;
        Ok(bc)
    }

    /// Identity matrix of size `n` and identity substitution on `q_names`.
    pub fn identity(n: usize, q_names: &[String]) -> Self {
        let rules = q_names
            .iter()
            .map(|q| (q.clone(), BTreeMap::from([(q.clone(), Rational64::from_integer(1))])))
            .collect();
        BaseChange::new(crate::matrix::identity(n), rules, Some(q_names.to_vec())).expect("identity is invertible")
    }

    pub fn t(&self) -> &Dense<C> {
        &self.t
    }

    pub fn t_inverse(&self) -> &Dense<C> {
        &self.t_inv
    }

    pub fn rules(&self) -> &BTreeMap<String, BTreeMap<String, Rational64>> {
        &self.rules
    }

    pub fn old_names(&self) -> Vec<String> {
        self.rules.keys().cloned().collect()
    }

    pub fn new_names(&self) -> &[String] {
        &self.new_names
    }

    /// Exponent matrix, rows old variables (sorted), columns new variables.
    pub fn exponent_matrix(&self) -> Vec<Vec<Rational64>> {
        self.rules
            .values()
            .map(|r| {
                self.new_names
                    .iter()
                    .map(|n| r.get(n).copied().unwrap_or_else(Rational64::zero))
                    .collect()
            })
            .collect()
    }

    fn exponent_inverse(&self) -> Result<Vec<Vec<Rational64>>> {
        let e = self.exponent_matrix();
        let (old, new) = (e.len(), self.new_names.len());
        let not_inv = BaseChangeError::NotInvertible { old, new };
        if old != new {
            return Err(not_inv);
        }
        if let Some(unknown) = self.rules.values().flat_map(|r| r.keys()).find(|k| !self.new_names.contains(k)) {
            return Err(BaseChangeError::Schema(format!("`{unknown}` is not among the new variable names")));
        }
        let big: Dense<BigRational> = e
            .iter()
            .map(|r| r.iter().map(|x| BigRational::from_rational64(*x)).collect())
            .collect();
        if determinant(&big).is_zero() {
            return Err(not_inv);
        }
        let inv = inverse(&big).ok_or(not_inv.clone())?;
        inv.iter()
            .map(|r| {
                r.iter()
                    .map(|x| {
                        Some(Rational64::new(x.numer().to_i64()?, x.denom().to_i64()?))
                    })
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()
            .ok_or(not_inv)
    }

    /// The substitution as a map on a given ordered list of old variables.
    pub fn monomial_map(&self, old_q: &[String]) -> Result<MonomialMap> {
        let mut found = self.old_names();
        let mut expected = old_q.to_vec();
        found.sort();
        expected.sort();
        if found != expected {
            return Err(BaseChangeError::VariableMismatch { found, expected });
        }
        Ok(MonomialMap::from_rules(old_q, self.new_names.clone(), &self.rules)?)
    }

    /// True when `T` only mixes basis elements of equal degree.
    pub fn is_degree_preserving(&self, model: &CohomologyModel<C>) -> bool {
        self.t.len() == model.rank()
            && self.t.iter().enumerate().all(|(i, row)| {
                row.iter()
                    .enumerate()
                    .all(|(j, x)| x.is_zero() || model.degree(i) == model.degree(j))
            })
    }

    /// `T⁻¹ G T`.
    pub fn transform_constant(&self, g: &Dense<C>) -> Dense<C> {
        mat_mul(&mat_mul(&self.t_inv, g), &self.t)
    }

    pub fn to_doc(&self) -> BaseChangeDoc {
        BaseChangeDoc {
            t: self
                .t
                .iter()
                .map(|r| r.iter().map(|x| RatValue::Text(x.format_coeff())).collect())
                .collect(),
            q_subst: self
                .rules
                .iter()
                .map(|(k, r)| (k.clone(), r.iter().map(|(n, e)| (n.clone(), format_rational64(e))).collect()))
                .collect(),
            new_divisor_names: Some(self.new_names.clone()),
        }
    }

    pub fn from_doc(doc: &BaseChangeDoc) -> Result<Self> {
        let t = doc
            .t
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let text = match v {
                            RatValue::Int(x) => x.to_string(),
                            RatValue::Text(s) => s.clone(),
                        };
                        C::parse_coeff(&text).ok_or_else(|| BaseChangeError::Schema(format!("T[{i}][{j}]: `{text}`")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let rules = doc
            .q_subst
            .iter()
            .map(|(k, r)| {
                let row = r
                    .iter()
                    .map(|(n, e)| {
                        parse_rational64(e)
                            .map(|x| (n.clone(), x))
                            .ok_or_else(|| BaseChangeError::Schema(format!("q_subst.{k}.{n}: `{e}`")))
                    })
                    .collect::<Result<BTreeMap<_, _>>>()?;
                Ok((k.clone(), row))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::new(t, rules, doc.new_divisor_names.clone())
    }
}

/// `{"T": [[…]], "q_subst": {"q1": {"qh": "1/2", "qd": "1/2"}, …}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseChangeDoc {
    #[serde(rename = "T")]
    pub t: Vec<Vec<RatValue>>,
    pub q_subst: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_divisor_names: Option<Vec<String>>,
}

/// `T⁻¹ K T`, exactly, then the Novikov substitution on every entry.
pub fn apply_base_change<C: Coefficient>(k: &SeriesMatrix<C>, bc: &BaseChange<C>) -> Result<SeriesMatrix<C>> {
    let n = k.size();
    if bc.t.len() != n {
        return Err(BaseChangeError::SizeMismatch {
            rows: bc.t.len(),
            cols: bc.t.len(),
            n,
        });
    }
    let old_q = k.vars().map(|v| v.q_names().to_vec()).unwrap_or_default();
    let map = bc.monomial_map(&old_q)?;
    Ok(k.conjugate(&bc.t_inv, &bc.t)?.substitute(&map)?)
}

/// Only the conjugation step.
pub fn conjugate_only<C: Coefficient>(k: &SeriesMatrix<C>, bc: &BaseChange<C>) -> Result<SeriesMatrix<C>> {
    if bc.t.len() != k.size() {
        return Err(BaseChangeError::SizeMismatch {
            rows: bc.t.len(),
            cols: bc.t.len(),
            n: k.size(),
        });
    }
    Ok(k.conjugate(&bc.t_inv, &bc.t)?)
}

/// `T⁻¹` with the inverse monomial map: new_j ↦ Π old_i^{(E⁻¹)_{ji}}.
pub fn invert_base_change<C: Coefficient>(bc: &BaseChange<C>) -> Result<BaseChange<C>> {
    let inv = bc.exponent_inverse()?;
    let old = bc.old_names();
    let rules = bc
        .new_names
        .iter()
        .zip(&inv)
        .map(|(name, row)| {
            (
                name.clone(),
                old.iter()
                    .zip(row)
                    .filter(|(_, e)| !e.is_zero())
                    .map(|(o, e)| (o.clone(), *e))
                    .collect(),
            )
        })
        .collect();
    BaseChange::new(bc.t_inv.clone(), rules, Some(old))
}

/// `bc₁` followed by `bc₂`: matrix `T₁T₂`, substitution composed.
pub fn compose<C: Coefficient>(first: &BaseChange<C>, second: &BaseChange<C>) -> Result<BaseChange<C>> {
    let t = mat_mul(&first.t, &second.t);
    let second_rows: BTreeMap<&String, &BTreeMap<String, Rational64>> = second.rules.iter().collect();
    let mut rules = BTreeMap::new();
    for (old, r) in &first.rules {
        let mut out: BTreeMap<String, Rational64> = BTreeMap::new();
        for (mid, e) in r {
            let inner = second_rows
                .get(mid)
                .ok_or_else(|| BaseChangeError::VariableMismatch {
                    found: second.old_names(),
                    expected: first.new_names.clone(),
                })?;
            for (new, f) in inner.iter() {
                *out.entry(new.clone()).or_insert_with(Rational64::zero) += e * f;
            }
        }
        rules.insert(old.clone(), out);
    }
    BaseChange::new(t, rules, Some(second.new_names.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::p1xp1_entry;
    use crate::series::{Monomial, Series, Truncation, Variables};
    use std::sync::Arc;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    pub(crate) fn paper_t() -> Dense<Q> {
        let i = |x: i64| q(x, 1);
        vec![
            vec![i(1), i(0), i(0), i(0)],
            vec![i(0), i(1), i(1), i(0)],
            vec![i(0), i(1), i(-1), i(0)],
            vec![i(0), i(0), i(0), i(1)],
        ]
    }

    fn paper_rules() -> BTreeMap<String, BTreeMap<String, Rational64>> {
        BTreeMap::from([
            ("q1".to_string(), BTreeMap::from([("qh".to_string(), r(1, 2)), ("qd".to_string(), r(1, 2))])),
            ("q2".to_string(), BTreeMap::from([("qh".to_string(), r(1, 2)), ("qd".to_string(), r(-1, 2))])),
        ])
    }

    fn paper_bc() -> BaseChange<Q> {
        BaseChange::new(paper_t(), paper_rules(), Some(vec!["qh".into(), "qd".into()])).unwrap()
    }

    fn s(vars: &Arc<Variables>, terms: &[(&[Rational64], &[u32], Q)]) -> Series<Q> {
        Series::zero(vars.clone(), Truncation::integral(3, 5))
            .with_den_bound(2)
            .unwrap()
            .with_terms(terms.iter().map(|(e, t, c)| (Monomial::new(e.to_vec(), t.to_vec()), c.clone())))
            .unwrap()
    }

    #[test]
    fn printed_inverse() {
        let bc = paper_bc();
        let half = q(1, 2);
        assert_eq!(bc.t_inverse()[1], vec![q(0, 1), half.clone(), half.clone(), q(0, 1)]);
        assert_eq!(bc.t_inverse()[2], vec![q(0, 1), half.clone(), -half, q(0, 1)]);
    }

    #[test]
    fn inverse_map_is_qh_q1q2_and_qd_q1_over_q2() {
        let inv = invert_base_change(&paper_bc()).unwrap();
        assert_eq!(inv.rules()["qh"], BTreeMap::from([("q1".into(), r(1, 1)), ("q2".into(), r(1, 1))]));
        assert_eq!(inv.rules()["qd"], BTreeMap::from([("q1".into(), r(1, 1)), ("q2".into(), r(-1, 1))]));
        assert_eq!(inv.t(), paper_bc().t_inverse());
    }

    #[test]
    fn involutive_substitution_is_its_own_inverse() {
        let bc = BaseChange::<Q>::new(
            crate::matrix::identity(2),
            BTreeMap::from([("q".to_string(), BTreeMap::from([("q".to_string(), r(-1, 1))]))]),
            None,
        )
        .unwrap();
        assert_eq!(invert_base_change(&bc).unwrap(), bc);
    }

    #[test]
    fn validation_errors() {
        let singular = vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]];
        assert_eq!(
            BaseChange::new(singular, BTreeMap::new(), None).unwrap_err(),
            BaseChangeError::SingularMatrix
        );
        let degenerate = BTreeMap::from([
            ("q1".to_string(), BTreeMap::from([("a".to_string(), r(1, 1))])),
            ("q2".to_string(), BTreeMap::from([("a".to_string(), r(2, 1))])),
        ]);
        assert!(matches!(
            BaseChange::new(paper_t(), degenerate, None),
            Err(BaseChangeError::NotInvertible { .. })
        ));
        let trivial = BTreeMap::from([("q1".to_string(), BTreeMap::from([("a".to_string(), r(0, 1))]))]);
        assert!(matches!(BaseChange::new(paper_t(), trivial, None), Err(BaseChangeError::TrivialRule(_))));
    }

    #[test]
    fn identity_change_leaves_k_unchanged() {
        let k = p1xp1_entry().quantum().unwrap().connection_k().unwrap();
        let bc = BaseChange::identity(4, &["q1".to_string(), "q2".to_string()]);
        assert_eq!(apply_base_change(&k, &bc).unwrap(), k);
    }

    #[test]
    fn round_trip_on_the_full_k() {
        let k = p1xp1_entry().quantum().unwrap().connection_k().unwrap();
        let bc = paper_bc();
        let there = apply_base_change(&k, &bc).unwrap();
        let back = apply_base_change(&there, &invert_base_change(&bc).unwrap()).unwrap();
        assert_eq!(back, k);
    }

    #[test]
    fn conjugated_entries_of_the_computed_k() {
        let k = p1xp1_entry().quantum().unwrap().connection_k().unwrap();
        let c = conjugate_only(&k, &paper_bc()).unwrap();
        let vars = c.vars().unwrap().clone();
        let cst = |x: i64| s(&vars, &[(&[r(0, 1), r(0, 1)], &[0], q(x, 1))]).truncated(c.get(0, 0).truncation());
        assert_eq!(c.get(3, 1), &cst(4));
        assert!(c.get(3, 2).is_zero());
        assert_eq!(c.get(1, 0), &cst(2));
    }

    #[test]
    fn degree_preserving_and_trivial_on_g() {
        let bc = paper_bc();
        let model = p1xp1_entry().model;
        assert!(bc.is_degree_preserving(&model));
        let g = crate::quantum::grading_g(&model);
        assert_eq!(bc.transform_constant(&g), g);
        let mut mixing = paper_t();
        mixing[0][1] = q(1, 1);
        let bad = BaseChange::new(mixing, paper_rules(), None).unwrap();
        assert!(!bad.is_degree_preserving(&model));
    }

    #[test]
    fn composition_is_functorial() {
        let k = p1xp1_entry().quantum().unwrap().connection_k().unwrap();
        let a = paper_bc();
        let swap = BaseChange::new(
            vec![
                vec![q(1, 1), q(0, 1), q(0, 1), q(0, 1)],
                vec![q(0, 1), q(0, 1), q(1, 1), q(0, 1)],
                vec![q(0, 1), q(1, 1), q(0, 1), q(0, 1)],
                vec![q(0, 1), q(0, 1), q(0, 1), q(1, 1)],
            ],
            BTreeMap::from([
                ("qh".to_string(), BTreeMap::from([("u".to_string(), r(1, 1))])),
                ("qd".to_string(), BTreeMap::from([("v".to_string(), r(-1, 1))])),
            ]),
            Some(vec!["u".into(), "v".into()]),
        )
        .unwrap();
        let stepwise = apply_base_change(&apply_base_change(&k, &a).unwrap(), &swap).unwrap();
        let composite = apply_base_change(&k, &compose(&a, &swap).unwrap()).unwrap();
        assert_eq!(stepwise, composite);
    }

    #[test]
    fn document_round_trip() {
        let json = r#"{"T":[[1,0,0,0],[0,1,1,0],[0,1,-1,0],[0,0,0,1]],
            "q_subst":{"q1":{"qh":"1/2","qd":"1/2"},"q2":{"qh":"1/2","qd":"-1/2"}}}"#;
        let doc: BaseChangeDoc = serde_json::from_str(json).unwrap();
        let bc = BaseChange::<Q>::from_doc(&doc).unwrap();
        assert_eq!(bc.t(), &paper_t());
        let again = BaseChange::<Q>::from_doc(&serde_json::from_str(&serde_json::to_string(&bc.to_doc()).unwrap()).unwrap()).unwrap();
        assert_eq!(again, bc);
    }
}

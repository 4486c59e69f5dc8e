//! Exact dense matrices over a coefficient field, and square matrices whose
//! entries are series.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::scalar::Coefficient;
use crate::series::{
    parse_term, term_doc, MonomialMap, Result as SeriesResult, Series, SeriesError, Truncation,
    TruncDoc, TermDoc, Variables,
};
use crate::spectral::NumericMatrix;

/// Row-major dense matrix.
pub type Dense<C> = Vec<Vec<C>>;

pub fn identity<C: Coefficient>(n: usize) -> Dense<C> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { C::one() } else { C::zero() }).collect())
        .collect()
}

pub fn is_square<C>(m: &Dense<C>) -> bool {
    m.iter().all(|row| row.len() == m.len())
}

pub fn mat_mul<C: Coefficient>(a: &Dense<C>, b: &Dense<C>) -> Dense<C> {
    let n = a.len();
    let k = b.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![C::zero(); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] = out[i][j].clone() + a[i][l].clone() * b[l][j].clone();
            }
        }
    }
    out
}

pub fn transpose<C: Clone>(a: &Dense<C>) -> Dense<C> {
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Gauss–Jordan inverse; `None` when singular. Exact for exact fields.
pub fn inverse<C: Coefficient>(a: &Dense<C>) -> Option<Dense<C>> {
    let n = a.len();
    if !is_square(a) {
        return None;
    }
    let mut m: Dense<C> = a.clone();
    let mut inv = identity::<C>(n);
    for col in 0..n {
        // largest |pivot| keeps the f64 instantiation sane; exact fields only need nonzero
        let pivot = (col..n)
            .filter(|&r| !m[r][col].is_zero())
            .max_by(|&x, &y| {
                m[x][col]
                    .abs()
                    .partial_cmp(&m[y][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col].clone();
        for j in 0..n {
            m[col][j] = m[col][j].clone() / p.clone();
            inv[col][j] = inv[col][j].clone() / p.clone();
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                m[r][j] = m[r][j].clone() - f.clone() * m[col][j].clone();
                inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Some(inv)
}

pub fn determinant<C: Coefficient>(a: &Dense<C>) -> C {
    let n = a.len();
    let mut m = a.clone();
    let mut det = C::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return C::zero();
        };
        if pivot != col {
            m.swap(col, pivot);
            det = -det;
        }
        let p = m[col][col].clone();
        det = det * p.clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone() / p.clone();
            for j in col..n {
                m[r][j] = m[r][j].clone() - f.clone() * m[col][j].clone();
            }
        }
    }
    det
}

/// Square matrix of series sharing one variable set.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix<C> {
    n: usize,
    entries: Vec<Series<C>>,
}

impl<C: Coefficient> SeriesMatrix<C> {
    /// Builds from row-major entries.
    pub fn from_rows(rows: Vec<Vec<Series<C>>>) -> SeriesResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SeriesError::Schema("series matrix is not square".into()));
        }
        let entries: Vec<Series<C>> = rows.into_iter().flatten().collect();
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.vars() != first.vars()) {
                return Err(SeriesError::VariableMismatch {
                    left: format!("{:?}", first.vars()),
                    right: "mixed entries".into(),
                });
            }
        }
        Ok(SeriesMatrix { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Series<C>) -> Self {
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        SeriesMatrix { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Series<C> {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), &Series<C>)> {
        let n = self.n;
        self.entries.iter().enumerate().map(move |(k, s)| ((k / n, k % n), s))
    }

    pub fn vars(&self) -> Option<&Arc<Variables>> {
        self.entries.first().map(Series::vars)
    }

    pub fn map(&self, f: impl Fn(&Series<C>) -> SeriesResult<Series<C>>) -> SeriesResult<Self> {
        Ok(SeriesMatrix {
            n: self.n,
            entries: self.entries.iter().map(f).collect::<SeriesResult<_>>()?,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> SeriesResult<Self> {
        if self.n != other.n {
            return Err(SeriesError::Schema("matrix sizes differ".into()));
        }
        Ok(SeriesMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.checked_sub(b))
                .collect::<SeriesResult<_>>()?,
        })
    }

    pub fn checked_add(&self, other: &Self) -> SeriesResult<Self> {
        if self.n != other.n {
            return Err(SeriesError::Schema("matrix sizes differ".into()));
        }
        Ok(SeriesMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.checked_add(b))
                .collect::<SeriesResult<_>>()?,
        })
    }

    /// `left · self · right` for constant matrices `left`, `right`.
    pub fn conjugate(&self, left: &Dense<C>, right: &Dense<C>) -> SeriesResult<Self> {
        let n = self.n;
        if left.len() != n || right.len() != n || !is_square(left) || !is_square(right) {
            return Err(SeriesError::Schema("conjugation matrix has wrong size".into()));
        }
        let zero = self.entries[0].truncated(self.entries[0].truncation()).scale(&C::zero());
        let mut tmp = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = zero.clone();
                for l in 0..n {
                    if !right[l][j].is_zero() {
                        acc = acc.checked_add(&self.get(i, l).scale(&right[l][j]))?;
                    }
                }
                tmp.push(acc);
            }
        }
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = zero.clone();
                for l in 0..n {
                    if !left[i][l].is_zero() {
                        acc = acc.checked_add(&tmp[l * n + j].scale(&left[i][l]))?;
                    }
                }
                out.push(acc);
            }
        }
        Ok(SeriesMatrix { n, entries: out })
    }

    pub fn substitute(&self, map: &MonomialMap) -> SeriesResult<Self> {
        self.map(|s| s.substitute(map))
    }

    /// `A ⊗ I + I ⊗ B` with A's index outer. Both must share variables.
    pub fn kronecker_sum(a: &Self, b: &Self) -> SeriesResult<Self> {
        let (m, n) = (a.n, b.n);
        let zero = a.entries[0].scale(&C::zero()).truncated(b.entries[0].truncation());
        let mut entries = Vec::with_capacity(m * m * n * n);
        for i in 0..m {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..n {
                        let mut e = zero.clone();
                        if j == l {
                            e = e.checked_add(a.get(i, k))?;
                        }
                        if i == k {
                            e = e.checked_add(b.get(j, l))?;
                        }
                        entries.push(e);
                    }
                }
            }
        }
        Ok(SeriesMatrix { n: m * n, entries })
    }

    /// Entrywise minimal-order parts (zero entries stay zero).
    pub fn leading(&self) -> Self {
        SeriesMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|e| e.min_order_part().unwrap_or_else(|_| e.clone()))
                .collect(),
        }
    }

    pub fn truncated(&self, trunc: Truncation) -> Self {
        SeriesMatrix {
            n: self.n,
            entries: self.entries.iter().map(|e| e.truncated(trunc)).collect(),
        }
    }

    pub fn evaluate<T: Float>(
        &self,
        point: &BTreeMap<String, Complex<T>>,
    ) -> SeriesResult<NumericMatrix<T>> {
        let data = self
            .entries
            .iter()
            .map(|e| e.evaluate(point).map(|v| v.value))
            .collect::<SeriesResult<Vec<_>>>()?;
        Ok(NumericMatrix::from_vec(self.n, data))
    }

    pub fn to_doc(&self) -> SeriesMatrixDoc {
        let first = &self.entries[0];
        let trunc = self
            .entries
            .iter()
            .fold(first.truncation(), |t, e| t.min(e.truncation()));
        SeriesMatrixDoc {
            q_vars: first.vars().q_names().to_vec(),
            t_vars: first.vars().t_names().to_vec(),
            den_bound: self.entries.iter().map(Series::den_bound).max().unwrap_or(1),
            trunc: TruncDoc {
                q: crate::scalar::format_rational64(&trunc.q),
                t: trunc.t,
            },
            entries: (0..self.n)
                .map(|i| {
                    (0..self.n)
                        .map(|j| {
                            self.get(i, j)
                                .truncated(trunc)
                                .terms()
                                .map(|(m, c)| term_doc(m, c))
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &SeriesMatrixDoc) -> SeriesResult<Self> {
        let vars = Variables::new(doc.q_vars.iter().cloned(), doc.t_vars.iter().cloned())?;
        let trunc = Truncation::new(
            crate::scalar::parse_rational64(&doc.trunc.q)
                .ok_or_else(|| SeriesError::Schema(format!("trunc.q: `{}`", doc.trunc.q)))?,
            doc.trunc.t,
        );
        let rows = doc
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|terms| {
                        let parsed = terms
                            .iter()
                            .enumerate()
                            .map(|(k, t)| parse_term::<C>(t, k))
                            .collect::<SeriesResult<Vec<_>>>()?;
                        Series::zero(vars.clone(), trunc)
                            .with_den_bound(doc.den_bound)?
                            .with_terms(parsed)
                    })
                    .collect::<SeriesResult<Vec<_>>>()
            })
            .collect::<SeriesResult<Vec<_>>>()?;
        Self::from_rows(rows)
    }
}

impl<C: Coefficient> fmt::Display for SeriesMatrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(" | "))?;
        }
        Ok(())
    }
}

/// JSON form of a series matrix: shared variables and truncation, entries
/// as term lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesMatrixDoc {
    pub q_vars: Vec<String>,
    pub t_vars: Vec<String>,
    pub den_bound: i64,
    pub trunc: TruncDoc,
    pub entries: Vec<Vec<Vec<TermDoc>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn inverse_of_permutation_pairing() {
        let g: Dense<BigRational> = vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]];
        assert_eq!(inverse(&g).unwrap(), g);
        let singular: Dense<BigRational> = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        assert!(inverse(&singular).is_none());
        assert_eq!(determinant(&singular), q(0, 1));
    }

    #[test]
    fn inverse_round_trip_on_a_dense_rational_matrix() {
        let a: Dense<BigRational> = vec![
            vec![q(2, 1), q(1, 3), q(0, 1)],
            vec![q(-1, 2), q(1, 1), q(5, 1)],
            vec![q(0, 1), q(7, 4), q(1, 1)],
        ];
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), identity(3));
        assert_eq!(determinant(&a) * determinant(&inv), q(1, 1));
    }

    #[test]
    fn float_instantiation_inverts_too() {
        let a: Dense<f64> = vec![vec![4.0, 7.0], vec![2.0, 6.0]];
        let inv = inverse(&a).unwrap();
        let p = mat_mul(&a, &inv);
        assert!((p[0][0] - 1.0).abs() < 1e-12 && p[0][1].abs() < 1e-12);
    }
}

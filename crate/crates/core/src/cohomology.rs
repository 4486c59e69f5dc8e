//! Classical cohomology data of a variety and the Künneth product.

use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{inverse, mat_mul, Dense};
use crate::scalar::Coefficient;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model `{name}` is invalid: {violations}")]
    Invalid { name: String, violations: String },
    #[error("pairing of `{0}` is singular")]
    SingularPairing(String),
    #[error("odd-degree class `{class}` in `{model}` is unsupported")]
    OddDegree { model: String, class: String },
    #[error("malformed model document: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisElement {
    pub name: String,
    /// Real cohomological degree.
    pub degree: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    X,
    Y,
}

/// How a Künneth model's basis decomposes: index `k` is the pair
/// `(k / y_rank, k % y_rank)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSplit {
    pub x: String,
    pub y: String,
    pub x_rank: usize,
    pub y_rank: usize,
    pub x_unit: usize,
    pub y_unit: usize,
}

impl FactorSplit {
    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.y_rank, k % self.y_rank)
    }

    pub fn join(&self, i: usize, j: usize) -> usize {
        i * self.y_rank + j
    }

    /// Which factor a product basis element lives on: `X` for `T_i ⊗ 1`,
    /// `Y` for `1 ⊗ S_j`, `None` for mixed classes and the unit.
    pub fn side(&self, k: usize) -> Option<Side> {
        let (i, j) = self.split(k);
        match (i == self.x_unit, j == self.y_unit) {
            (true, true) => None,
            (false, true) => Some(Side::X),
            (true, false) => Some(Side::Y),
            (false, false) => None,
        }
    }
}

/// Graded basis, Poincaré pairing, cup-product table and first Chern class.
#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyModel<C> {
    pub name: String,
    pub dim_c: u32,
    pub basis: Vec<BasisElement>,
    /// `pairing[e][f] = ∫ T_e ∪ T_f`.
    pub pairing: Dense<C>,
    /// `cup[i][j]` is the coefficient vector of `T_i · T_j`.
    pub cup: Vec<Vec<Vec<C>>>,
    pub c1: Vec<C>,
    pub divisor_indices: Vec<usize>,
    pub unit_index: usize,
    pub factors: Option<FactorSplit>,
}

/// Inverse of the Poincaré pairing, `g^{ef}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualData<C> {
    pub pairing_inverse: Dense<C>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyBasis,
    OddDegree(usize),
    DegreeTooLarge(usize),
    PairingShape,
    PairingNotSymmetric,
    PairingSingular,
    PairingDegree(usize, usize),
    CupShape,
    CupNotCommutative(usize, usize),
    CupUnit(usize),
    CupNotFrobenius(usize, usize, usize),
    C1Shape,
    C1NotDegreeTwo(usize),
    UnitIndex,
    DivisorIndex(usize),
    DivisorNotDegreeTwo(usize),
    MissingDivisor(usize),
    FactorSplit,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EmptyBasis => write!(f, "basis is empty"),
            OddDegree(i) => write!(f, "odd degree unsupported (basis[{i}])"),
            DegreeTooLarge(i) => write!(f, "degree exceeds 2*dim_c (basis[{i}])"),
            PairingShape => write!(f, "pairing is not a square matrix of basis size"),
            PairingNotSymmetric => write!(f, "pairing not symmetric"),
            PairingSingular => write!(f, "pairing not invertible"),
            PairingDegree(e, g) => write!(
                f,
                "pairing entry ({e},{g}) nonzero but degrees do not sum to 2*dim_c"
            ),
            CupShape => write!(f, "cup table shape does not match the basis"),
            CupNotCommutative(i, j) => write!(f, "cup product not commutative at ({i},{j})"),
            CupUnit(j) => write!(f, "unit does not act as identity on basis[{j}]"),
            CupNotFrobenius(i, j, k) => {
                write!(f, "cup table incompatible with pairing at ({i},{j},{k})")
            }
            C1Shape => write!(f, "c1 length does not match the basis"),
            C1NotDegreeTwo(i) => write!(f, "c1 has a component on non-degree-2 basis[{i}]"),
            UnitIndex => write!(f, "unit_index out of range or not of degree 0"),
            DivisorIndex(i) => write!(f, "divisor index {i} out of range or repeated"),
            DivisorNotDegreeTwo(i) => write!(f, "divisor basis[{i}] is not of degree 2"),
            MissingDivisor(i) => write!(f, "degree-2 basis[{i}] is not a divisor index"),
            FactorSplit => write!(f, "factor split inconsistent with basis size"),
        }
    }
}

impl<C: Coefficient> CohomologyModel<C> {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.basis[i].degree
    }

    pub fn is_divisor(&self, i: usize) -> bool {
        self.divisor_indices.contains(&i)
    }

    /// Basis indices carrying t-variables: neither the unit nor a divisor.
    pub fn insertion_indices(&self) -> Vec<usize> {
        (0..self.rank())
            .filter(|&i| i != self.unit_index && !self.is_divisor(i))
            .collect()
    }

    /// Divisor indices in increasing basis order; the k-th Novikov variable
    /// belongs to the k-th of these.
    pub fn novikov_indices(&self) -> Vec<usize> {
        let mut v = self.divisor_indices.clone();
        v.sort_unstable();
        v
    }

    /// Checks every structural invariant; an empty list means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.rank();
        if n == 0 {
            out.push(Violation::EmptyBasis);
            return out;
        }
        for (i, b) in self.basis.iter().enumerate() {
            if b.degree % 2 != 0 {
                out.push(Violation::OddDegree(i));
            }
            if b.degree > 2 * self.dim_c {
                out.push(Violation::DegreeTooLarge(i));
            }
        }
        let pairing_ok = self.pairing.len() == n && self.pairing.iter().all(|r| r.len() == n);
        if !pairing_ok {
            out.push(Violation::PairingShape);
        } else {
            let symmetric = (0..n).all(|e| (0..n).all(|f| self.pairing[e][f] == self.pairing[f][e]));
            if !symmetric {
                out.push(Violation::PairingNotSymmetric);
            }
            if inverse(&self.pairing).is_none() {
                out.push(Violation::PairingSingular);
            }
            for e in 0..n {
                for f in 0..n {
                    if !self.pairing[e][f].is_zero()
                        && self.degree(e) + self.degree(f) != 2 * self.dim_c
                    {
                        out.push(Violation::PairingDegree(e, f));
                    }
                }
            }
        }
        let cup_ok = self.cup.len() == n
            && self
                .cup
                .iter()
                .all(|row| row.len() == n && row.iter().all(|v| v.len() == n));
        if !cup_ok {
            out.push(Violation::CupShape);
        }
        let unit_ok = self.unit_index < n && self.degree(self.unit_index) == 0;
        if !unit_ok {
            out.push(Violation::UnitIndex);
        }
        if cup_ok {
            for i in 0..n {
                for j in i + 1..n {
                    if self.cup[i][j] != self.cup[j][i] {
                        out.push(Violation::CupNotCommutative(i, j));
                    }
                }
            }
            if unit_ok {
                for j in 0..n {
                    let expected: Vec<C> =
                        (0..n).map(|k| if k == j { C::one() } else { C::zero() }).collect();
                    if self.cup[self.unit_index][j] != expected {
                        out.push(Violation::CupUnit(j));
                    }
                }
            }
            if pairing_ok {
                // g(T_i T_j, T_k) = ∫ T_i T_j T_k = g(T_i, T_j T_k)
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let lhs = pair(&self.pairing, &self.cup[i][j], k, true);
                            let rhs = pair(&self.pairing, &self.cup[j][k], i, false);
                            if lhs != rhs {
                                out.push(Violation::CupNotFrobenius(i, j, k));
                            }
                        }
                    }
                }
            }
        }
        if self.c1.len() != n {
            out.push(Violation::C1Shape);
        } else {
            for (i, c) in self.c1.iter().enumerate() {
                if !c.is_zero() && self.degree(i) != 2 {
                    out.push(Violation::C1NotDegreeTwo(i));
                }
            }
        }
        let mut seen = vec![false; n];
        for &d in &self.divisor_indices {
            if d >= n || seen[d] {
                out.push(Violation::DivisorIndex(d));
                continue;
            }
            seen[d] = true;
            if self.degree(d) != 2 {
                out.push(Violation::DivisorNotDegreeTwo(d));
            }
        }
        for i in 0..n {
            if self.degree(i) == 2 && !seen[i] {
                out.push(Violation::MissingDivisor(i));
            }
        }
        if let Some(fs) = &self.factors {
            if fs.x_rank * fs.y_rank != n
                || fs.x_unit >= fs.x_rank
                || fs.y_unit >= fs.y_rank
                || fs.join(fs.x_unit, fs.y_unit) != self.unit_index
            {
                out.push(Violation::FactorSplit);
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid {
                name: self.name.clone(),
                violations: v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            })
        }
    }

    /// Exact inverse of the pairing.
    pub fn dual_basis(&self) -> Result<DualData<C>, ModelError> {
        let inv = inverse(&self.pairing).ok_or_else(|| ModelError::SingularPairing(self.name.clone()))?;
        debug_assert_eq!(
            mat_mul(&self.pairing, &inv),
            crate::matrix::identity::<C>(self.rank())
        );
        Ok(DualData { pairing_inverse: inv })
    }

    /// `∫_β c1` for the curve class with `∫_β T_d = exps[k]` on the k-th
    /// Novikov index.
    pub fn c1_degree(&self, exps: &[Rational64]) -> C {
        self.novikov_indices()
            .iter()
            .zip(exps)
            .fold(C::zero(), |acc, (&d, e)| acc + self.c1[d].clone() * C::from_rational64(*e))
    }

    /// Virtual dimension of the moduli of stable maps with `marked` points:
    /// `∫_β c1 + dim_c − 3 + marked`.
    pub fn virtual_dimension(&self, exps: &[Rational64], marked: u32) -> C {
        self.c1_degree(exps) + C::from_ratio(self.dim_c as i64 - 3 + marked as i64, 1)
    }

    pub fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            name: self.name.clone(),
            dim_c: self.dim_c,
            basis: self.basis.clone(),
            pairing: self
                .pairing
                .iter()
                .map(|r| r.iter().map(|c| RatValue::Text(c.format_coeff())).collect())
                .collect(),
            cup: self
                .cup
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|v| v.iter().map(|c| RatValue::Text(c.format_coeff())).collect())
                        .collect()
                })
                .collect(),
            c1: self.c1.iter().map(|c| RatValue::Text(c.format_coeff())).collect(),
            divisor_indices: self.divisor_indices.clone(),
            unit_index: self.unit_index,
            factors: self.factors.clone(),
        }
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self, ModelError> {
        let conv = |v: &RatValue, field: &str| -> Result<C, ModelError> {
            v.parse::<C>()
                .ok_or_else(|| ModelError::Schema(format!("{field}: `{}`", v.text())))
        };
        let pairing = doc
            .pairing
            .iter()
            .enumerate()
            .map(|(e, row)| {
                row.iter()
                    .enumerate()
                    .map(|(f, v)| conv(v, &format!("pairing[{e}][{f}]")))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        let cup = doc
            .cup
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.iter()
                            .enumerate()
                            .map(|(k, x)| conv(x, &format!("cup[{i}][{j}][{k}]")))
                            .collect()
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        let c1 = doc
            .c1
            .iter()
            .enumerate()
            .map(|(i, v)| conv(v, &format!("c1[{i}]")))
            .collect::<Result<_, _>>()?;
        Ok(CohomologyModel {
            name: doc.name.clone(),
            dim_c: doc.dim_c,
            basis: doc.basis.clone(),
            pairing,
            cup,
            c1,
            divisor_indices: doc.divisor_indices.clone(),
            unit_index: doc.unit_index,
            factors: doc.factors.clone(),
        })
    }
}

fn pair<C: Coefficient>(g: &Dense<C>, v: &[C], k: usize, vector_first: bool) -> C {
    v.iter().enumerate().fold(C::zero(), |acc, (f, c)| {
        let gk = if vector_first { &g[f][k] } else { &g[k][f] };
        acc + c.clone() * gk.clone()
    })
}

/// Künneth product with basis `T_i ⊗ S_j` in i-major order. Only even
/// classes are supported, so no Koszul signs appear.
pub fn kunneth_product<C: Coefficient>(
    x: &CohomologyModel<C>,
    y: &CohomologyModel<C>,
) -> Result<CohomologyModel<C>, ModelError> {
    for m in [x, y] {
        if let Some(b) = m.basis.iter().find(|b| b.degree % 2 != 0) {
            return Err(ModelError::OddDegree {
                model: m.name.clone(),
                class: b.name.clone(),
            });
        }
        m.ensure_valid()?;
    }
    let (nx, ny) = (x.rank(), y.rank());
    let n = nx * ny;
    let idx = |i: usize, j: usize| i * ny + j;
    let mut basis = Vec::with_capacity(n);
    for bx in &x.basis {
        for by in &y.basis {
            basis.push(BasisElement {
                name: format!("{}⊗{}", bx.name, by.name),
                degree: bx.degree + by.degree,
            });
        }
    }
    let mut pairing = vec![vec![C::zero(); n]; n];
    for e in 0..nx {
        for f in 0..ny {
            for e2 in 0..nx {
                for f2 in 0..ny {
                    pairing[idx(e, f)][idx(e2, f2)] = x.pairing[e][e2].clone() * y.pairing[f][f2].clone();
                }
            }
        }
    }
    let mut cup = vec![vec![vec![C::zero(); n]; n]; n];
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nx {
                for l in 0..ny {
                    let target = &mut cup[idx(i, j)][idx(k, l)];
                    for (m, cx) in x.cup[i][k].iter().enumerate() {
                        if cx.is_zero() {
                            continue;
                        }
                        for (o, cy) in y.cup[j][l].iter().enumerate() {
                            if !cy.is_zero() {
                                target[idx(m, o)] = cx.clone() * cy.clone();
                            }
                        }
                    }
                }
            }
        }
    }
    let mut c1 = vec![C::zero(); n];
    for (m, c) in x.c1.iter().enumerate() {
        c1[idx(m, y.unit_index)] = c1[idx(m, y.unit_index)].clone() + c.clone();
    }
    for (o, c) in y.c1.iter().enumerate() {
        c1[idx(x.unit_index, o)] = c1[idx(x.unit_index, o)].clone() + c.clone();
    }
    let mut divisor_indices: Vec<usize> = x
        .divisor_indices
        .iter()
        .map(|&i| idx(i, y.unit_index))
        .chain(y.divisor_indices.iter().map(|&j| idx(x.unit_index, j)))
        .collect();
    divisor_indices.sort_unstable();
    Ok(CohomologyModel {
        name: format!("{}x{}", x.name, y.name),
        dim_c: x.dim_c + y.dim_c,
        basis,
        pairing,
        cup,
        c1,
        divisor_indices,
        unit_index: idx(x.unit_index, y.unit_index),
        factors: Some(FactorSplit {
            x: x.name.clone(),
            y: y.name.clone(),
            x_rank: nx,
            y_rank: ny,
            x_unit: x.unit_index,
            y_unit: y.unit_index,
        }),
    })
}

/// A rational entry in a model document: either a JSON integer or a
/// `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatValue {
    Int(i64),
    Text(String),
}

impl RatValue {
    fn text(&self) -> String {
        match self {
            RatValue::Int(i) => i.to_string(),
            RatValue::Text(s) => s.clone(),
        }
    }

    fn parse<C: Coefficient>(&self) -> Option<C> {
        match self {
            RatValue::Int(i) => Some(C::from_ratio(*i, 1)),
            RatValue::Text(s) => C::parse_coeff(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub name: String,
    pub dim_c: u32,
    pub basis: Vec<BasisElement>,
    pub pairing: Vec<Vec<RatValue>>,
    pub cup: Vec<Vec<Vec<RatValue>>>,
    pub c1: Vec<RatValue>,
    pub divisor_indices: Vec<usize>,
    pub unit_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<FactorSplit>,
}

//! Complex matrices, eigenvalues, Kronecker sums and spectrum multisets.
//!
//! Everything here is generic over `num_traits::Float`; the crate root
//! exposes the `f64` instantiation as [`crate::CMatrix`].

mod decompose;
mod eigen;
mod matching;

use std::fmt;

use num_complex::Complex;
use num_traits::Float;
use thiserror::Error;

pub use decompose::{generalized_decomposition, GeneralizedBlock, GeneralizedDecomposition};
pub use eigen::{eigen_residual, eigenvalues, eigenvalues_capped, smallest_singular_value, singular_values};
pub use matching::{matching_distance, pairwise_sums};

pub const DEFAULT_EIG_TOL: f64 = 1e-10;
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
pub const DEFAULT_SIZE_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("matrix size {n} exceeds the cap {cap}")]
    SizeCap { n: usize, cap: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge after {iterations} sweeps (subdiagonal {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("eigenvalue residual {residual:e} exceeds {bound:e}")]
    Residual { residual: f64, bound: f64 },
    #[error("multisets have different cardinalities ({left} vs {right})")]
    CardinalityMismatch { left: usize, right: usize },
    #[error("eigenvalue clusters are {gap:e} apart, need more than {required:e}")]
    ClustersTooClose { gap: f64, required: f64 },
    #[error("resolvent is singular on the contour")]
    Singular,
    #[error("{0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// Tolerances for eigenvalue computation and clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Relative residual bound: `σ_min(M − λI) ≤ eig_tol·‖M‖_F`.
    pub eig_tol: f64,
    /// Absolute single-linkage radius.
    pub cluster_tol: f64,
    pub size_cap: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            eig_tol: DEFAULT_EIG_TOL,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            size_cap: DEFAULT_SIZE_CAP,
        }
    }
}

pub(crate) fn real<T: Float>(x: f64) -> T {
    T::from(x).expect("f64 constant fits the float type")
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Float> NumericMatrix<T> {
    /// Panics if `data.len() != n²`.
    pub fn from_vec(n: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data has wrong length");
        NumericMatrix { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SpectralError::Shape("matrix is not square".into()));
        }
        Ok(NumericMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_real_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex::new(x, T::zero())).collect())
                .collect(),
        )
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        NumericMatrix {
            n,
            data: (0..n * n).map(|k| f(k / n, k % n)).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| Complex::new(T::zero(), T::zero()))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| {
            if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
    }

    pub fn diagonal(values: &[Complex<T>]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| if i == j { values[i] } else { Complex::new(T::zero(), T::zero()) })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<Complex<T>>> {
        self.data.chunks(self.n.max(1)).map(<[_]>::to_vec).take(self.n).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(SpectralError::NonFinite)
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self.get(i, i))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.re.is_zero() && a.im.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) - other.get(i, j))
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) * k)
    }

    /// `M − λI`.
    pub fn shifted(&self, lambda: Complex<T>) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.data[i * self.n + i] = m.data[i * self.n + i] - lambda;
        }
        m
    }

    /// Largest entrywise modulus difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }
}

impl<T: Float + fmt::Display> fmt::Display for NumericMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{}{:+}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `A ⊗ I + I ⊗ B`, A's index outer.
pub fn kronecker_sum<T: Float>(a: &NumericMatrix<T>, b: &NumericMatrix<T>, cap: usize) -> Result<NumericMatrix<T>> {
    let (m, n) = (a.size(), b.size());
    if m * n > cap {
        return Err(SpectralError::SizeCap { n: m * n, cap });
    }
    let zero = Complex::new(T::zero(), T::zero());
    Ok(NumericMatrix::from_fn(m * n, |r, c| {
        let (i, j) = (r / n, r % n);
        let (k, l) = (c / n, c % n);
        let mut v = zero;
        if j == l {
            v = v + a.get(i, k);
        }
        if i == k {
            v = v + b.get(j, l);
        }
        v
    }))
}

/// Clustered eigenvalues with multiplicities, sorted by (re, im).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMultiset<T> {
    pub clusters: Vec<(Complex<T>, usize)>,
    pub tol: T,
}

impl<T: Float> SpectrumMultiset<T> {
    pub fn empty(tol: T) -> Self {
        SpectrumMultiset {
            clusters: Vec::new(),
            tol,
        }
    }

    /// Single-linkage clustering at `tol`; a cluster's value is the mean of
    /// its members. Clusters whose means end up within `tol` are merged.
    pub fn from_values(values: &[Complex<T>], tol: T) -> Self {
        Self::from_weighted(&values.iter().map(|&v| (v, 1)).collect::<Vec<_>>(), tol)
    }

    /// As [`Self::from_values`], each value carrying a multiplicity.
    pub fn from_weighted(values: &[(Complex<T>, usize)], tol: T) -> Self {
        let n = values.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for i in 0..n {
            for j in i + 1..n {
                if (values[i].0 - values[j].0).norm() <= tol {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, (Complex<T>, usize)> = Default::default();
        for (i, &(v, w)) in values.iter().enumerate() {
            let r = find(&mut parent, i);
            let e = groups.entry(r).or_insert((Complex::new(T::zero(), T::zero()), 0));
            e.0 = e.0 + v * real::<T>(w as f64);
            e.1 += w;
        }
        let mut clusters: Vec<(Complex<T>, usize)> = groups
            .into_values()
            .filter(|(_, w)| *w > 0)
            .map(|(s, w)| (s / real::<T>(w as f64), w))
            .collect();
        // means can drift together after linkage; merge until separated
        loop {
            let mut merged = false;
            'outer: for i in 0..clusters.len() {
                for j in i + 1..clusters.len() {
                    if (clusters[i].0 - clusters[j].0).norm() <= tol {
                        let (a, wa) = clusters[i];
                        let (b, wb) = clusters.remove(j);
                        let w = wa + wb;
                        clusters[i] = ((a * real::<T>(wa as f64) + b * real::<T>(wb as f64)) / real::<T>(w as f64), w);
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                break;
            }
        }
        sort_complex_by(&mut clusters, |c| c.0);
        SpectrumMultiset { clusters, tol }
    }

    pub fn rank(&self) -> usize {
        self.clusters.iter().map(|c| c.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Values repeated by multiplicity.
    pub fn expanded(&self) -> Vec<Complex<T>> {
        self.clusters
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
            .collect()
    }

    pub fn multiplicity_near(&self, value: Complex<T>) -> usize {
        self.clusters
            .iter()
            .filter(|c| (c.0 - value).norm() <= self.tol)
            .map(|c| c.1)
            .sum()
    }
}

/// Computes eigenvalues and clusters them.
pub fn spectrum<T: Float>(m: &NumericMatrix<T>, cfg: &SpectralConfig) -> Result<SpectrumMultiset<T>> {
    let eigs = eigenvalues_capped(m, real(cfg.eig_tol), cfg.size_cap)?;
    Ok(SpectrumMultiset::from_values(&eigs, real(cfg.cluster_tol)))
}

pub fn spectrum_multiset<T: Float>(eigs: &[Complex<T>], cluster_tol: T) -> SpectrumMultiset<T> {
    SpectrumMultiset::from_values(eigs, cluster_tol)
}

pub(crate) fn sort_complex_by<X, T: Float>(v: &mut [X], key: impl Fn(&X) -> Complex<T>) {
    v.sort_by(|a, b| {
        let (a, b) = (key(a), key(b));
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    fn a2() -> NumericMatrix<f64> {
        NumericMatrix::from_real_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap()
    }

    #[test]
    fn kronecker_sum_of_the_p1_matrix_with_itself() {
        let k = kronecker_sum(&a2(), &a2(), 64).unwrap();
        let expected = NumericMatrix::from_real_rows(&[
            vec![0.0, 2.0, 2.0, 0.0],
            vec![2.0, 0.0, 0.0, 2.0],
            vec![2.0, 0.0, 0.0, 2.0],
            vec![0.0, 2.0, 2.0, 0.0],
        ])
        .unwrap();
        assert_eq!(k, expected);
    }

    #[test]
    fn kronecker_sum_with_the_zero_1x1_is_identity_map() {
        let z = NumericMatrix::<f64>::zeros(1);
        assert_eq!(kronecker_sum(&a2(), &z, 64).unwrap(), a2());
        assert!(matches!(
            kronecker_sum(&NumericMatrix::<f64>::zeros(9), &NumericMatrix::zeros(8), 64),
            Err(SpectralError::SizeCap { n: 72, cap: 64 })
        ));
    }

    #[test]
    fn clustering_examples() {
        let s = SpectrumMultiset::from_values(&[c(4.0), c(1e-13), c(-1e-13), c(-4.0)], 1e-9);
        assert_eq!(s.clusters.len(), 3);
        assert_eq!(s.clusters[0], (c(-4.0), 1));
        assert_eq!(s.clusters[1].1, 2);
        assert!(s.clusters[1].0.norm() < 1e-15);
        assert_eq!(s.clusters[2], (c(4.0), 1));

        let s = SpectrumMultiset::from_values(&[c(1.0), c(2.0), c(3.0)], 1e-9);
        assert!(s.clusters.iter().all(|c| c.1 == 1));
        let s = SpectrumMultiset::from_values(&[c(5.0); 4], 1e-9);
        assert_eq!(s.clusters, vec![(c(5.0), 4)]);
    }

    #[test]
    fn chained_values_link_into_one_cluster() {
        let s = SpectrumMultiset::from_values(&[c(0.0), c(0.8), c(1.6)], 1.0);
        assert_eq!(s.clusters.len(), 1);
        assert_eq!(s.rank(), 3);
        assert!((s.clusters[0].0 - c(0.8)).norm() < 1e-15);
    }

    #[test]
    fn matrix_helpers() {
        let m = a2();
        assert_eq!(m.trace(), c(0.0));
        assert_eq!(m.mul(&m), NumericMatrix::diagonal(&[c(4.0), c(4.0)]));
        assert!((m.frobenius_norm() - 8f64.sqrt()).abs() < 1e-15);
        let mut bad = m.clone();
        bad.set(0, 0, C::new(f64::NAN, 0.0));
        assert_eq!(bad.ensure_finite(), Err(SpectralError::NonFinite));
    }

    #[test]
    fn f32_instantiation() {
        let m = NumericMatrix::<f32>::from_real_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let s = spectrum(&m, &SpectralConfig { eig_tol: 1e-5, cluster_tol: 1e-4, size_cap: 64 }).unwrap();
        assert_eq!(s.clusters.len(), 2);
        assert!((s.clusters[0].0.re + 2.0).abs() < 1e-5);
    }
}

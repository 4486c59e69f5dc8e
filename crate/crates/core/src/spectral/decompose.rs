//! Generalized-eigenspace projectors per eigenvalue cluster.

use num_complex::Complex;
use num_traits::Float;

use super::{eigenvalues_capped, real, NumericMatrix, Result, SpectralConfig, SpectralError, SpectrumMultiset};

const CONTOUR_NODES: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedBlock<T> {
    pub value: Complex<T>,
    pub multiplicity: usize,
    /// Spectral projector onto the generalized eigenspace of the cluster.
    pub projector: NumericMatrix<T>,
    /// `trace(P)`, which should equal the multiplicity.
    pub trace: Complex<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedDecomposition<T> {
    pub blocks: Vec<GeneralizedBlock<T>>,
    /// `‖M − Σ P_a M P_a‖_F`.
    pub reconstruction_residual: T,
    /// `‖I − Σ P_a‖_F`.
    pub completeness_residual: T,
}

/// Riesz projectors `(1/2πi)∮ (z − M)⁻¹ dz` around each cluster, by the
/// trapezoid rule on a circle of radius half the smallest cluster gap.
pub fn generalized_decomposition<T: Float>(
    m: &NumericMatrix<T>,
    cfg: &SpectralConfig,
) -> Result<GeneralizedDecomposition<T>> {
    let n = m.size();
    let eigs = eigenvalues_capped(m, real(cfg.eig_tol), cfg.size_cap)?;
    let spec = SpectrumMultiset::from_values(&eigs, real(cfg.cluster_tol));
    let values: Vec<Complex<T>> = spec.clusters.iter().map(|c| c.0).collect();
    let mut gap = T::infinity();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    let required = real::<T>(10.0 * cfg.cluster_tol);
    if values.len() > 1 && gap <= required {
        return Err(SpectralError::ClustersTooClose {
            gap: gap.to_f64().unwrap_or(f64::NAN),
            required: required.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut blocks = Vec::with_capacity(values.len());
    for &(value, multiplicity) in &spec.clusters {
        let projector = if values.len() == 1 {
            NumericMatrix::identity(n)
        } else {
            riesz_projector(m, value, gap / real(2.0))?
        };
        let trace = projector.trace();
        blocks.push(GeneralizedBlock {
            value,
            multiplicity,
            projector,
            trace,
        });
    }
    let mut recon = NumericMatrix::zeros(n);
    let mut total = NumericMatrix::zeros(n);
    for b in &blocks {
        recon = recon.add(&b.projector.mul(m).mul(&b.projector));
        total = total.add(&b.projector);
    }
    Ok(GeneralizedDecomposition {
        blocks,
        reconstruction_residual: m.sub(&recon).frobenius_norm(),
        completeness_residual: NumericMatrix::identity(n).sub(&total).frobenius_norm(),
    })
}

fn riesz_projector<T: Float>(m: &NumericMatrix<T>, center: Complex<T>, radius: T) -> Result<NumericMatrix<T>> {
    let n = m.size();
    let nodes = CONTOUR_NODES;
    let mut acc = NumericMatrix::zeros(n);
    let two_pi = real::<T>(std::f64::consts::TAU);
    for k in 0..nodes {
        let theta = two_pi * real(k as f64) / real(nodes as f64);
        let w = Complex::from_polar(radius, theta);
        // (z − M)⁻¹ with z = center + w; dz = i·w dθ, so the 1/(2πi) cancels to w/N
        let resolvent = inverse(&m.shifted(center + w).scale(Complex::new(-T::one(), T::zero())))?;
        acc = acc.add(&resolvent.scale(w / real::<T>(nodes as f64)));
    }
    Ok(acc)
}

/// Gauss–Jordan with partial pivoting.
fn inverse<T: Float>(a: &NumericMatrix<T>) -> Result<NumericMatrix<T>> {
    let n = a.size();
    let mut m = a.rows();
    let mut inv = NumericMatrix::<T>::identity(n).rows();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].norm().partial_cmp(&m[y][col].norm()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty range");
        if m[pivot][col].norm().is_zero() {
            return Err(SpectralError::Singular);
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] = m[col][j] / p;
            inv[col][j] = inv[col][j] / p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col];
            if f.norm().is_zero() {
                continue;
            }
            for j in 0..n {
                m[r][j] = m[r][j] - f * m[col][j];
                inv[r][j] = inv[r][j] - f * inv[col][j];
            }
        }
    }
    NumericMatrix::from_rows(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    #[test]
    fn kronecker_example_splits_into_1_2_1() {
        let k = NumericMatrix::from_real_rows(&[
            vec![0.0, 2.0, 2.0, 0.0],
            vec![2.0, 0.0, 0.0, 2.0],
            vec![2.0, 0.0, 0.0, 2.0],
            vec![0.0, 2.0, 2.0, 0.0],
        ])
        .unwrap();
        let d = generalized_decomposition(&k, &SpectralConfig::default()).unwrap();
        let sizes: Vec<usize> = d.blocks.iter().map(|b| b.multiplicity).collect();
        assert_eq!(sizes, vec![1, 2, 1]);
        for b in &d.blocks {
            assert!((b.trace - C::new(b.multiplicity as f64, 0.0)).norm() < 1e-10);
            // P² = P
            assert!(b.projector.mul(&b.projector).max_abs_diff(&b.projector) < 1e-10);
        }
        assert!(d.reconstruction_residual < 1e-10);
        assert!(d.completeness_residual < 1e-10);
    }

    #[test]
    fn identity_is_one_block() {
        let d = generalized_decomposition(&NumericMatrix::<f64>::identity(3), &SpectralConfig::default()).unwrap();
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.blocks[0].multiplicity, 3);
        assert_eq!(d.blocks[0].projector, NumericMatrix::identity(3));
    }

    #[test]
    fn jordan_block_keeps_its_multiplicity() {
        let j = NumericMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let d = generalized_decomposition(&j, &SpectralConfig::default()).unwrap();
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.blocks[0].multiplicity, 2);
        assert_eq!(d.blocks[0].value, C::new(0.0, 0.0));
    }

    #[test]
    fn defective_block_next_to_a_simple_eigenvalue() {
        let m = NumericMatrix::from_real_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 3.0]]).unwrap();
        let cfg = SpectralConfig { cluster_tol: 1e-6, ..SpectralConfig::default() };
        let d = generalized_decomposition(&m, &cfg).unwrap();
        assert_eq!(d.blocks.iter().map(|b| b.multiplicity).collect::<Vec<_>>(), vec![2, 1]);
        assert!((d.blocks[0].trace - C::new(2.0, 0.0)).norm() < 1e-8);
        assert!(d.reconstruction_residual < 1e-8);
    }

    #[test]
    fn close_clusters_are_refused() {
        let m = NumericMatrix::diagonal(&[C::new(0.0, 0.0), C::new(5e-8, 0.0)]);
        assert!(matches!(
            generalized_decomposition(&m, &SpectralConfig::default()),
            Err(SpectralError::ClustersTooClose { .. })
        ));
    }
}

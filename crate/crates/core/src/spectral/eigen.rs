//! Balanced Hessenberg reduction plus shifted complex QR, and a one-sided
//! Jacobi SVD used to certify the results.

use num_complex::Complex;
use num_traits::Float;

use super::{real, sort_complex_by, NumericMatrix, Result, SpectralError, DEFAULT_SIZE_CAP};

const MAX_ITER_PER_EIGENVALUE: usize = 60;
const MAX_JACOBI_SWEEPS: usize = 100;

fn zero<T: Float>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn abs1<T: Float>(z: Complex<T>) -> T {
    z.re.abs() + z.im.abs()
}

/// Eigenvalues with algebraic multiplicity, sorted by (re, im). Each value
/// satisfies `σ_min(M − λI) ≤ tol·‖M‖_F`.
pub fn eigenvalues<T: Float>(m: &NumericMatrix<T>, tol: T) -> Result<Vec<Complex<T>>> {
    eigenvalues_capped(m, tol, DEFAULT_SIZE_CAP)
}

pub fn eigenvalues_capped<T: Float>(m: &NumericMatrix<T>, tol: T, cap: usize) -> Result<Vec<Complex<T>>> {
    let n = m.size();
    if n > cap {
        return Err(SpectralError::SizeCap { n, cap });
    }
    m.ensure_finite()?;
    let mut a = m.rows();
    balance(&mut a);
    hessenberg(&mut a);
    let mut values = hessenberg_qr(&mut a)?;
    sort_complex_by(&mut values, |z| *z);
    let residual = eigen_residual(m, &values);
    if residual > tol {
        return Err(SpectralError::Residual {
            residual: residual.to_f64().unwrap_or(f64::NAN),
            bound: tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(values)
}

/// `max_λ σ_min(M − λI) / ‖M‖_F` (absolute when `M = 0`).
pub fn eigen_residual<T: Float>(m: &NumericMatrix<T>, values: &[Complex<T>]) -> T {
    let norm = m.frobenius_norm();
    let scale = if norm > T::zero() { norm } else { T::one() };
    values
        .iter()
        .map(|&l| smallest_singular_value(&m.shifted(l)) / scale)
        .fold(T::zero(), T::max)
}

/// Diagonal similarity by powers of two equalising row and column norms.
fn balance<T: Float>(a: &mut [Vec<Complex<T>>]) {
    let n = a.len();
    let radix = real::<T>(2.0);
    let sq = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c = c + abs1(a[j][i]);
                    r = r + abs1(a[i][j]);
                }
            }
            if c.is_zero() || r.is_zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f = f * radix;
                c = c * sq;
            }
            g = r * radix;
            while c > g {
                f = f / radix;
                c = c / sq;
            }
            if (c + r) / f < real::<T>(0.95) * s {
                done = false;
                let inv = T::one() / f;
                for j in 0..n {
                    a[i][j] = a[i][j] * inv;
                }
                for row in a.iter_mut() {
                    row[i] = row[i] * f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg<T: Float>(a: &mut [Vec<Complex<T>>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let alpha = (k + 1..n).fold(T::zero(), |s, i| s + a[i][k].norm_sqr()).sqrt();
        if alpha.is_zero() {
            continue;
        }
        let x0 = a[k + 1][k];
        let phase = if x0.norm().is_zero() {
            Complex::new(T::one(), T::zero())
        } else {
            x0 / x0.norm()
        };
        let mut v: Vec<Complex<T>> = (k + 1..n).map(|i| a[i][k]).collect();
        v[0] = v[0] + phase * alpha;
        let vv = v.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        if vv.is_zero() {
            continue;
        }
        let two = real::<T>(2.0) / vv;
        // left: rows k+1.., columns k..
        for j in k..n {
            let dot = v.iter().enumerate().fold(zero(), |s, (p, vp)| s + vp.conj() * a[k + 1 + p][j]);
            let f = dot * two;
            for (p, vp) in v.iter().enumerate() {
                a[k + 1 + p][j] = a[k + 1 + p][j] - *vp * f;
            }
        }
        // right: all rows, columns k+1..
        for row in a.iter_mut() {
            let dot = v.iter().enumerate().fold(zero(), |s, (p, vp)| s + row[k + 1 + p] * *vp);
            let f = dot * two;
            for (p, vp) in v.iter().enumerate() {
                row[k + 1 + p] = row[k + 1 + p] - f * vp.conj();
            }
        }
        for row in a.iter_mut().skip(k + 2) {
            row[k] = zero();
        }
    }
}

fn eig2<T: Float>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> (Complex<T>, Complex<T>) {
    let half = real::<T>(0.5);
    let m = (a + d) * half;
    let h = (a - d) * half;
    let disc = (h * h + b * c).sqrt();
    let (p, q) = (m + disc, m - disc);
    let (big, _) = if p.norm() >= q.norm() { (p, q) } else { (q, p) };
    if big.norm().is_zero() {
        return (zero(), zero());
    }
    let det = a * d - b * c;
    (big, det / big)
}

/// Givens rotation `[c s; −s̄ c]` zeroing `b` against `a`.
fn givens<T: Float>(a: Complex<T>, b: Complex<T>) -> (T, Complex<T>) {
    let na = a.norm();
    let nb = b.norm();
    if nb.is_zero() {
        return (T::one(), zero());
    }
    if na.is_zero() {
        return (T::zero(), Complex::new(T::one(), T::zero()));
    }
    let norm = na.hypot(nb);
    let alpha = a / na;
    (na / norm, alpha * b.conj() / norm)
}

fn hessenberg_qr<T: Float>(h: &mut [Vec<Complex<T>>]) -> Result<Vec<Complex<T>>> {
    let n = h.len();
    let eps = T::epsilon();
    let mut values = Vec::with_capacity(n);
    if n == 0 {
        return Ok(values);
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            values.push(h[0][0]);
            break;
        }
        // locate the start of the active unreduced block
        let mut l = hi;
        while l > 0 {
            let s = abs1(h[l][l]) + abs1(h[l - 1][l - 1]);
            let sub = abs1(h[l][l - 1]);
            if sub <= eps * s || sub <= T::min_positive_value() {
                h[l][l - 1] = zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            values.push(h[hi][hi]);
            hi -= 1;
            iter = 0;
            continue;
        }
        if l + 1 == hi {
            let (x, y) = eig2(h[l][l], h[l][hi], h[hi][l], h[hi][hi]);
            values.push(x);
            values.push(y);
            if l == 0 {
                break;
            }
            hi = l - 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > MAX_ITER_PER_EIGENVALUE {
            return Err(SpectralError::NoConvergence {
                iterations: total,
                residual: abs1(h[hi][hi - 1]).to_f64().unwrap_or(f64::NAN),
            });
        }
        let shift = if iter.is_multiple_of(10) {
            // exceptional shift breaks cycles
            h[hi][hi] + Complex::new(abs1(h[hi][hi - 1]) + abs1(h[hi - 1][hi - 2]), T::zero()) * real::<T>(0.75)
        } else {
            let (x, y) = eig2(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi]);
            if (x - h[hi][hi]).norm() <= (y - h[hi][hi]).norm() {
                x
            } else {
                y
            }
        };
        qr_step(h, l, hi, shift);
    }
    Ok(values)
}

/// One explicit-shift QR step on the window `lo..=hi`.
fn qr_step<T: Float>(h: &mut [Vec<Complex<T>>], lo: usize, hi: usize, shift: Complex<T>) {
    for k in lo..=hi {
        h[k][k] = h[k][k] - shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[k][k], h[k + 1][k]);
        for j in k..=hi {
            let (x, y) = (h[k][j], h[k + 1][j]);
            h[k][j] = x * c + s * y;
            h[k + 1][j] = -s.conj() * x + y * c;
        }
        h[k + 1][k] = zero();
        rots.push((c, s));
    }
    for (off, &(c, s)) in rots.iter().enumerate() {
        let k = lo + off;
        for row in h.iter_mut().take((k + 2).min(hi) + 1).skip(lo) {
            let (x, y) = (row[k], row[k + 1]);
            row[k] = x * c + s.conj() * y;
            row[k + 1] = -s * x + y * c;
        }
    }
    for k in lo..=hi {
        h[k][k] = h[k][k] + shift;
    }
}

/// Singular values by one-sided Jacobi, descending.
pub fn singular_values<T: Float>(m: &NumericMatrix<T>) -> Vec<T> {
    let n = m.size();
    // columns of M
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| (0..n).map(|i| m.get(i, j)).collect()).collect();
    let eps = T::epsilon();
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = cols[p].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
                let beta = cols[q].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
                let gamma = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .fold(Complex::<T>::new(T::zero(), T::zero()), |s, (a, b)| s + a.conj() * *b);
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g.is_zero() {
                    continue;
                }
                rotated = true;
                let e = gamma / g;
                let zeta = (beta - alpha) / (real::<T>(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let a = cols[p][i];
                    let b = cols[q][i] * e.conj();
                    cols[p][i] = a * c - b * s;
                    cols[q][i] = (a * s + b * c) * e;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols
        .iter()
        .map(|c| c.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

pub fn smallest_singular_value<T: Float>(m: &NumericMatrix<T>) -> T {
    singular_values(m).last().copied().unwrap_or_else(T::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn m(rows: &[Vec<f64>]) -> NumericMatrix<f64> {
        NumericMatrix::from_real_rows(rows).unwrap()
    }

    fn close(a: &[C], b: &[C], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn symmetric_2x2() {
        let e = eigenvalues(&m(&[vec![0.0, 2.0], vec![2.0, 0.0]]), 1e-10).unwrap();
        assert!(close(&e, &[C::new(-2.0, 0.0), C::new(2.0, 0.0)], 1e-14));
    }

    #[test]
    fn diagonal_values_come_back_sorted() {
        let d = NumericMatrix::diagonal(&[C::new(3.0, 1.0), C::new(-1.0, 0.0), C::new(3.0, -1.0)]);
        let e = eigenvalues(&d, 1e-10).unwrap();
        assert_eq!(e, vec![C::new(-1.0, 0.0), C::new(3.0, -1.0), C::new(3.0, 1.0)]);
    }

    #[test]
    fn kronecker_example_4x4() {
        let k = m(&[
            vec![0.0, 2.0, 2.0, 0.0],
            vec![2.0, 0.0, 0.0, 2.0],
            vec![2.0, 0.0, 0.0, 2.0],
            vec![0.0, 2.0, 2.0, 0.0],
        ]);
        let e = eigenvalues(&k, 1e-10).unwrap();
        assert!(close(&e, &[C::new(-4.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(4.0, 0.0)], 1e-12));
    }

    #[test]
    fn rotation_has_complex_eigenvalues() {
        let e = eigenvalues(&m(&[vec![0.0, -1.0], vec![1.0, 0.0]]), 1e-10).unwrap();
        assert!(close(&e, &[C::new(0.0, -1.0), C::new(0.0, 1.0)], 1e-14));
    }

    #[test]
    fn companion_matrix_roots() {
        // x³ − 6x² + 11x − 6 = (x−1)(x−2)(x−3)
        let c = m(&[vec![6.0, -11.0, 6.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let e = eigenvalues(&c, 1e-10).unwrap();
        assert!(close(&e, &[C::new(1.0, 0.0), C::new(2.0, 0.0), C::new(3.0, 0.0)], 1e-10));
    }

    #[test]
    fn jordan_block_keeps_multiplicity() {
        let e = eigenvalues(&m(&[vec![0.0, 1.0], vec![0.0, 0.0]]), 1e-10).unwrap();
        assert_eq!(e.len(), 2);
        assert!(e.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn badly_scaled_matrix_is_balanced() {
        // [[0, 2q],[2, 0]] at q = 1e-12: eigenvalues ±2e-6
        let e = eigenvalues(&m(&[vec![0.0, 2e-12], vec![2.0, 0.0]]), 1e-10).unwrap();
        assert!((e[0].re + 2e-6).abs() < 1e-18 && (e[1].re - 2e-6).abs() < 1e-18);
    }

    #[test]
    fn trace_and_determinant_agree_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=8 {
            let a = NumericMatrix::from_fn(n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let e = eigenvalues(&a, 1e-10).unwrap();
            let sum: C = e.iter().sum();
            assert!((sum - a.trace()).norm() < 1e-12 * a.frobenius_norm().max(1.0));
            assert!(eigen_residual(&a, &e) < 1e-12);
        }
    }

    #[test]
    fn singular_values_of_known_matrices() {
        let sv = singular_values(&m(&[vec![3.0, 0.0], vec![0.0, -4.0]]));
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
        // rank one: [[1,1],[1,1]] has singular values 2, 0
        let sv = singular_values(&m(&[vec![1.0, 1.0], vec![1.0, 1.0]]));
        assert!((sv[0] - 2.0).abs() < 1e-14 && sv[1].abs() < 1e-14);
        let u = NumericMatrix::from_rows(vec![
            vec![C::new(0.0, 1.0), C::new(0.0, 0.0)],
            vec![C::new(0.0, 0.0), C::new(0.6, 0.8)],
        ])
        .unwrap();
        assert!(singular_values(&u).iter().all(|s| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn size_cap_is_enforced() {
        assert!(matches!(
            eigenvalues_capped(&NumericMatrix::<f64>::zeros(5), 1e-10, 4),
            Err(SpectralError::SizeCap { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn residual_contract_rejects_wrong_values() {
        let a = m(&[vec![0.0, 2.0], vec![2.0, 0.0]]);
        assert!(eigen_residual(&a, &[C::new(1.0, 0.0)]) > 0.1);
    }
}

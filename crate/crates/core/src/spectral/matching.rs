//! Bottleneck distance between equal-size multisets of complex numbers.

use num_complex::Complex;
use num_traits::Float;

use super::{Result, SpectralError};

/// `min over bijections σ of max |a_i − b_σ(i)|`. Exact: the optimum is one
/// of the pairwise distances, found by bisection over the sorted candidates
/// with a perfect-matching test at each threshold.
pub fn matching_distance<T: Float>(a: &[Complex<T>], b: &[Complex<T>]) -> Result<T> {
    if a.len() != b.len() {
        return Err(SpectralError::CardinalityMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n == 0 {
        return Ok(T::zero());
    }
    let dist: Vec<Vec<T>> = a.iter().map(|x| b.iter().map(|y| (*x - *y).norm()).collect()).collect();
    let mut cand: Vec<T> = dist.iter().flatten().copied().collect();
    cand.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    cand.dedup();
    let (mut lo, mut hi) = (0, cand.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(&dist, cand[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(cand[lo])
}

fn perfect_matching<T: Float>(dist: &[Vec<T>], thr: T) -> bool {
    let n = dist.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, dist, thr, &mut seen, &mut owner) {
            return false;
        }
    }
    true
}

fn augment<T: Float>(i: usize, dist: &[Vec<T>], thr: T, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for j in 0..dist.len() {
        if dist[i][j] <= thr && !seen[j] {
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, dist, thr, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
    }
    false
}

/// `{λ_i + μ_j}` in i-major order.
pub fn pairwise_sums<T: Float>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.iter().flat_map(|x| b.iter().map(move |y| *x + *y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn r(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn brute_force(a: &[C], b: &[C]) -> f64 {
        fn rec(a: &[C], b: &[C], used: &mut Vec<bool>, i: usize, cur: f64, best: &mut f64) {
            if cur >= *best {
                return;
            }
            if i == a.len() {
                *best = cur;
                return;
            }
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    rec(a, b, used, i + 1, cur.max((a[i] - b[j]).norm()), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(a, b, &mut vec![false; b.len()], 0, 0.0, &mut best);
        best
    }

    #[test]
    fn two_element_example() {
        let d = matching_distance(&[r(1.0), r(2.0)], &[r(1.1), r(2.2)]).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
    }

    #[test]
    fn self_distance_is_zero() {
        let s = [r(1.0), C::new(0.0, 3.0), r(-2.0)];
        assert_eq!(matching_distance(&s, &s).unwrap(), 0.0);
        let mut p = s;
        p.reverse();
        assert_eq!(matching_distance(&s, &p).unwrap(), 0.0);
    }

    #[test]
    fn cardinality_mismatch() {
        assert!(matches!(
            matching_distance(&[r(1.0)], &[r(1.0), r(2.0)]),
            Err(SpectralError::CardinalityMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn agrees_with_permutation_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a: Vec<C> = (0..6).map(|_| C::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))).collect();
            let b: Vec<C> = (0..6).map(|_| C::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))).collect();
            assert_eq!(matching_distance(&a, &b).unwrap(), brute_force(&a, &b));
        }
    }

    #[test]
    fn pairwise_sums_are_i_major() {
        assert_eq!(pairwise_sums(&[r(1.0), r(2.0)], &[r(10.0), r(20.0)]), vec![r(11.0), r(21.0), r(12.0), r(22.0)]);
    }
}

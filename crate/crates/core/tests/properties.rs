use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;
use num_rational::{BigRational, Rational64};
use proptest::prelude::*;

use qcw_core::Coefficient;
use qcw_core::atoms::{atom_sum, atom_tensor, AtomProxy};
use qcw_core::catalog::{p1xp1_model, Catalog};
use qcw_core::cohomology::kunneth_product;
use qcw_core::quantum::{Potential, QuantumModel};
use qcw_core::series::{Monomial, MonomialMap, Series, Truncation, Variables};
use qcw_core::spectral::{eigenvalues, kronecker_sum, matching_distance, pairwise_sums, NumericMatrix, DEFAULT_SIZE_CAP};

type Q = BigRational;
type C64 = Complex<f64>;

fn vars() -> Arc<Variables> {
    Variables::new(["q1", "q2"], ["tp"]).unwrap()
}

fn trunc() -> Truncation {
    Truncation::integral(3, 4)
}

prop_compose! {
    fn term()(a in 0i64..3, b in 0i64..3, t in 0u32..4, n in -5i64..6, d in 1i64..4) -> (Monomial, Q) {
        (Monomial::int(&[a, b], &[t]), Q::from_ratio(n, d))
    }
}

fn series() -> impl Strategy<Value = Series<Q>> {
    prop::collection::vec(term(), 0..6).prop_map(|terms| {
        let keep: Vec<_> = terms.into_iter().filter(|(m, _)| trunc().admits(m)).collect();
        Series::zero(vars(), trunc()).with_terms(keep).unwrap()
    })
}

fn nonzero_series() -> impl Strategy<Value = Series<Q>> {
    series().prop_filter("nonzero", |s| !s.is_zero())
}

fn complex() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix(n: usize) -> impl Strategy<Value = NumericMatrix<f64>> {
    prop::collection::vec(complex(), n * n).prop_map(move |v| NumericMatrix::from_vec(n, v))
}

fn square() -> impl Strategy<Value = NumericMatrix<f64>> {
    (2usize..=5).prop_flat_map(matrix)
}

fn multiset(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(complex(), n)
}

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_ring_axioms(a in series(), b in series(), c in series()) {
        let ab = a.checked_mul(&b).unwrap();
        prop_assert_eq!(ab.clone(), b.checked_mul(&a).unwrap());
        prop_assert_eq!(ab.checked_mul(&c).unwrap(), a.checked_mul(&b.checked_mul(&c).unwrap()).unwrap());
        prop_assert_eq!(
            a.checked_mul(&b.checked_add(&c).unwrap()).unwrap(),
            ab.checked_add(&a.checked_mul(&c).unwrap()).unwrap()
        );
        prop_assert!(a.checked_sub(&a).unwrap().is_zero());
        let one = a.constant_like(Q::from_integer(1.into()));
        prop_assert_eq!(a.checked_mul(&one).unwrap(), a);
    }

    #[test]
    fn derivatives_commute(a in series()) {
        let d12 = a.derive("q1").unwrap().derive("q2").unwrap();
        let d21 = a.derive("q2").unwrap().derive("q1").unwrap();
        prop_assert_eq!(d12, d21);
        let dqt = a.derive("q1").unwrap().derive("tp").unwrap();
        let dtq = a.derive("tp").unwrap().derive("q1").unwrap();
        prop_assert_eq!(dqt, dtq);
    }

    #[test]
    fn substitution_is_a_ring_homomorphism(a in series(), b in series()) {
        // q1 -> u^(1/2) v^(1/2), q2 -> v keeps q-orders, so both sides see the same truncation
        let map = MonomialMap::new(vec!["u".into(), "v".into()], vec![vec![r(1, 2), r(1, 2)], vec![r(0, 1), r(1, 1)]]);
        let lhs = a.checked_mul(&b).unwrap().substitute(&map).unwrap();
        let rhs = a.substitute(&map).unwrap().checked_mul(&b.substitute(&map).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        let sum = a.checked_add(&b).unwrap().substitute(&map).unwrap();
        prop_assert_eq!(sum, a.substitute(&map).unwrap().checked_add(&b.substitute(&map).unwrap()).unwrap());
    }

    #[test]
    fn evaluation_commutes_with_substitution(a in series(), u in 0.1f64..2.0, v in 0.1f64..2.0, t in -1.0f64..1.0) {
        let map = MonomialMap::new(vec!["u".into(), "v".into()], vec![vec![r(1, 2), r(1, 2)], vec![r(1, 2), r(-1, 2)]]);
        let s = a.substitute(&map).unwrap();
        let at_new: BTreeMap<String, C64> =
            [("u", u), ("v", v), ("tp", t)].iter().map(|(k, x)| (k.to_string(), C64::new(*x, 0.0))).collect();
        let pushed: BTreeMap<String, C64> = [("q1", (u * v).sqrt()), ("q2", (u / v).sqrt()), ("tp", t)]
            .iter()
            .map(|(k, x)| (k.to_string(), C64::new(*x, 0.0)))
            .collect();
        let x = s.evaluate(&at_new).unwrap().value;
        let y = a.evaluate(&pushed).unwrap().value;
        prop_assert!((x - y).norm() <= 1e-9 * (1.0 + y.norm()), "{} vs {}", x, y);
    }

    #[test]
    fn min_order_part_is_multiplicative(a in nonzero_series(), b in nonzero_series()) {
        let lead = a.min_order_part().unwrap().checked_mul(&b.min_order_part().unwrap()).unwrap();
        prop_assume!(!lead.is_zero());
        prop_assert_eq!(a.checked_mul(&b).unwrap().min_order_part().unwrap(), lead);
    }

    #[test]
    fn structure_constants_are_symmetric_and_the_product_is_commutative(g in series()) {
        let qm = QuantumModel::new(p1xp1_model(), Potential { model_ref: "p1xp1".into(), series: g }).unwrap();
        let n = qm.rank();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = qm.gamma_ijk(i, j, k).unwrap();
                    prop_assert_eq!(a, qm.gamma_ijk(j, k, i).unwrap());
                    prop_assert_eq!(a, qm.gamma_ijk(j, i, k).unwrap());
                }
                prop_assert_eq!(qm.quantum_product(i, j).unwrap(), qm.quantum_product(j, i).unwrap());
            }
            let unit = qm.quantum_product(0, i).unwrap();
            for (f, s) in unit.iter().enumerate() {
                prop_assert_eq!(s.is_zero(), f != i);
            }
        }
    }

    #[test]
    fn kronecker_sum_spectra_are_pairwise_sums(a in square(), b in square()) {
        let k = kronecker_sum(&a, &b, DEFAULT_SIZE_CAP).unwrap();
        let ea = eigenvalues(&a, 1e-10).unwrap();
        let eb = eigenvalues(&b, 1e-10).unwrap();
        let ek = eigenvalues(&k, 1e-10).unwrap();
        let scale = 1.0f64.max(a.frobenius_norm() + b.frobenius_norm());
        let d = matching_distance(&ek, &pairwise_sums(&ea, &eb)).unwrap();
        // defective random cases are not expected; the bound is the one stated for the suite
        prop_assert!(d <= 1e-9 * scale, "d = {d:e}");
    }

    #[test]
    fn matching_distance_is_a_metric(n in 1usize..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || (0..n).map(|_| C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))).collect::<Vec<_>>();
        let (x, y, z) = (draw(), draw(), draw());
        let dxy = matching_distance(&x, &y).unwrap();
        prop_assert_eq!(dxy, matching_distance(&y, &x).unwrap());
        prop_assert_eq!(matching_distance(&x, &x).unwrap(), 0.0);
        let mut shuffled = x.clone();
        shuffled.reverse();
        prop_assert_eq!(matching_distance(&x, &shuffled).unwrap(), 0.0);
        prop_assert!(dxy <= matching_distance(&x, &z).unwrap() + matching_distance(&z, &y).unwrap() + 1e-12);
    }

    #[test]
    fn trace_is_the_eigenvalue_sum(m in square()) {
        let e = eigenvalues(&m, 1e-10).unwrap();
        let sum: C64 = e.iter().sum();
        prop_assert!((sum - m.trace()).norm() <= 1e-10 * 1.0f64.max(m.frobenius_norm()));
    }

    #[test]
    fn conjugation_preserves_spectra(m in matrix(4), upper in multiset(6)) {
        // T = I + N with N strictly upper triangular, so T⁻¹ = I - N + N² - N³
        let mut nm = NumericMatrix::zeros(4);
        let mut it = upper.into_iter();
        for i in 0..4 {
            for j in i + 1..4 {
                nm.set(i, j, it.next().unwrap());
            }
        }
        let id = NumericMatrix::identity(4);
        let t = id.add(&nm);
        let n2 = nm.mul(&nm);
        let t_inv = id.sub(&nm).add(&n2).sub(&n2.mul(&nm));
        prop_assert!(t.mul(&t_inv).max_abs_diff(&id) < 1e-9);
        let conj = t_inv.mul(&m).mul(&t);
        let d = matching_distance(&eigenvalues(&m, 1e-10).unwrap(), &eigenvalues(&conj, 1e-8).unwrap()).unwrap();
        let scale = 1.0f64.max(conj.frobenius_norm());
        prop_assert!(d <= 1e-6 * scale, "d = {d:e}");
    }

    #[test]
    fn atom_tensor_laws(a in multiset(2), b in multiset(3), c in multiset(2)) {
        let tol = 1e-8;
        let atom = |v: &[C64]| AtomProxy::from_clusters(&v.iter().map(|z| (*z, 1)).collect::<Vec<_>>(), tol);
        let (a, b, c) = (atom(&a), atom(&b), atom(&c));
        let ab = atom_tensor(&a, &b);
        prop_assert_eq!(ab.rank(), a.rank() * b.rank());
        prop_assert!(ab.distance(&atom_tensor(&b, &a)).unwrap() <= 10.0 * tol);
        let left = atom_tensor(&ab, &c);
        let right = atom_tensor(&a, &atom_tensor(&b, &c));
        prop_assert!(left.distance(&right).unwrap() <= 10.0 * tol);
        prop_assert_eq!(atom_tensor(&a, &AtomProxy::unit(tol)).spectrum, a.spectrum.clone());
        prop_assert_eq!(atom_sum(&a, &b).rank(), a.rank() + b.rank());
    }
}

#[test]
fn kunneth_product_is_associative_up_to_relabelling() {
    let cat = Catalog::builtin();
    let p1 = cat.get("p1").unwrap().model.clone();
    let pt = cat.get("point").unwrap().model.clone();
    for (x, y, z) in [(&p1, &p1, &p1), (&p1, &pt, &p1), (&pt, &p1, &p1)] {
        let left = kunneth_product(&kunneth_product(x, y).unwrap(), z).unwrap();
        let right = kunneth_product(x, &kunneth_product(y, z).unwrap()).unwrap();
        // with i-major order both sides enumerate (i, j, k) lexicographically
        assert_eq!(left.pairing, right.pairing);
        assert_eq!(left.cup, right.cup);
        assert_eq!(
            left.basis.iter().map(|b| b.degree).collect::<Vec<_>>(),
            right.basis.iter().map(|b| b.degree).collect::<Vec<_>>()
        );
        assert_eq!(left.unit_index, 0);
        assert!(left.validate().is_empty());
    }
}

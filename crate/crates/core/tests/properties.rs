use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stinespring::catalog;
use stinespring::numeric::{
    apply_kron_power, hermitian_eigen, isometry_residual, min_eigenvalue, op_norm, partial_trace_left,
    partial_trace_right,
};
use stinespring::{Matrix, MultiIndex, Subproduct, ToleranceConfig};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), a in 1usize..4, b in 1usize..4) {
        let mut r = rng(seed);
        let (x, y) = (Matrix::random_gaussian(a, a, &mut r), Matrix::random_gaussian(b, b, &mut r));
        let (u, v) = (Matrix::random_gaussian(a, a, &mut r), Matrix::random_gaussian(b, b, &mut r));
        let lhs = x.kron(&y).matmul(&u.kron(&v));
        let rhs = x.matmul(&u).kron(&y.matmul(&v));
        prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
    }

    #[test]
    fn partial_traces_of_products(seed in any::<u64>(), a in 1usize..4, b in 1usize..4) {
        let mut r = rng(seed);
        let x = Matrix::random_gaussian(a, a, &mut r);
        let y = Matrix::random_gaussian(b, b, &mut r);
        let xy = x.kron(&y);
        let right = partial_trace_right(&xy, a, b).unwrap();
        let left = partial_trace_left(&xy, a, b).unwrap();
        prop_assert!((&right - &x.scale_cx(y.trace())).max_abs() < 1e-12);
        prop_assert!((&left - &y.scale_cx(x.trace())).max_abs() < 1e-12);
    }

    #[test]
    fn kron_power_matches_explicit(seed in any::<u64>(), n in 1usize..4, m in 0usize..4) {
        let mut r = rng(seed);
        let q = Matrix::random_gaussian(n, n, &mut r);
        let x = Matrix::random_gaussian(n.pow(m as u32), 2, &mut r);
        let mut big = Matrix::identity(1);
        for _ in 0..m {
            big = big.kron(&q);
        }
        prop_assert!((&apply_kron_power(&q, m, &x) - &big.matmul(&x)).max_abs() < 1e-11);
    }

    #[test]
    fn eigen_decomposition_reconstructs(seed in any::<u64>(), n in 1usize..8) {
        let a = Matrix::random_hermitian(n, &mut rng(seed));
        let (vals, v) = hermitian_eigen(&a).unwrap();
        prop_assert!(isometry_residual(&v) < 1e-11);
        let rec = v.matmul(&Matrix::from_real_diagonal(&vals)).matmul(&v.adjoint());
        prop_assert!((&rec - &a).max_abs() < 1e-11);
    }

    #[test]
    fn word_index_round_trip(n in 1usize..5, m in 0usize..5, raw in any::<usize>()) {
        let total = n.pow(m as u32);
        let idx = raw % total;
        let w = MultiIndex::from_index(idx, n, m);
        prop_assert_eq!(w.len(), m);
        prop_assert_eq!(w.index(n), idx);
    }

    #[test]
    fn word_concatenation_is_big_endian(n in 1usize..4, a in 0usize..4, b in 0usize..4, x in any::<usize>(), y in any::<usize>()) {
        let u = MultiIndex::from_index(x % n.pow(a as u32), n, a);
        let v = MultiIndex::from_index(y % n.pow(b as u32), n, b);
        prop_assert_eq!(u.concat(&v).index(n), u.index(n) * n.pow(b as u32) + v.index(n));
    }

    #[test]
    fn random_channels_are_completely_positive(seed in any::<u64>(), n in 1usize..4, d in 1usize..5) {
        let k = catalog::random_unital::<f64>(n, d, seed, ToleranceConfig::default()).unwrap();
        prop_assert!(k.unitality_residual() < 1e-12);
        prop_assert!(min_eigenvalue(&k.choi_matrix()).unwrap() > -1e-12);
        let rho = Matrix::random_density(d, &mut rng(seed ^ 1));
        let out = k.apply_schrodinger(&rho).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heisenberg_schrodinger_duality(seed in any::<u64>(), n in 1usize..4, d in 1usize..5) {
        let k = catalog::random_unital::<f64>(n, d, seed, ToleranceConfig::default()).unwrap();
        let mut r = rng(seed ^ 2);
        let a = Matrix::random_gaussian(d, d, &mut r);
        let rho = Matrix::random_density(d, &mut r);
        let lhs = rho.trace_of_product(&k.apply_heisenberg(&a).unwrap());
        let rhs = k.apply_schrodinger(&rho).unwrap().trace_of_product(&a);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn subproduct_is_presentation_independent(seed in any::<u64>(), n in 2usize..4, d in 2usize..4) {
        let k = catalog::random_unital::<f64>(n, d, seed, ToleranceConfig::default()).unwrap();
        let u = catalog::random_unitary(n, &mut rng(seed ^ 3));
        let s = Subproduct::build(&k, 3).unwrap();
        let t = Subproduct::build(&k.mixed_by(&u).unwrap(), 3).unwrap();
        prop_assert_eq!(s.dims(), t.dims());
        for m in 1..=3 {
            let rotated = apply_kron_power(&u.conj(), m, t.basis(m).unwrap());
            let here = s.basis(m).unwrap();
            prop_assert!(op_norm(&(here - &rotated.matmul(&rotated.adjoint_mul(here)))) < 1e-9);
        }
    }

    #[test]
    fn levels_obey_subproduct_law(seed in any::<u64>(), d in 2usize..5, angle in 0.1f64..1.4) {
        let k = catalog::sequential_projective::<f64>(d, angle, seed, ToleranceConfig::default()).unwrap();
        let s = Subproduct::build(&k, 4).unwrap();
        for m in 0..=4 {
            prop_assert!(s.max_split_residual(m).unwrap() < 1e-8);
            prop_assert!(s.dim(m).unwrap() <= d * d);
        }
    }
}

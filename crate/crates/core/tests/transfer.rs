mod common;

use common::*;
use ergodic_transport::transfer::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn assembled_matrix_matches_direct_summation() {
    let mut r = rng(21);
    for _ in 0..50 {
        let (nx, d, m) = random_shape(&mut r, 3);
        let c = random_cost(&mut r, nx, d, m, 2.0);
        let t = assemble_transfer(&c);
        let naive = naive_transfer(&c);
        let diff = (t.matrix() - &naive).amax();
        assert!(diff <= 1e-14 * naive.amax(), "{diff}");
        let summed = (0..nx).fold(DMatrix::zeros(t.states(), t.states()), |acc, x| {
            acc + t.per_x(x)
        });
        assert!((summed - t.matrix()).amax() <= 1e-14 * naive.amax());
    }
}

#[test]
fn eigen_data_matches_dense_oracle() {
    let mut r = rng(22);
    for _ in 0..50 {
        let (nx, d, m) = random_shape(&mut r, 3);
        let c = random_cost(&mut r, nx, d, m, 2.0);
        let naive = naive_transfer(&c);
        let lambda = dense_lambda(&naive);
        let sol = rpf_solve(&assemble_transfer(&c), DEFAULT_EIGEN_TOL).unwrap();
        assert!(
            (sol.lambda() - lambda).abs() <= 1e-10 * lambda,
            "{} vs {lambda}",
            sol.lambda()
        );
        let h = dense_eigenfunction(&naive, lambda);
        for (a, b) in sol.h().iter().zip(&h) {
            assert!((a - b).abs() <= 1e-8 * b, "{a} vs {b}");
        }
        assert!(sol.residual <= sol.tolerance.max(1e-12));
    }
}

#[test]
fn normalized_cost_has_zero_pressure() {
    let mut r = rng(23);
    for _ in 0..50 {
        let (nx, d, m) = random_shape(&mut r, 3);
        let c = random_cost(&mut r, nx, d, m, 3.0);
        let (sol, nc) = solve_and_normalize(&c, DEFAULT_EIGEN_TOL).unwrap();
        assert!(normalization_residual(nc.cost()) <= 1e-12);
        assert!(pressure(nc.cost()).unwrap().abs() <= 1e-10);
        assert!(
            (sol.log_lambda - naive_pressure(&c)).abs() <= 1e-10 * (1.0 + sol.log_lambda.abs())
        );
    }
}

#[test]
fn stationary_vector_matches_iteration() {
    let mut r = rng(24);
    for _ in 0..50 {
        let (nx, d, m) = random_shape(&mut r, 3);
        let c = random_cost(&mut r, nx, d, m, 1.0);
        let (_, nc) = solve_and_normalize(&c, DEFAULT_EIGEN_TOL).unwrap();
        let nu = gibbs_measure(&nc).unwrap();
        assert!(nu.stationarity_residual() <= 1e-12);
        let oracle = power_stationary(&nu.q_matrix());
        for (a, b) in nu.stationary().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn uniform_cost_gives_uniform_measure() {
    for (nx, d, m) in [(1, 2, 2), (2, 3, 3), (3, 2, 4)] {
        let nu = gibbs_measure(&NormalizedCost::uniform(nx, d, m).unwrap()).unwrap();
        let n = nu.states() as f64;
        assert!(nu.stationary().iter().all(|p| (p - 1.0 / n).abs() <= 1e-15));
    }
}

#[test]
fn example_one_stationary_vector() {
    let (_, nc) = solve_and_normalize(&example_one(), DEFAULT_EIGEN_TOL).unwrap();
    let p = gibbs_measure(&nc).unwrap().stationary().to_vec();
    approx::assert_abs_diff_eq!(p[0], 0.3786, epsilon = 2e-4);
    approx::assert_abs_diff_eq!(p[1], 0.6213, epsilon = 2e-4);
}

#[test]
fn large_beta_is_handled_in_log_scale() {
    let c = example_one().scaled(1e4);
    let p = pressure(&c).unwrap();
    let ln2 = 2f64.ln();
    assert!(p.is_finite());
    assert!(p >= 1e4 * ln2 - 1e-9 && p <= 1e4 * ln2 + 4f64.ln() + 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pressure_shifts_with_constants(seed in any::<u64>(), k in -5.0f64..5.0) {
        let mut r = rng(seed);
        let (nx, d, m) = random_shape(&mut r, 3);
        let c = random_cost(&mut r, nx, d, m, 2.0);
        let diff = pressure(&c.shifted(k)).unwrap() - pressure(&c).unwrap();
        prop_assert!((diff - k).abs() <= 1e-9);
    }

    #[test]
    fn pressure_is_one_lipschitz(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (nx, d, m) = random_shape(&mut r, 3);
        let a = random_cost(&mut r, nx, d, m, 2.0);
        let b = a.map(|v| v + r.gen_range(-0.5..0.5));
        let lhs = (pressure(&a).unwrap() - pressure(&b).unwrap()).abs();
        prop_assert!(lhs <= a.sup_distance(&b) + 1e-9);
    }
}

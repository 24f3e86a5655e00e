//! Projected SOR on random M-matrix complementarity problems.

use dic_core::hjbqvi::{lcp_residuals, psor_solve, CsrMatrix, PsorOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dic_validation::{brute_force_lcp, max_abs_diff, random_lcp, random_m_matrix, random_symmetric_lcp};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn psor_matches_exhaustive_search(seed in any::<u64>(), n in 1usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lcp = random_lcp(&mut rng, n);
        let exact = brute_force_lcp(&lcp, 1e-12).expect("M-matrix LCPs have a solution");
        let rep = psor_solve(&lcp.to_problem(), &lcp.u, &PsorOptions::default()).unwrap();
        prop_assert!(max_abs_diff(&rep.solution, &exact) <= 1e-8);
    }

    #[test]
    fn solution_satisfies_complementarity(seed in any::<u64>(), n in 1usize..=40, omega in 0.3f64..1.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lcp = random_symmetric_lcp(&mut rng, n);
        let opts = PsorOptions { omega, tol: 1e-13, ..PsorOptions::default() };
        let problem = lcp.to_problem();
        let rep = psor_solve(&problem, &vec![0.0; n], &opts).unwrap();
        let res = lcp_residuals(&problem, &rep.solution);
        prop_assert!(res.min_obstacle >= 0.0);
        prop_assert!(res.min_pde >= -1e-10, "{res:?}");
        prop_assert!(res.max_complementarity <= 1e-10, "{res:?}");
    }

    #[test]
    fn relaxation_does_not_change_the_answer(seed in any::<u64>(), omega in 0.3f64..1.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lcp = random_symmetric_lcp(&mut rng, 12);
        let problem = lcp.to_problem();
        let tight = |omega| PsorOptions { omega, tol: 1e-13, ..PsorOptions::default() };
        let a = psor_solve(&problem, &lcp.u, &tight(1.0)).unwrap();
        let b = psor_solve(&problem, &lcp.u, &tight(omega)).unwrap();
        prop_assert!(max_abs_diff(&a.solution, &b.solution) <= 1e-9);
    }

    #[test]
    fn sparse_product_matches_dense(seed in any::<u64>(), n in 1usize..=15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_m_matrix(&mut rng, n, 0.3);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let csr = CsrMatrix::from_dense(&a);
        let dense: Vec<f64> = a.iter().map(|row| row.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
        prop_assert!(max_abs_diff(&csr.mul_vec(&x), &dense) <= 1e-12);
        prop_assert!(csr.positive_off_diagonal(0.0).is_none());
    }
}

#[test]
fn unconstrained_problem_is_a_linear_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut lcp = random_lcp(&mut rng, 8);
    lcp.u = vec![f64::NEG_INFINITY; 8];
    let rep = psor_solve(&lcp.to_problem(), &[0.0; 8], &PsorOptions::default()).unwrap();
    let residual = lcp
        .a
        .iter()
        .zip(&lcp.b)
        .map(|(row, b)| (row.iter().zip(&rep.solution).map(|(p, q)| p * q).sum::<f64>() - b).abs())
        .fold(0.0, f64::max);
    assert!(residual < 1e-9, "{residual}");
}

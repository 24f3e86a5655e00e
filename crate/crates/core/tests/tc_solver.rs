//! End-to-end properties of the transaction-cost solver on coarse grids.

use std::sync::OnceLock;

use dic_core::hjbqvi::{
    discretize_generator, lcp_residuals, main_loop, solve_tc, sweep_tc_loading, Grid, SolverConfig, TcSolution,
};
use dic_core::{Error, ModelParams};

fn coarse(grid_n: usize) -> SolverConfig {
    SolverConfig {
        grid_n,
        ..SolverConfig::default()
    }
}

fn base_solution() -> &'static TcSolution {
    static SOL: OnceLock<TcSolution> = OnceLock::new();
    SOL.get_or_init(|| solve_tc(&ModelParams::transaction_cost_base(), &coarse(401)).unwrap())
}

#[test]
fn value_vanishes_at_the_solvency_boundary_and_increases() {
    let sol = base_solution();
    assert_eq!(sol.value[0], 0.0);
    assert!(sol.value.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn value_stays_between_bounds() {
    let sol = base_solution();
    for (&z, &v) in sol.grid.nodes.iter().zip(&sol.value) {
        let (lo, hi) = sol.bounds.at(z);
        let slack = 1e-6 * (1.0 + v.abs());
        assert!(lo - slack <= v && v <= hi + slack, "z = {z}: {lo} <= {v} <= {hi}");
    }
}

#[test]
fn outer_iteration_is_monotone() {
    let sol = base_solution();
    assert!(sol.trace.iter().all(|t| t.min_increment >= -1e-10));
    assert!(sol.trace.last().unwrap().delta_v_inf < sol.config.tol_outer);
    let ms: Vec<f64> = std::iter::once(sol.initial_m).chain(sol.trace.iter().map(|t| t.m)).collect();
    assert!(ms.windows(2).all(|w| w[1] >= w[0]), "{ms:?}");
}

#[test]
fn complementarity_holds_at_convergence() {
    let sol = base_solution();
    let n = sol.grid.len();
    let mv = &sol.intervention.values;
    let mut lcp = discretize_generator(&sol.policy, &sol.grid, &sol.params, mv[n - 1]).unwrap();
    lcp.u.clone_from(mv);
    let av = lcp.a.mul_vec(&sol.value);
    let worst = (1..n - 1)
        .map(|i| {
            let pde = (av[i] - lcp.b[i]) / lcp.a.diag(i);
            let gap = sol.value[i] - mv[i];
            pde.min(gap).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-7, "largest nodewise |min(pde, v - Mv)| = {worst:e}");
    // The last solve used the obstacle of the previous iterate; the
    // intervention operator is nonexpansive, so the lag is at most the last
    // outer increment.
    let res = lcp_residuals(&lcp, &sol.value);
    let lag = sol.trace.last().unwrap().delta_v_inf;
    assert!(res.min_obstacle >= -lag - 1e-12, "{res:?}, last increment {lag:e}");
}

#[test]
fn trading_zone_is_one_interval_around_the_target() {
    let sol = base_solution();
    let b = &sol.bands;
    assert!(b.z_low < b.z_star && b.z_star < b.z_high, "{b:?}");
    for (i, &z) in sol.grid.nodes.iter().enumerate().skip(1) {
        let inside = b.z_low <= z && z <= b.z_high;
        assert_eq!(!sol.policy.trade_flag[i], inside, "z = {z}");
    }
    // The frictionless holding lies inside the band.
    assert!(b.contains(sol.no_tc.target_z()));
}

#[test]
fn refinement_converges_at_first_order() {
    let params = ModelParams::transaction_cost_base();
    let sols: Vec<TcSolution> = [201, 401, 801]
        .into_iter()
        .map(|n| {
            if n == 401 {
                base_solution().clone()
            } else {
                solve_tc(&params, &coarse(n)).unwrap()
            }
        })
        .collect();
    // Compare on the nodes of the coarsest grid inside [1, 8].
    let diff = |a: &TcSolution, b: &TcSolution| {
        sols[0]
            .grid
            .nodes
            .iter()
            .filter(|&&z| (1.0..=8.0).contains(&z))
            .map(|&z| (a.value_at(z) - b.value_at(z)).abs())
            .fold(0.0, f64::max)
    };
    let coarse_gap = diff(&sols[0], &sols[1]);
    let fine_gap = diff(&sols[1], &sols[2]);
    let ratio = coarse_gap / fine_gap;
    assert!(fine_gap < coarse_gap, "{coarse_gap} then {fine_gap}");
    assert!((1.3..=4.5).contains(&ratio), "ratio {ratio}: {coarse_gap} then {fine_gap}");
}

#[test]
fn rejects_unsupported_inputs() {
    let params = ModelParams::transaction_cost_base();
    let log_utility = ModelParams { gamma: 1.0, ..params };
    assert!(matches!(solve_tc(&log_utility, &coarse(101)), Err(Error::InvalidParams(_))));
    let wrong_grid = Grid::uniform(0.0, 50.0, 101).unwrap();
    assert!(main_loop(&wrong_grid, &params, &coarse(101)).is_err());
    let err = sweep_tc_loading(&params, &[0.5], &coarse(101)).unwrap_err();
    assert!(matches!(err, Error::AtLoading { phi, .. } if phi == 0.5), "{err}");
}

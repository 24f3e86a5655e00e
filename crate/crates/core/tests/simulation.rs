//! Monte Carlo checks of the strategies against the solvers and of the
//! simulator's own bookkeeping.

use dic_core::hjbqvi::{lower_alpha, solve_tc, SolverConfig, TcSolution};
use dic_core::no_tc::{solve_no_tc, NoTcSolution};
use dic_core::sim::{
    band_strategy, default_horizon, mean_stderr, no_tc_strategy, simulate_outcomes, simulate_paths, Decision,
    PathState, SimConfig, Strategy,
};
use dic_core::{ModelParams, Result};

fn state(x: f64, p: f64, k: f64) -> PathState {
    PathState {
        t: 0.0,
        x,
        p,
        log_p: p.ln(),
        k,
        log_s: 0.0,
        n1: 0,
        n2: 0,
    }
}

fn tc_solution() -> TcSolution {
    let config = SolverConfig {
        grid_n: 401,
        ..SolverConfig::default()
    };
    solve_tc(&ModelParams::transaction_cost_base(), &config).unwrap()
}

fn base() -> (ModelParams, NoTcSolution) {
    let p = ModelParams::base();
    let sol = solve_no_tc(&p).unwrap();
    (p, sol)
}

/// Constant controls, no durable holding.
struct Constant {
    c: f64,
    q: f64,
}

impl Strategy for Constant {
    fn decide(&self, _: &PathState) -> Result<Decision> {
        Ok(Decision {
            k: 0.0,
            cost: 0.0,
            c: self.c,
            pi1: 0.0,
            q: self.q,
        })
    }
}

#[test]
fn band_rule_trades_only_outside_the_band() {
    let sol = tc_solution();
    let rule = band_strategy(&sol.bands, &sol.policy, &sol.grid).unwrap();
    let b = sol.bands;
    let (x, p) = (2.0, 1.3);

    // At the target: keep the stock.
    let k = x / (b.z_star * p);
    let d = rule.decide(&state(x, p, k)).unwrap();
    assert_eq!((d.cost, d.k), (0.0, k));

    // Above and below the band: pay θkp and restock to the target.
    for z in [b.z_high * 1.5, b.z_low * 0.5] {
        let k = x / (z * p);
        let d = rule.decide(&state(x, p, k)).unwrap();
        assert!((d.cost - sol.params.theta * k * p).abs() < 1e-15);
        let after = (x - d.cost) / (d.k * p);
        assert!((after - b.z_star).abs() < 1e-12 * b.z_star, "{after} vs {}", b.z_star);
    }
}

#[test]
fn band_rule_value_lies_between_the_bounds() {
    let sol = tc_solution();
    let params = sol.params;
    let rule = band_strategy(&sol.bands, &sol.policy, &sol.grid).unwrap();
    let (x0, p0) = (1.0, 1.0);
    let k0 = x0 / (sol.bands.z_star * p0);
    let config = SimConfig {
        horizon: default_horizon(&params, &sol.no_tc, 1e-3).unwrap(),
        dt: 0.01,
        n_paths: 2_000,
        seed: 17,
    };
    let res = simulate_paths(&params, &rule, (x0, p0, k0), &config, &sol.no_tc).unwrap();
    let omg = 1.0 - params.gamma;
    let price_power = params.beta * omg - omg;
    let upper = sol.no_tc.alpha_v / omg * x0.powf(omg) * p0.powf(price_power);
    let lower = lower_alpha(&params).unwrap() / omg * (x0 - params.theta * k0 * p0).powf(omg) * p0.powf(price_power);
    assert!(res.mean - 3.0 * res.stderr <= upper, "{res:?} above {upper}");
    assert!(res.mean + 3.0 * res.stderr + res.truncation_bound >= lower, "{res:?} below {lower}");
    assert_eq!(res.solvency_violations, 0);

    // The solver's value at the same state.
    let solved = k0.powf(omg) * p0.powf(params.beta * omg) * sol.value_at(x0 / (k0 * p0));
    assert!(
        (res.mean - solved).abs() <= 3.0 * res.stderr + res.truncation_bound + 0.01 * solved,
        "simulated {} vs solved {solved}",
        res.mean
    );
}

#[test]
fn frictionless_wealth_stays_positive() {
    let (p, sol) = base();
    let config = SimConfig {
        horizon: default_horizon(&p, &sol, 1e-3).unwrap(),
        dt: 1.0 / 250.0,
        n_paths: 10_000,
        seed: 5,
    };
    let outs = simulate_outcomes(&p, &no_tc_strategy(&sol), (1.0, 1.0, sol.alpha_k), &config).unwrap();
    assert!(outs.iter().all(|o| !o.insolvent && o.terminal.x > 0.0));
}

#[test]
fn scaling_wealth_and_price_scales_every_path() {
    let (p, sol) = base();
    let config = SimConfig {
        horizon: 20.0,
        dt: 0.01,
        n_paths: 200,
        seed: 8,
    };
    let rule = no_tc_strategy(&sol);
    let one = simulate_outcomes(&p, &rule, (1.0, 1.0, sol.alpha_k), &config).unwrap();
    for kappa in [0.5, 2.0] {
        let scaled = simulate_outcomes(&p, &rule, (kappa, kappa, sol.alpha_k), &config).unwrap();
        let factor = kappa.powf(p.beta * (1.0 - p.gamma));
        for (a, b) in one.iter().zip(&scaled) {
            assert!((b.utility - factor * a.utility).abs() <= 1e-9 * a.utility.abs());
            assert!((b.terminal.x - kappa * a.terminal.x).abs() <= 1e-9 * a.terminal.x.abs());
        }
    }
}

#[test]
fn fair_insurance_leaves_expected_wealth_unchanged() {
    let params = ModelParams {
        r: 0.0,
        lambda_2: 0.5,
        ..ModelParams::base()
    };
    let config = SimConfig {
        horizon: 10.0,
        dt: 0.01,
        n_paths: 4_000,
        seed: 21,
    };
    // Enough wealth that premiums never exhaust it before the payouts arrive.
    let init = (10.0, 1.0, 0.0);
    let terminal_gap = |phi: f64| {
        let p = params.with_phi(phi);
        let with = simulate_outcomes(&p, &Constant { c: 0.0, q: 0.2 }, init, &config).unwrap();
        let without = simulate_outcomes(&p, &Constant { c: 0.0, q: 0.0 }, init, &config).unwrap();
        assert!(with.iter().chain(&without).all(|o| !o.insolvent));
        let gaps: Vec<f64> = with.iter().zip(&without).map(|(a, b)| a.terminal.x - b.terminal.x).collect();
        mean_stderr(gaps.into_iter())
    };
    let (fair, fair_se) = terminal_gap(1.0);
    assert!(fair.abs() <= 3.0 * fair_se, "{fair} +- {fair_se}");
    // Loaded premium drains (φ - 1) λ₂ q per unit time.
    let (loaded, loaded_se) = terminal_gap(1.5);
    let drain = -0.5 * 0.5 * 0.2 * 10.0;
    assert!((loaded - drain).abs() <= 3.0 * loaded_se, "{loaded} vs {drain}");
}

#[test]
fn halving_the_step_changes_little() {
    let (p, sol) = base();
    let rule = no_tc_strategy(&sol);
    let run = |dt: f64, seed: u64| {
        let config = SimConfig {
            horizon: 20.0,
            dt,
            n_paths: 20_000,
            seed,
        };
        simulate_paths(&p, &rule, (1.0, 1.0, sol.alpha_k), &config, &sol).unwrap()
    };
    let coarse = run(1.0 / 50.0, 31);
    let fine = run(1.0 / 100.0, 32);
    let joint = (coarse.stderr.powi(2) + fine.stderr.powi(2)).sqrt();
    assert!((coarse.mean - fine.mean).abs() <= 3.0 * joint, "{coarse:?} vs {fine:?}");
}

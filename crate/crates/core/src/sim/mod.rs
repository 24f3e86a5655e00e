//! Monte Carlo simulation of the market and wealth dynamics under a given
//! strategy, used to cross-check the solvers' value functions.
//!
//! Per step of length `dt`: the strategy picks controls from the state at
//! the start of the step; Poisson events falling in the step are applied at
//! its start; `P` moves by its exact log-normal increment and `K` by exact
//! exponential decay; `X` takes an Euler step of the wealth equation.
//! Utility is accumulated with the left-point rule.
//!
//! Each path draws from its own ChaCha stream (`seed`, path index), and
//! per-path results are reduced in path order, so results do not depend on
//! scheduling.

mod strategy;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

pub use strategy::{band_strategy, no_tc_strategy, BandStrategy, Decision, NoTcStrategy, Strategy};

use crate::error::{Error, Result};
use crate::no_tc::{value_function_no_tc, NoTcSolution};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Simulation(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(Error::Simulation(format!(
                "time step must lie in (0, horizon], got {}",
                self.dt
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Simulation("need at least one path".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil() as usize
    }
}

/// State of one path at the start of a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathState {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub log_p: f64,
    pub k: f64,
    /// `ln S`; the risky price only matters through its log-return.
    pub log_s: f64,
    pub n1: u32,
    pub n2: u32,
}

impl PathState {
    pub fn s(&self) -> f64 {
        self.log_s.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathOutcome {
    /// Discounted utility accumulated up to the horizon or insolvency.
    pub utility: f64,
    pub terminal: PathState,
    pub insolvent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub mean: f64,
    pub stderr: f64,
    /// Bound on the discarded utility beyond the horizon.
    pub truncation_bound: f64,
    pub solvency_violations: usize,
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
}

/// Horizon at which `e^{-ρT}` times the frictionless value of the expected
/// terminal state under the frictionless rule falls to `tail` (e.g. `1e-3`)
/// of the initial value.
pub fn default_horizon(params: &ModelParams, sol: &NoTcSolution, tail: f64) -> Result<f64> {
    let p = params;
    let growth = p.r + sol.alpha_pi1 * (p.mu_s + p.lambda_1 * p.eta - p.r) + sol.alpha_k * (p.mu_p - p.r - p.delta)
        - p.phi * p.lambda_2 * sol.alpha_q
        - sol.alpha_c
        - p.lambda_1 * p.eta * sol.alpha_pi1
        - p.lambda_2 * (p.ell * sol.alpha_k - sol.alpha_q);
    let omg = 1.0 - p.gamma;
    let rate = p.rho - omg * growth + (1.0 - p.beta) * omg * p.mu_p;
    if !(rate > 0.0) {
        return Err(Error::Simulation(format!(
            "discounted value does not decay (rate {rate:e}); no finite horizon"
        )));
    }
    Ok(-tail.ln() / rate)
}

struct Arrivals {
    next: f64,
    dist: Option<Exp<f64>>,
}

impl Arrivals {
    fn new(rate: f64, rng: &mut ChaCha8Rng) -> Self {
        let dist = (rate > 0.0).then(|| Exp::new(rate).expect("positive rate"));
        let next = dist.map_or(f64::INFINITY, |d| rng.sample(d));
        Self { next, dist }
    }

    /// Events with arrival time before `until`.
    fn count(&mut self, until: f64, rng: &mut ChaCha8Rng) -> u32 {
        let mut n = 0;
        if let Some(d) = self.dist {
            while self.next < until {
                n += 1;
                self.next += rng.sample(d);
            }
        }
        n
    }
}

fn check_decision(d: &Decision, t: f64) -> Result<()> {
    if d.c < 0.0 || d.k < 0.0 || d.q < 0.0 || !(d.c.is_finite() && d.k.is_finite() && d.q.is_finite() && d.pi1.is_finite()) {
        return Err(Error::Simulation(format!(
            "invalid controls at t = {t}: c = {}, k = {}, q = {}, pi1 = {}",
            d.c, d.k, d.q, d.pi1
        )));
    }
    Ok(())
}

/// Simulates one path. Exposed for tests and debugging.
pub fn simulate_path<S: Strategy + ?Sized>(
    params: &ModelParams,
    strategy: &S,
    init: (f64, f64, f64),
    config: &SimConfig,
    path: u64,
) -> Result<PathOutcome> {
    let p = params;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(path);
    let mut crashes = Arrivals::new(p.lambda_1, &mut rng);
    let mut losses = Arrivals::new(p.lambda_2, &mut rng);

    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let steps = config.steps();
    let sigma_p_sq = p.sigma_p1 * p.sigma_p1 + p.sigma_p2 * p.sigma_p2;
    let log_p_drift = (p.mu_p - 0.5 * sigma_p_sq) * dt;
    let log_s_drift = (p.mu_s + p.lambda_1 * p.eta - 0.5 * p.sigma_s * p.sigma_s) * dt;
    let decay = (-p.delta * dt).exp();
    let step_discount = (-p.rho * dt).exp();
    let risky_excess = p.mu_s + p.lambda_1 * p.eta - p.r;
    let durable_excess = p.mu_p - p.r - p.delta;
    let omg = 1.0 - p.gamma;
    let log_s_crash = (1.0 - p.eta).ln();

    let (x0, p0, k0) = init;
    let mut state = PathState {
        t: 0.0,
        x: x0,
        p: p0,
        log_p: p0.ln(),
        k: k0,
        log_s: 0.0,
        n1: 0,
        n2: 0,
    };
    let mut log_p = state.log_p;
    let mut log_s = 0.0;
    let mut discount = 1.0;
    let mut total = 0.0;
    let mut insolvent = false;

    for step in 0..steps {
        let d = strategy.decide(&state)?;
        check_decision(&d, state.t)?;
        let x = state.x - d.cost;

        if d.c > 0.0 && d.k > 0.0 {
            let bundle = strategy.log_bundle(&state, &d, p.beta);
            total += discount * (omg * bundle).exp() / omg * dt;
        } else if p.gamma > 1.0 {
            return Err(Error::UtilityDomain {
                c: d.c,
                k: d.k,
                gamma: p.gamma,
            });
        }

        let t_next = (step + 1) as f64 * dt;
        let n1 = crashes.count(t_next, &mut rng);
        let n2 = losses.count(t_next, &mut rng);
        let dw1: f64 = rng.sample::<f64, _>(StandardNormal) * sqrt_dt;
        let dw2: f64 = rng.sample::<f64, _>(StandardNormal) * sqrt_dt;

        let kp = d.k * state.p;
        let drift = p.r * x + d.pi1 * risky_excess + kp * durable_excess - p.phi * p.lambda_2 * d.q - d.c;
        let mut x_next = x + drift * dt + (d.pi1 * p.sigma_s + kp * p.sigma_p1) * dw1 + kp * p.sigma_p2 * dw2;
        let mut k_next = d.k * decay;
        for _ in 0..n1 {
            x_next -= p.eta * d.pi1;
            log_s += log_s_crash;
        }
        for _ in 0..n2 {
            x_next -= p.ell * kp - d.q;
            k_next *= 1.0 - p.ell;
        }

        log_p += log_p_drift + p.sigma_p1 * dw1 + p.sigma_p2 * dw2;
        log_s += log_s_drift + p.sigma_s * dw1;
        discount *= step_discount;
        state = PathState {
            t: t_next,
            x: x_next,
            p: log_p.exp(),
            log_p,
            k: k_next,
            log_s,
            n1: state.n1 + n1,
            n2: state.n2 + n2,
        };
        if !(x_next > strategy.solvency_floor(k_next, state.p)) {
            insolvent = true;
            break;
        }
    }
    Ok(PathOutcome {
        utility: total,
        terminal: state,
        insolvent,
    })
}

/// Simulates all paths, in parallel, and returns them in path order.
pub fn simulate_outcomes<S: Strategy + ?Sized>(
    params: &ModelParams,
    strategy: &S,
    init: (f64, f64, f64),
    config: &SimConfig,
) -> Result<Vec<PathOutcome>> {
    params.validate()?;
    config.validate()?;
    let (x0, p0, k0) = init;
    if !(p0 > 0.0 && k0 >= 0.0 && x0 > 0.0 && x0 > strategy.solvency_floor(k0, p0)) {
        return Err(Error::Simulation(format!(
            "initial state x = {x0}, p = {p0}, k = {k0} is outside the solvency region"
        )));
    }
    (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(params, strategy, init, config, i))
        .collect()
}

/// Mean and standard error, summed in order.
pub fn mean_stderr(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|u| (u - mean) * (u - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Summarizes outcomes. The truncation bound is `e^{-ρT}` times the sample
/// mean of the frictionless value of the terminal state, which bounds the
/// discarded tail for `γ < 1` because no strategy beats the frictionless
/// optimum.
pub fn summarize(
    outcomes: &[PathOutcome],
    params: &ModelParams,
    bound: &NoTcSolution,
    config: &SimConfig,
) -> Result<SimResult> {
    let (mean, stderr) = mean_stderr(outcomes.iter().map(|o| o.utility));
    let mut tail = 0.0;
    for o in outcomes.iter().filter(|o| !o.insolvent) {
        tail += value_function_no_tc(o.terminal.x, o.terminal.p, bound, params)?.abs();
    }
    let horizon = config.steps() as f64 * config.dt;
    Ok(SimResult {
        mean,
        stderr,
        truncation_bound: (-params.rho * horizon).exp() * tail / outcomes.len() as f64,
        solvency_violations: outcomes.iter().filter(|o| o.insolvent).count(),
        n_paths: outcomes.len(),
        dt: config.dt,
        horizon: config.horizon,
    })
}

/// Expected discounted utility of `strategy` from `(x0, p0, k0)`.
pub fn simulate_paths<S: Strategy + ?Sized>(
    params: &ModelParams,
    strategy: &S,
    init: (f64, f64, f64),
    config: &SimConfig,
    bound: &NoTcSolution,
) -> Result<SimResult> {
    let outcomes = simulate_outcomes(params, strategy, init, config)?;
    summarize(&outcomes, params, bound, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::no_tc::solve_no_tc;
    use crate::utility::utility;

    /// Constant controls with a fixed durable stock.
    struct Fixed {
        c: f64,
        k: f64,
    }

    impl Strategy for Fixed {
        fn decide(&self, _: &PathState) -> Result<Decision> {
            Ok(Decision {
                k: self.k,
                cost: 0.0,
                c: self.c,
                pi1: 0.0,
                q: 0.0,
            })
        }
    }

    fn quiet() -> ModelParams {
        ModelParams {
            sigma_s: 0.25,
            sigma_p1: 0.0,
            sigma_p2: 0.0,
            lambda_1: 0.0,
            lambda_2: 0.0,
            ..ModelParams::base()
        }
    }

    #[test]
    fn deterministic_integral() {
        let p = quiet();
        let (c, k0) = (0.03, 0.5);
        let cfg = SimConfig {
            horizon: 10.0,
            dt: 1e-3,
            n_paths: 3,
            seed: 1,
        };
        // The rule restocks to k0 every step, so the integrand is u(c, k0) e^{-ρt}.
        let out = simulate_paths(&p, &Fixed { c, k: k0 }, (10.0, 1.0, k0), &cfg, &solve_no_tc(&p).unwrap()).unwrap();
        let u = utility(c, k0, p.beta, p.gamma).unwrap();
        let exact = u * (1.0 - (-p.rho * 10.0f64).exp()) / p.rho;
        // Left-point rule error is about ρ dt / 2 relative.
        assert!((out.mean - exact).abs() < 1e-3 * exact, "{} vs {exact}", out.mean);
        assert_eq!(out.stderr, 0.0);
        assert_eq!(out.solvency_violations, 0);
    }

    #[test]
    fn deterministic_wealth_path() {
        let p = quiet();
        let cfg = SimConfig {
            horizon: 5.0,
            dt: 1e-4,
            n_paths: 1,
            seed: 9,
        };
        let (c, k) = (0.02, 0.0);
        let out = simulate_path(&p, &Fixed { c, k }, (1.0, 1.0, 0.0), &cfg, 0).unwrap();
        // dX = (rX - c) dt.
        let exact = c / p.r + (1.0 - c / p.r) * (p.r * 5.0f64).exp();
        assert!((out.terminal.x - exact).abs() < 1e-5, "{} vs {exact}", out.terminal.x);
        assert_eq!(out.utility, 0.0);
    }

    #[test]
    fn jump_counts_match_intensities() {
        let p = ModelParams {
            lambda_1: 0.5,
            lambda_2: 0.2,
            ..ModelParams::base()
        };
        let sol = solve_no_tc(&p).unwrap();
        let cfg = SimConfig {
            horizon: 10.0,
            dt: 0.01,
            n_paths: 4000,
            seed: 3,
        };
        let outs = simulate_outcomes(&p, &no_tc_strategy(&sol), (1.0, 1.0, sol.alpha_k), &cfg).unwrap();
        for (rate, counts) in [
            (p.lambda_1, outs.iter().map(|o| o.terminal.n1 as f64).collect::<Vec<_>>()),
            (p.lambda_2, outs.iter().map(|o| o.terminal.n2 as f64).collect::<Vec<_>>()),
        ] {
            let (mean, se) = mean_stderr(counts.iter().copied());
            assert!((mean - rate * 10.0).abs() < 3.0 * se, "{mean} vs {}", rate * 10.0);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let p = ModelParams::base();
        let sol = solve_no_tc(&p).unwrap();
        let cfg = SimConfig {
            horizon: 2.0,
            dt: 0.01,
            n_paths: 50,
            seed: 11,
        };
        let s = no_tc_strategy(&sol);
        let a = simulate_paths(&p, &s, (1.0, 1.0, sol.alpha_k), &cfg, &sol).unwrap();
        let b = simulate_paths(&p, &s, (1.0, 1.0, sol.alpha_k), &cfg, &sol).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(&p, &s, (1.0, 1.0, sol.alpha_k), &SimConfig { seed: 12, ..cfg }, &sol).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ModelParams::base();
        let sol = solve_no_tc(&p).unwrap();
        let s = no_tc_strategy(&sol);
        let cfg = SimConfig {
            horizon: 1.0,
            dt: 0.1,
            n_paths: 1,
            seed: 0,
        };
        assert!(simulate_paths(&p, &s, (0.0, 1.0, 0.0), &cfg, &sol).is_err());
        assert!(simulate_paths(&p, &s, (1.0, 1.0, 0.0), &SimConfig { dt: 2.0, ..cfg }, &sol).is_err());
        assert!(simulate_paths(&p, &s, (1.0, 1.0, 0.0), &SimConfig { n_paths: 0, ..cfg }, &sol).is_err());
        let neg = Fixed { c: -1.0, k: 1.0 };
        assert!(simulate_paths(&p, &neg, (1.0, 1.0, 0.0), &cfg, &sol).is_err());
    }

    #[test]
    fn horizon_for_base_scenario() {
        let p = ModelParams::base();
        let sol = solve_no_tc(&p).unwrap();
        let t = default_horizon(&p, &sol, 1e-3).unwrap();
        assert!(t > 150.0 && t < 200.0, "{t}");
    }

    #[test]
    fn no_tc_controls_vanish_at_zero_wealth() {
        let sol = solve_no_tc(&ModelParams::base()).unwrap();
        let d = no_tc_strategy(&sol)
            .decide(&PathState {
                t: 0.0,
                x: 0.0,
                p: 1.0,
                log_p: 0.0,
                k: 0.0,
                log_s: 0.0,
                n1: 0,
                n2: 0,
            })
            .unwrap();
        assert_eq!((d.c, d.pi1, d.k, d.q), (0.0, 0.0, 0.0, 0.0));
    }
}

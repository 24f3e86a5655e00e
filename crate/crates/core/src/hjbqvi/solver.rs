use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::bands::{excess, extract_bands, TradingBands};
use super::bounds::ValueBounds;
use super::controls::{optimize_policy, ControlOptions};
use super::generator::{discretize_generator, Generator, PolicyField};
use super::grid::Grid;
use super::intervention::{intervention, Intervention};
use super::lcp::{psor_solve, solve_tridiagonal_splitting, PsorOptions};
use crate::error::{Error, Result};
use crate::no_tc::{solve_no_tc, NoTcSolution};
use crate::params::ModelParams;

/// Numerical settings of the transaction-cost solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub grid_n: usize,
    /// Right end of the grid; `None` picks `z_max_factor / α_k`.
    pub z_max: Option<f64>,
    pub z_max_factor: f64,
    /// Outer (stopping-time) iteration tolerance on `‖Δv‖∞`.
    pub tol_outer: f64,
    /// Policy-iteration tolerance inside each outer step.
    pub tol_inner: f64,
    /// PSOR sweep tolerance.
    pub tol_psor: f64,
    pub omega: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub max_psor_sweeps: usize,
    pub controls: ControlOptions,
    /// Excess value above which a node counts as no-trading.
    pub zone_tol: f64,
    /// Allowed relative violation of the value bounds, `tol * (1 + |v|)`.
    pub bound_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_n: 2001,
            z_max: None,
            z_max_factor: 40.0,
            tol_outer: 1e-8,
            tol_inner: 1e-8,
            tol_psor: 1e-10,
            omega: 1.2,
            max_outer: 200,
            max_inner: 200,
            max_psor_sweeps: 100_000,
            controls: ControlOptions::default(),
            zone_tol: 1e-6,
            bound_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    fn psor(&self) -> PsorOptions {
        PsorOptions {
            omega: self.omega,
            tol: self.tol_psor,
            max_sweeps: self.max_psor_sweeps,
        }
    }

    /// The grid end point used for these parameters.
    pub fn resolve_z_max(&self, ntc: &NoTcSolution) -> f64 {
        self.z_max.unwrap_or(self.z_max_factor * ntc.target_z())
    }
}

/// One outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iter: usize,
    /// `‖v_{n+1} - v_n‖∞`
    pub delta_v_inf: f64,
    /// Intervention constant of `v_{n+1}`.
    pub m: f64,
    /// `min (v_{n+1} - v_n)`; negative values mean the iteration lost value.
    pub min_increment: f64,
    /// Largest bound violation relative to `1 + |v|` (0 when inside).
    pub bound_violation: f64,
    pub inner_iterations: usize,
    pub psor_sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerOutcome {
    pub value: Vec<f64>,
    pub policy: PolicyField,
    pub iterations: usize,
    pub psor_sweeps: usize,
}

/// Converged transaction-cost solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcSolution {
    pub params: ModelParams,
    pub config: SolverConfig,
    pub grid: Grid,
    pub value: Vec<f64>,
    pub intervention: Intervention,
    pub policy: PolicyField,
    pub bands: TradingBands,
    /// Intervention constant of the never-trade value `v_0`.
    pub initial_m: f64,
    pub trace: Vec<TraceEntry>,
    pub bounds: ValueBounds,
    pub no_tc: NoTcSolution,
}

impl TcSolution {
    pub fn outer_iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn excess(&self) -> Vec<f64> {
        excess(&self.value, &self.intervention.values)
    }

    pub fn value_at(&self, z: f64) -> f64 {
        self.grid.interpolate(&self.value, z)
    }
}

fn sup_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest relative bound violation and the node where it occurs. The
/// never-trade value is only bounded above, so `with_lower` is off for it.
fn bound_violation(grid: &Grid, v: &[f64], bounds: &ValueBounds, with_lower: bool) -> (f64, usize) {
    let mut worst = (0.0, 0);
    for (i, (&z, &value)) in grid.nodes.iter().zip(v).enumerate() {
        let (lo, hi) = bounds.at(z);
        let below = if with_lower { lo - value } else { 0.0 };
        let gap = below.max(value - hi).max(0.0) / (1.0 + value.abs());
        if gap > worst.0 {
            worst = (gap, i);
        }
    }
    worst
}

fn check_bounds(grid: &Grid, v: &[f64], bounds: &ValueBounds, tol: f64, iteration: usize) -> Result<f64> {
    let (gap, i) = bound_violation(grid, v, bounds, iteration > 0);
    if gap > tol {
        let (lower, upper) = bounds.at(grid.nodes[i]);
        return Err(Error::BoundViolation {
            iteration,
            z: grid.nodes[i],
            value: v[i],
            lower,
            upper,
        });
    }
    Ok(gap)
}

/// Value of never trading the durable good, by policy iteration.
///
/// Starts from the lower bound and alternates control optimization with an
/// exact linear solve of the fixed-policy equation. The far boundary is tied
/// to the intervention value of the current iterate.
pub fn solve_initial(
    grid: &Grid,
    params: &ModelParams,
    bounds: &ValueBounds,
    config: &SolverConfig,
) -> Result<(Vec<f64>, PolicyField)> {
    let gen = Generator::new(grid, params)?;
    let mut v: Vec<f64> = grid.nodes.iter().map(|&z| bounds.lower(z)).collect();
    v[0] = 0.0;
    let mut policy = PolicyField::zeros(grid.len());
    let mut history = Vec::new();
    for iter in 1..=config.max_inner {
        policy = optimize_policy(&gen, &v, &policy, &config.controls)?;
        let far = intervention(grid, &v, params.gamma)?.values[grid.len() - 1];
        let lcp = discretize_generator(&policy, grid, params, far)?;
        let (next, splits) = solve_tridiagonal_splitting(&lcp.a, &lcp.b, &v, config.tol_psor, 10_000)
            .map_err(|e| e.context(format!("initial policy iteration {iter}")))?;
        let change = sup_change(&next, &v);
        v = next;
        history.push(change);
        debug!("initial iteration {iter}: change {change:e}, {splits} splitting steps");
        if change < config.tol_inner {
            return Ok((v, policy));
        }
    }
    Err(Error::NoConvergence {
        what: "initial policy iteration",
        iterations: config.max_inner,
        residual: history.last().copied().unwrap_or(f64::INFINITY),
        history,
    })
}

/// One outer step: with the obstacle frozen at `max(Mv_n, v_n)`, alternate
/// control optimization and PSOR until the value settles.
pub fn inner_loop(
    grid: &Grid,
    params: &ModelParams,
    v_n: &[f64],
    warm: &PolicyField,
    config: &SolverConfig,
) -> Result<InnerOutcome> {
    let gen = Generator::new(grid, params)?;
    let mv = intervention(grid, v_n, params.gamma)?;
    let obstacle: Vec<f64> = mv.values.iter().zip(v_n).map(|(a, b)| a.max(*b)).collect();
    let far = mv.values[grid.len() - 1];
    let mut v = obstacle.clone();
    let mut policy = warm.clone();
    let mut sweeps = 0;
    let mut history = Vec::new();
    for iter in 1..=config.max_inner {
        policy = optimize_policy(&gen, &v, &policy, &config.controls)
            .map_err(|e| e.context(format!("inner iteration {iter}")))?;
        let mut lcp = discretize_generator(&policy, grid, params, far)?;
        lcp.u.clone_from(&obstacle);
        let report = psor_solve(&lcp, &v, &config.psor())
            .map_err(|e| e.context(format!("inner iteration {iter}")))?;
        sweeps += report.sweeps;
        let change = sup_change(&report.solution, &v);
        v = report.solution;
        history.push(change);
        if change < config.tol_inner {
            return Ok(InnerOutcome {
                value: v,
                policy,
                iterations: iter,
                psor_sweeps: sweeps,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "inner policy iteration",
        iterations: config.max_inner,
        residual: history.last().copied().unwrap_or(f64::INFINITY),
        history,
    })
}

/// Stopping-time iteration: `v_0` is the never-trade value and each outer
/// step allows one more intervention, so `v_n` increases to the solution.
pub fn main_loop(grid: &Grid, params: &ModelParams, config: &SolverConfig) -> Result<TcSolution> {
    params.validate()?;
    let tv = params.transversality();
    if !tv.holds {
        return Err(Error::InvalidParams(format!(
            "transversality fails (margin {:e})",
            tv.margin
        )));
    }
    if (grid.theta - params.theta).abs() > 1e-15 {
        return Err(Error::Domain(format!(
            "grid starts at {} but the transaction cost is {}",
            grid.theta, params.theta
        )));
    }
    let no_tc = solve_no_tc(params)?;
    let bounds = ValueBounds::new(params, &no_tc)?;

    let (mut v, mut policy) = solve_initial(grid, params, &bounds, config)?;
    check_bounds(grid, &v, &bounds, config.bound_tol, 0)?;
    let initial_m = intervention(grid, &v, params.gamma)?.m;
    info!("never-trade value solved, M = {initial_m}");

    let mut trace = Vec::new();
    let mut converged = false;
    for iter in 1..=config.max_outer {
        let step = inner_loop(grid, params, &v, &policy, config)
            .map_err(|e| e.context(format!("outer iteration {iter}")))?;
        let delta = sup_change(&step.value, &v);
        let min_increment = step
            .value
            .iter()
            .zip(&v)
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min);
        let violation = check_bounds(grid, &step.value, &bounds, config.bound_tol, iter)?;
        let m = intervention(grid, &step.value, params.gamma)?.m;
        trace.push(TraceEntry {
            iter,
            delta_v_inf: delta,
            m,
            min_increment,
            bound_violation: violation,
            inner_iterations: step.iterations,
            psor_sweeps: step.psor_sweeps,
        });
        debug!(
            "outer {iter}: dv {delta:e}, M {m}, {} inner, {} sweeps",
            step.iterations, step.psor_sweeps
        );
        v = step.value;
        policy = step.policy;
        if delta < config.tol_outer {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "outer iteration",
            iterations: config.max_outer,
            residual: trace.last().map_or(f64::INFINITY, |t| t.delta_v_inf),
            history: trace.iter().map(|t| t.delta_v_inf).collect(),
        });
    }

    let iv = intervention(grid, &v, params.gamma)?;
    let bands = extract_bands(grid, &v, &iv.values, params.gamma, config.zone_tol)?;
    if !(bands.z_low <= bands.z_star && bands.z_star <= bands.z_high) {
        warn!(
            "restock target {} lies outside the no-trading zone [{}, {}]",
            bands.z_star, bands.z_low, bands.z_high
        );
    }
    policy.trade_flag = v
        .iter()
        .zip(&iv.values)
        .map(|(a, b)| a - b <= config.zone_tol)
        .collect();
    policy.trade_flag[0] = true;
    info!(
        "converged after {} outer iterations: zone [{}, {}], z* = {}",
        trace.len(),
        bands.z_low,
        bands.z_high,
        bands.z_star
    );
    Ok(TcSolution {
        params: *params,
        config: *config,
        grid: grid.clone(),
        value: v,
        intervention: iv,
        policy,
        bands,
        initial_m,
        trace,
        bounds,
        no_tc,
    })
}

/// Builds the grid from the configuration and runs [`main_loop`].
pub fn solve_tc(params: &ModelParams, config: &SolverConfig) -> Result<TcSolution> {
    params.validate()?;
    let no_tc = solve_no_tc(params)?;
    let z_max = config.resolve_z_max(&no_tc);
    let grid = Grid::uniform(params.theta, z_max, config.grid_n)?;
    main_loop(&grid, params, config)
}

/// Solves for each loading factor; solves run concurrently.
pub fn sweep_tc_loading(params: &ModelParams, phi_grid: &[f64], config: &SolverConfig) -> Result<Vec<TcSolution>> {
    phi_grid
        .par_iter()
        .map(|&phi| {
            solve_tc(&params.with_phi(phi), config).map_err(|e| Error::AtLoading {
                phi,
                source: Box::new(e),
            })
        })
        .collect()
}

//! Frictionless problem: constant-fraction controls and the closed-form
//! value function.
//!
//! Without transaction costs the reduced value function is
//! `v(y) = α_v y^(1-γ) / (1-γ)` and every control is a constant fraction of
//! wealth. The first-order conditions express `α_π1`, `α_q`, `α_c` and `α_v`
//! along a one-parameter curve indexed by the durable fraction `α_k`: the
//! risky fraction follows from its own first-order condition, which is
//! monotone in `α_π1`, and coverage, consumption and `α_v` follow in closed
//! form. The remaining condition is that the supremum of the reduced HJB
//! right-hand side is zero. That scalar equation is solved by scanning a
//! log-spaced grid of `α_k` for a sign change and bisecting.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimize::bisect;
use crate::params::ModelParams;
use crate::scenario::Scenario;
use crate::utility::utility;

/// Durable-fraction scan, log-spaced so small fractions are resolved.
const SCAN_LO: f64 = 1e-6;
const SCAN_HI: f64 = 1e3;
const SCAN_STEPS: usize = 1024;
const ROOT_TOL: f64 = 1e-15;
/// A refined sign change only counts as a root if the objective there is
/// this small; anything else is a pole at the edge of feasibility.
const OBJECTIVE_TOL: f64 = 1e-8;

/// The four control fractions of wealth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fractions {
    /// Perishable consumption rate.
    pub alpha_c: f64,
    /// Risky-asset holding.
    pub alpha_pi1: f64,
    /// Durable-good value.
    pub alpha_k: f64,
    /// Insurance coverage.
    pub alpha_q: f64,
}

/// Fractions implied by the first-order conditions for a given `α_π1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerFractions {
    pub alpha_k: f64,
    pub alpha_q: f64,
    pub alpha_c: f64,
    pub alpha_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoTcSolution {
    pub alpha_c: f64,
    pub alpha_pi1: f64,
    pub alpha_k: f64,
    pub alpha_q: f64,
    pub alpha_v: f64,
    /// HJB right-hand side at the solution; zero up to round-off.
    pub objective: f64,
}

impl NoTcSolution {
    pub fn fractions(&self) -> Fractions {
        Fractions {
            alpha_c: self.alpha_c,
            alpha_pi1: self.alpha_pi1,
            alpha_k: self.alpha_k,
            alpha_q: self.alpha_q,
        }
    }

    /// Transformed wealth `x / (k p)` held by the frictionless optimum.
    pub fn target_z(&self) -> f64 {
        1.0 / self.alpha_k
    }
}

/// Optimal coverage given the durable fraction: a deductible contract that
/// caps the retained loss at `1 - φ^(-1/γ)` of wealth.
pub fn coverage(alpha_k: f64, params: &ModelParams) -> f64 {
    (params.ell * alpha_k - retention_cap(params)).max(0.0)
}

/// `1 - φ^(-1/γ)`: the largest loss fraction left uninsured.
pub fn retention_cap(params: &ModelParams) -> f64 {
    1.0 - params.phi.powf(-1.0 / params.gamma)
}

/// Durable fraction from the risky-asset first-order condition
/// (requires `σ_P1 != 0`).
pub fn durable_fraction(alpha_pi1: f64, params: &ModelParams) -> Result<f64> {
    let p = params;
    if p.sigma_p1 == 0.0 {
        return Err(Error::Domain(
            "durable fraction is not determined by the risky fraction when sigma_p1 = 0".into(),
        ));
    }
    check_crash_solvency(alpha_pi1, p)?;
    let d = p.derived();
    let crash = if p.lambda_1 > 0.0 {
        p.eta * p.lambda_1 * (1.0 - p.eta * alpha_pi1).powf(-p.gamma)
    } else {
        0.0
    };
    let numerator = d.mu_bar_s
        - p.gamma * alpha_pi1 * p.sigma_s * p.sigma_s
        - (1.0 - p.beta) * (1.0 - p.gamma) * p.sigma_s * p.sigma_p1
        - crash;
    Ok(numerator / (p.gamma * p.sigma_s * p.sigma_p1))
}

/// Coverage, consumption and value constant for given risky and durable
/// fractions.
pub fn fractions_given(alpha_pi1: f64, alpha_k: f64, params: &ModelParams) -> Result<InnerFractions> {
    let p = params;
    if !(alpha_k > 0.0) {
        return Err(Error::Infeasible(format!("alpha_k = {alpha_k} is not positive")));
    }
    let d = p.derived();
    let alpha_q = coverage(alpha_k, p);
    let after_loss = 1.0 - p.ell * alpha_k + alpha_q;
    if !(after_loss > 0.0) {
        return Err(Error::Infeasible(format!(
            "wealth after an insured loss, 1 - ell*alpha_k + alpha_q = {after_loss}, is not positive"
        )));
    }
    let bracket = d.sigma_p_sq * ((1.0 - p.beta) * (1.0 - p.gamma) + p.gamma * alpha_k)
        + p.gamma * alpha_pi1 * p.sigma_s * p.sigma_p1
        + p.r
        - p.mu_p
        + p.delta
        + p.ell * p.lambda_2 * after_loss.powf(-p.gamma);
    let alpha_c = p.beta / (1.0 - p.beta) * bracket * alpha_k;
    if !(alpha_c > 0.0) {
        return Err(Error::Infeasible(format!("alpha_c = {alpha_c} is not positive")));
    }
    let alpha_v = p.beta
        * alpha_c.powf(d.beta_bar - 1.0)
        * alpha_k.powf((1.0 - p.beta) * (1.0 - p.gamma));
    Ok(InnerFractions {
        alpha_k,
        alpha_q,
        alpha_c,
        alpha_v,
    })
}

/// `(α_k, α_q, α_c, α_v)` implied by the first-order conditions at the
/// candidate risky fraction `alpha_pi1`.
pub fn inner_fractions(alpha_pi1: f64, params: &ModelParams) -> Result<InnerFractions> {
    let alpha_k = durable_fraction(alpha_pi1, params)?;
    fractions_given(alpha_pi1, alpha_k, params)
}

fn check_crash_solvency(alpha_pi1: f64, p: &ModelParams) -> Result<()> {
    if p.lambda_1 > 0.0 && !(1.0 - p.eta * alpha_pi1 > 0.0) {
        return Err(Error::Domain(format!(
            "wealth after a crash, 1 - eta*alpha_pi1 = {}, is not positive",
            1.0 - p.eta * alpha_pi1
        )));
    }
    Ok(())
}

/// Supremand of the reduced HJB equation written in wealth fractions,
/// evaluated at `fr` with value constant `alpha_v`.
///
/// The crash term is dropped when `λ₁ = 0`, so `1 - ηα_π1` only has to be
/// positive when crashes can happen.
pub fn hjb_objective(fr: &Fractions, alpha_v: f64, params: &ModelParams) -> Result<f64> {
    let p = params;
    let d = p.derived();
    check_crash_solvency(fr.alpha_pi1, p)?;
    let after_loss = 1.0 - (p.ell * fr.alpha_k - fr.alpha_q);
    if !(after_loss > 0.0) {
        return Err(Error::Domain(format!(
            "wealth after an insured loss, {after_loss}, is not positive"
        )));
    }
    let omg = 1.0 - p.gamma;
    let bb = d.beta_bar;
    let sp2 = d.sigma_p_sq;
    let rest = 1.0 - fr.alpha_k;

    let felicity = utility(fr.alpha_c, fr.alpha_k, p.beta, p.gamma)?;
    let level = alpha_v / omg * (bb * p.mu_p - p.rho - 0.5 * sp2 * bb * (1.0 - bb));
    let drift = alpha_v
        * ((p.r + (1.0 - bb) * sp2 - p.mu_p) * rest - p.delta * fr.alpha_k
            - p.phi * p.lambda_2 * fr.alpha_q
            + fr.alpha_pi1 * (d.mu_bar_s - (1.0 - bb) * p.sigma_s * p.sigma_p1)
            - fr.alpha_c);
    let diffusion = -p.gamma
        * alpha_v
        * (0.5 * fr.alpha_pi1 * fr.alpha_pi1 * p.sigma_s * p.sigma_s + 0.5 * sp2 * rest * rest
            - fr.alpha_pi1 * p.sigma_s * p.sigma_p1 * rest);
    let crash = if p.lambda_1 > 0.0 {
        p.lambda_1 * ((1.0 - p.eta * fr.alpha_pi1).powf(omg) - 1.0)
    } else {
        0.0
    };
    let loss = if p.lambda_2 > 0.0 {
        p.lambda_2 * (after_loss.powf(omg) - 1.0)
    } else {
        0.0
    };
    let jumps = alpha_v / omg * (crash + loss);
    Ok(felicity + level + drift + diffusion + jumps)
}

/// Objective along the first-order-condition curve.
fn curve_objective(alpha_pi1: f64, alpha_k: f64, p: &ModelParams) -> Result<f64> {
    let inner = fractions_given(alpha_pi1, alpha_k, p)?;
    let fr = Fractions {
        alpha_c: inner.alpha_c,
        alpha_pi1,
        alpha_k,
        alpha_q: inner.alpha_q,
    };
    hjb_objective(&fr, inner.alpha_v, p)
}

/// Scan `grid` for sign changes of `f` between consecutive feasible points,
/// bisect each one and keep those that are genuine roots.
fn scan_roots(f: &dyn Fn(f64) -> Result<f64>, grid: &[f64]) -> Vec<f64> {
    let values: Vec<Option<f64>> = grid
        .iter()
        .map(|&x| f(x).ok().filter(|v| v.is_finite()))
        .collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (Some(a), Some(b)) = (values[i], values[i + 1]) else {
            continue;
        };
        if a.signum() == b.signum() && a != 0.0 {
            continue;
        }
        let g = |x: f64| f(x).unwrap_or(f64::NAN);
        if let Ok(root) = bisect(g, grid[i], grid[i + 1], ROOT_TOL) {
            if let Ok(value) = f(root) {
                if value.abs() <= OBJECTIVE_TOL {
                    roots.push(root);
                }
            }
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
}

fn pick_root(roots: Vec<f64>, what: &str) -> Result<f64> {
    match roots.len() {
        0 => Err(Error::Infeasible(format!(
            "no admissible {what} makes the HJB supremum vanish; the value may be infinite for these parameters"
        ))),
        1 => Ok(roots[0]),
        _ => {
            log::warn!("several candidate {what} values {roots:?}; using the first");
            Ok(roots[0])
        }
    }
}

/// Risky fraction from its first-order condition at a given durable
/// fraction: the root of
/// `μ̄_S - γα σ_S² - (1-β)(1-γ) σ_S σ_P1 - γ α_k σ_S σ_P1 - ηλ₁(1-ηα)^(-γ)`,
/// which is strictly decreasing in `α`.
pub fn risky_fraction(alpha_k: f64, params: &ModelParams) -> Result<f64> {
    let p = params;
    let d = p.derived();
    let shift = ((1.0 - p.beta) * (1.0 - p.gamma) + p.gamma * alpha_k) * p.sigma_s * p.sigma_p1;
    let h = |a: f64| {
        let crash = if p.lambda_1 > 0.0 {
            p.eta * p.lambda_1 * (1.0 - p.eta * a).powf(-p.gamma)
        } else {
            0.0
        };
        d.mu_bar_s - shift - p.gamma * a * p.sigma_s * p.sigma_s - crash
    };
    let mut lo = -1.0;
    while h(lo) <= 0.0 {
        lo *= 2.0;
        if lo < -1e12 {
            return Err(Error::Infeasible("risky fraction unbounded below".into()));
        }
    }
    let mut hi = if p.lambda_1 > 0.0 {
        (1.0 - 1e-12) / p.eta
    } else {
        1.0
    };
    while h(hi) >= 0.0 {
        if p.lambda_1 > 0.0 {
            return Err(Error::Infeasible("risky fraction has no root below 1/eta".into()));
        }
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Infeasible("risky fraction unbounded above".into()));
        }
    }
    bisect(h, lo, hi, ROOT_TOL)
}

/// Solve the frictionless problem.
pub fn solve_no_tc(params: &ModelParams) -> Result<NoTcSolution> {
    let p = params;
    p.validate()?;
    let transversality = p.transversality();
    if !transversality.holds {
        log::warn!(
            "transversality condition fails (margin {:e}); the value function may be infinite",
            transversality.margin
        );
    }

    let grid: Vec<f64> = (0..=SCAN_STEPS)
        .map(|i| SCAN_LO * (SCAN_HI / SCAN_LO).powf(i as f64 / SCAN_STEPS as f64))
        .collect();
    let f = |k: f64| curve_objective(risky_fraction(k, p)?, k, p);
    let alpha_k = pick_root(scan_roots(&f, &grid), "durable fraction")?;
    let alpha_pi1 = risky_fraction(alpha_k, p)?;

    let inner = fractions_given(alpha_pi1, alpha_k, p)?;
    let fractions = Fractions {
        alpha_c: inner.alpha_c,
        alpha_pi1,
        alpha_k,
        alpha_q: inner.alpha_q,
    };
    let objective = hjb_objective(&fractions, inner.alpha_v, p)?;
    Ok(NoTcSolution {
        alpha_c: inner.alpha_c,
        alpha_pi1,
        alpha_k,
        alpha_q: inner.alpha_q,
        alpha_v: inner.alpha_v,
        objective,
    })
}

/// `V(x, p) = α_v p^(-(1-β)(1-γ)) x^(1-γ) / (1-γ)`.
pub fn value_function_no_tc(x: f64, p: f64, sol: &NoTcSolution, params: &ModelParams) -> Result<f64> {
    if !(x > 0.0 && p > 0.0) {
        return Err(Error::Domain(format!(
            "value function needs x > 0 and p > 0, got x = {x}, p = {p}"
        )));
    }
    let omg = 1.0 - params.gamma;
    Ok(sol.alpha_v * p.powf(-(1.0 - params.beta) * omg) * x.powf(omg) / omg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadingSweepRow {
    pub phi: f64,
    pub alpha_c: f64,
    pub alpha_pi1: f64,
    pub alpha_k: f64,
    pub alpha_q: f64,
    pub alpha_v: f64,
    pub objective: f64,
}

/// Solve the frictionless problem at every loading of the scenario's grid.
pub fn sweep_loading(scenario: &Scenario) -> Result<Vec<LoadingSweepRow>> {
    scenario.validate()?;
    scenario
        .phi_grid
        .par_iter()
        .map(|&phi| {
            let sol = solve_no_tc(&scenario.params.with_phi(phi)).map_err(|e| Error::AtLoading {
                phi,
                source: Box::new(e),
            })?;
            Ok(LoadingSweepRow {
                phi,
                alpha_c: sol.alpha_c,
                alpha_pi1: sol.alpha_pi1,
                alpha_k: sol.alpha_k,
                alpha_q: sol.alpha_q,
                alpha_v: sol.alpha_v,
                objective: sol.objective,
            })
        })
        .collect()
}

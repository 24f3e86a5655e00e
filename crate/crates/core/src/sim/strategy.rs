use crate::error::{Error, Result};
use crate::hjbqvi::{Grid, PolicyField, TradingBands};
use crate::no_tc::NoTcSolution;

use super::PathState;

/// Controls chosen at the start of a time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    /// Durable stock held over the step (after any trade).
    pub k: f64,
    /// Transaction cost paid out of wealth at the start of the step.
    pub cost: f64,
    pub c: f64,
    pub pi1: f64,
    pub q: f64,
}

/// A feedback rule mapping the current state to controls.
pub trait Strategy: Sync {
    fn decide(&self, state: &PathState) -> Result<Decision>;

    /// `β ln c + (1-β) ln k` for a decision with `c, k > 0`. Rules with
    /// structure can override this to save logarithms.
    fn log_bundle(&self, _state: &PathState, d: &Decision, beta: f64) -> f64 {
        beta * d.c.ln() + (1.0 - beta) * d.k.ln()
    }

    /// Wealth below which the initial state is insolvent, given `k` and `p`.
    fn solvency_floor(&self, _k: f64, _p: f64) -> f64 {
        0.0
    }
}

/// Constant-fraction rule of the frictionless problem, rebalanced at no
/// cost every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoTcStrategy {
    pub alpha_c: f64,
    pub alpha_pi1: f64,
    pub alpha_k: f64,
    pub alpha_q: f64,
}

pub fn no_tc_strategy(sol: &NoTcSolution) -> NoTcStrategy {
    NoTcStrategy {
        alpha_c: sol.alpha_c,
        alpha_pi1: sol.alpha_pi1,
        alpha_k: sol.alpha_k,
        alpha_q: sol.alpha_q,
    }
}

impl NoTcStrategy {
    /// The same fractions with `k` held at `κ` times its optimal level.
    pub fn scaled_durable(self, kappa: f64) -> Self {
        Self {
            alpha_k: self.alpha_k * kappa,
            ..self
        }
    }
}

impl Strategy for NoTcStrategy {
    fn decide(&self, state: &PathState) -> Result<Decision> {
        let x = state.x.max(0.0);
        Ok(Decision {
            k: self.alpha_k * x / state.p,
            cost: 0.0,
            c: self.alpha_c * x,
            pi1: self.alpha_pi1 * x,
            q: self.alpha_q * x,
        })
    }

    fn log_bundle(&self, state: &PathState, _d: &Decision, beta: f64) -> f64 {
        // c = α_c x and k = α_k x / p.
        beta * self.alpha_c.ln() + (1.0 - beta) * (self.alpha_k.ln() - state.log_p) + state.x.ln()
    }
}

/// Impulse rule from a transaction-cost solution: outside the no-trading
/// interval, pay `θkp` and restock so that `z = z*`; inside, apply the
/// grid controls scaled by `kp`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStrategy {
    pub bands: TradingBands,
    pub theta: f64,
    grid: Grid,
    c_hat: Vec<f64>,
    pi1_hat: Vec<f64>,
    q_hat: Vec<f64>,
}

pub fn band_strategy(bands: &TradingBands, policy: &PolicyField, grid: &Grid) -> Result<BandStrategy> {
    if policy.len() != grid.len() {
        return Err(Error::Domain("policy does not match the grid".into()));
    }
    if !(bands.z_low <= bands.z_star && bands.z_star <= bands.z_high) {
        return Err(Error::Zone(format!(
            "restock target {} outside [{}, {}]",
            bands.z_star, bands.z_low, bands.z_high
        )));
    }
    Ok(BandStrategy {
        bands: *bands,
        theta: grid.theta,
        grid: grid.clone(),
        c_hat: policy.c_hat.clone(),
        pi1_hat: policy.pi1_hat.clone(),
        q_hat: policy.q_hat.clone(),
    })
}

impl Strategy for BandStrategy {
    fn decide(&self, state: &PathState) -> Result<Decision> {
        let kp = state.k * state.p;
        let z = if kp > 0.0 { state.x / kp } else { f64::INFINITY };
        let (k, cost, z) = if self.bands.contains(z) {
            (state.k, 0.0, z)
        } else {
            let cost = self.theta * kp;
            let left = state.x - cost;
            if !(left > 0.0) {
                return Err(Error::Simulation(format!(
                    "trade at t = {} leaves wealth {left}",
                    state.t
                )));
            }
            (left / (self.bands.z_star * state.p), cost, self.bands.z_star)
        };
        let kp = k * state.p;
        Ok(Decision {
            k,
            cost,
            c: kp * self.grid.interpolate(&self.c_hat, z),
            pi1: kp * self.grid.interpolate(&self.pi1_hat, z),
            q: kp * self.grid.interpolate(&self.q_hat, z),
        })
    }

    fn solvency_floor(&self, k: f64, p: f64) -> f64 {
        self.theta * k * p
    }
}

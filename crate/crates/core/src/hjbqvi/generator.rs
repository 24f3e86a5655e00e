use arrayvec::ArrayVec;
use serde::Serialize;

use super::grid::Grid;
use super::lcp::{CsrMatrix, LcpProblem};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Transformed controls at one node: `ĉ = c/(kp)`, `π̂₁ = π₁/(kp)`,
/// `q̂ = q/(kp)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Controls {
    pub c_hat: f64,
    pub pi1_hat: f64,
    pub q_hat: f64,
}

/// Per-node controls plus the intervention flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyField {
    pub c_hat: Vec<f64>,
    pub pi1_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
    pub trade_flag: Vec<bool>,
}

impl PolicyField {
    pub fn zeros(n: usize) -> Self {
        Self {
            c_hat: vec![0.0; n],
            pi1_hat: vec![0.0; n],
            q_hat: vec![0.0; n],
            trade_flag: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.c_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_hat.is_empty()
    }

    pub fn at(&self, i: usize) -> Controls {
        Controls {
            c_hat: self.c_hat[i],
            pi1_hat: self.pi1_hat[i],
            q_hat: self.q_hat[i],
        }
    }

    pub fn set(&mut self, i: usize, ctl: Controls) {
        self.c_hat[i] = ctl.c_hat;
        self.pi1_hat[i] = ctl.pi1_hat;
        self.q_hat[i] = ctl.q_hat;
    }

    pub fn from_controls(controls: Vec<Controls>) -> Self {
        let n = controls.len();
        let mut field = Self::zeros(n);
        for (i, ctl) in controls.into_iter().enumerate() {
            field.set(i, ctl);
        }
        field
    }
}

/// One discretized row of the generator: `(L v)_i = Σ w_j v_j`, plus the
/// utility source term.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub entries: ArrayVec<(usize, f64), 8>,
    pub source: f64,
}

/// Upwind finite-difference discretization of the transformed generator
/// at fixed controls.
#[derive(Debug, Clone)]
pub struct Generator<'a> {
    pub grid: &'a Grid,
    pub params: ModelParams,
    /// Coefficient of `v` (`β̄μ_P - ½β̄(1-β̄)σ_P²`).
    pub growth: f64,
    pub rho_bar: f64,
    pub beta_bar: f64,
    /// Drift of `z` per unit of `(1 - z)`.
    price_drift: f64,
    /// Drift of `z` per unit of `π̂₁`.
    risky_drift: f64,
    /// `(1-ℓ)^(1-γ)`, the value scaling after a durable-good loss.
    loss_scale: f64,
}

impl<'a> Generator<'a> {
    pub fn new(grid: &'a Grid, params: &ModelParams) -> Result<Self> {
        if !(params.gamma > 0.0 && params.gamma < 1.0) {
            return Err(Error::Domain(format!(
                "the transaction-cost solver needs 0 < gamma < 1, got {}",
                params.gamma
            )));
        }
        let d = params.derived();
        Ok(Self {
            grid,
            params: *params,
            growth: d.growth_coefficient(params.mu_p),
            rho_bar: d.rho_bar,
            beta_bar: d.beta_bar,
            price_drift: d.mu_bar_p - (1.0 - d.beta_bar) * d.sigma_p_sq,
            risky_drift: d.mu_bar_s - (1.0 - d.beta_bar) * params.sigma_s * params.sigma_p1,
            loss_scale: (1.0 - params.ell).powf(1.0 - params.gamma),
        })
    }

    /// Drift of `z` under the given controls.
    pub fn drift(&self, z: f64, ctl: &Controls) -> f64 {
        (1.0 - z) * self.price_drift + ctl.pi1_hat * self.risky_drift
            - ctl.c_hat
            - self.params.lambda_2 * self.params.phi * ctl.q_hat
    }

    /// Half the squared diffusion of `z`.
    pub fn diffusion(&self, z: f64, ctl: &Controls) -> f64 {
        let p = &self.params;
        let first = (1.0 - z) * p.sigma_p1 + ctl.pi1_hat * p.sigma_s;
        let second = (1.0 - z) * p.sigma_p2;
        0.5 * (first * first + second * second)
    }

    pub fn consumption_utility(&self, c_hat: f64) -> f64 {
        if c_hat > 0.0 {
            c_hat.powf(self.beta_bar) / (1.0 - self.params.gamma)
        } else {
            0.0
        }
    }

    /// Post-crash transformed wealth.
    pub fn crash_target(&self, z: f64, ctl: &Controls) -> f64 {
        z - self.params.eta * ctl.pi1_hat
    }

    /// Post-loss transformed wealth.
    pub fn loss_target(&self, z: f64, ctl: &Controls) -> f64 {
        (z - self.params.ell + ctl.q_hat) / (1.0 - self.params.ell)
    }

    /// Whether both jump targets stay strictly inside the solvency region.
    pub fn feasible(&self, z: f64, ctl: &Controls) -> bool {
        let theta = self.grid.theta;
        let crash_ok = self.params.lambda_1 == 0.0 || self.crash_target(z, ctl) > theta;
        let loss_ok = z - (self.params.ell - ctl.q_hat) > theta;
        crash_ok && loss_ok && ctl.c_hat >= 0.0 && ctl.q_hat >= 0.0
    }

    /// Generator row at an interior node `1 <= i <= n-2`.
    pub fn row(&self, i: usize, ctl: &Controls) -> Row {
        let h = self.grid.h;
        let z = self.grid.nodes[i];
        let a = self.diffusion(z, ctl) / (h * h);
        let b = self.drift(z, ctl) / h;
        let p = &self.params;
        let mut entries = ArrayVec::new();
        entries.push((i - 1, a + (-b).max(0.0)));
        entries.push((i + 1, a + b.max(0.0)));
        entries.push((i, self.growth - 2.0 * a - b.abs() - p.lambda_1 - p.lambda_2));
        if p.lambda_1 > 0.0 {
            for (j, w) in self.grid.stencil(self.crash_target(z, ctl), p.gamma) {
                entries.push((j, p.lambda_1 * w));
            }
        }
        if p.lambda_2 > 0.0 {
            for (j, w) in self.grid.stencil(self.loss_target(z, ctl), p.gamma) {
                entries.push((j, p.lambda_2 * self.loss_scale * w));
            }
        }
        Row {
            entries,
            source: self.consumption_utility(ctl.c_hat),
        }
    }

    /// `-ρ̄ v_i + (L v)_i + ĉ^β̄/(1-γ)`, the quantity maximized over controls.
    pub fn supremand(&self, i: usize, ctl: &Controls, v: &[f64]) -> f64 {
        let row = self.row(i, ctl);
        let lv: f64 = row.entries.iter().map(|&(j, w)| w * v[j]).sum();
        lv - self.rho_bar * v[i] + row.source
    }
}

/// Assembles `A = ρ̄I - L` and `b` for fixed controls.
///
/// Row 0 is `v(θ) = 0`; the last row is `v(z_max) = far_value`. The obstacle
/// is left at `-∞`.
pub fn discretize_generator(
    policy: &PolicyField,
    grid: &Grid,
    params: &ModelParams,
    far_value: f64,
) -> Result<LcpProblem> {
    let gen = Generator::new(grid, params)?;
    let n = grid.len();
    if policy.len() != n {
        return Err(Error::Domain(format!(
            "policy has {} nodes, grid has {n}",
            policy.len()
        )));
    }
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut b = vec![0.0; n];
    rows.push(vec![(0, 1.0)]);
    for (i, rhs) in b.iter_mut().enumerate().take(n - 1).skip(1) {
        let ctl = policy.at(i);
        let z = grid.nodes[i];
        if !gen.feasible(z, &ctl) {
            return Err(Error::Infeasible(format!(
                "controls {ctl:?} at z = {z} leave the solvency region"
            )));
        }
        let row = gen.row(i, &ctl);
        let mut out: Vec<(usize, f64)> = row.entries.iter().map(|&(j, w)| (j, -w)).collect();
        out.push((i, gen.rho_bar));
        rows.push(out);
        *rhs = row.source;
    }
    rows.push(vec![(n - 1, 1.0)]);
    b[n - 1] = far_value;
    let a = CsrMatrix::from_rows(n, rows);
    if let Some((row, col, value)) = a.positive_off_diagonal(1e-12) {
        return Err(Error::NonMonotone { row, col, value });
    }
    Ok(LcpProblem {
        u: vec![f64::NEG_INFINITY; n],
        a,
        b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_params() -> ModelParams {
        ModelParams {
            sigma_s: 0.0,
            sigma_p1: 0.0,
            sigma_p2: 0.0,
            lambda_1: 0.0,
            lambda_2: 0.0,
            ..ModelParams::transaction_cost_base()
        }
    }

    #[test]
    fn constant_vector_row_sum() {
        let p = ModelParams {
            lambda_1: 0.0,
            lambda_2: 0.0,
            ..ModelParams::transaction_cost_base()
        };
        let grid = Grid::uniform(p.theta, 10.0, 101).unwrap();
        let mut policy = PolicyField::zeros(grid.len());
        policy.q_hat.fill(p.ell);
        let lcp = discretize_generator(&policy, &grid, &p, 1.0).unwrap();
        let ones = vec![1.0; grid.len()];
        let av = lcp.a.mul_vec(&ones);
        let d = p.derived();
        let expected = d.rho_bar - d.beta_bar * p.mu_p + 0.5 * d.beta_bar * (1.0 - d.beta_bar) * d.sigma_p_sq;
        for (i, x) in av.iter().enumerate().take(100).skip(1) {
            assert!((x - expected).abs() < 1e-12, "row {i}: {x} vs {expected}");
        }
        assert_eq!(av[0], 1.0);
        assert_eq!(av[100], 1.0);
    }

    #[test]
    fn pure_drift_upwinding() {
        let p = quiet_params();
        let grid = Grid::uniform(p.theta, 3.05, 31).unwrap();
        let gen = Generator::new(&grid, &p).unwrap();
        let drift_coef = p.mu_p - p.r - p.delta;
        let h = grid.h;
        for i in 1..30 {
            let z = grid.nodes[i];
            let row = gen.row(i, &Controls::default());
            let b = (1.0 - z) * drift_coef;
            let expect_lo = (-b).max(0.0) / h;
            let expect_hi = b.max(0.0) / h;
            assert!((row.entries[0].1 - expect_lo).abs() < 1e-12);
            assert!((row.entries[1].1 - expect_hi).abs() < 1e-12);
            assert!((row.entries[2].1 - (gen.growth - b.abs() / h)).abs() < 1e-12);
            assert_eq!(row.entries.len(), 3);
        }
    }

    #[test]
    fn jump_rows_keep_monotonicity() {
        let p = ModelParams {
            lambda_1: 0.2,
            ..ModelParams::transaction_cost_base()
        };
        let grid = Grid::uniform(p.theta, 20.0, 401).unwrap();
        let mut policy = PolicyField::zeros(grid.len());
        for (i, &z) in grid.nodes.iter().enumerate() {
            policy.set(
                i,
                Controls {
                    c_hat: 0.05 * z,
                    pi1_hat: 0.5 * z,
                    q_hat: 0.5,
                },
            );
        }
        let lcp = discretize_generator(&policy, &grid, &p, 1.0).unwrap();
        assert!(lcp.a.positive_off_diagonal(0.0).is_none());
        for i in 0..grid.len() {
            assert!(lcp.a.diag(i) > 0.0);
            let row_sum: f64 = lcp.a.row(i).map(|(_, w)| w).sum();
            assert!(row_sum > 0.0, "row {i} sum {row_sum}");
        }
    }

    #[test]
    fn infeasible_controls_are_rejected() {
        let p = ModelParams::transaction_cost_base();
        let grid = Grid::uniform(p.theta, 10.0, 101).unwrap();
        // q = 0 near theta leaves z - ell < theta.
        let policy = PolicyField::zeros(grid.len());
        assert!(matches!(
            discretize_generator(&policy, &grid, &p, 1.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn needs_gamma_below_one() {
        let p = ModelParams {
            gamma: 2.0,
            ..ModelParams::transaction_cost_base()
        };
        let grid = Grid::uniform(p.theta, 10.0, 11).unwrap();
        assert!(Generator::new(&grid, &p).is_err());
    }
}

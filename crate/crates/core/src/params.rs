//! Market, preference, insurance and cost constants of the economy.
//!
//! All rates are annualized and time is measured in years.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of the model economy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Drift of the risky asset.
    pub mu_s: f64,
    /// Volatility of the risky asset.
    pub sigma_s: f64,
    /// Fraction of the risky asset lost at a market crash.
    pub eta: f64,
    /// Market-crash intensity.
    pub lambda_1: f64,
    /// Risk-free rate.
    pub r: f64,
    /// Drift of the durable-good unit price.
    pub mu_p: f64,
    /// Loading of the durable price on the risky-asset Brownian motion.
    pub sigma_p1: f64,
    /// Loading of the durable price on the idiosyncratic Brownian motion.
    pub sigma_p2: f64,
    /// Depreciation rate of the durable stock.
    pub delta: f64,
    /// Fraction of the durable stock lost at an insured event.
    pub ell: f64,
    /// Insured-event intensity.
    pub lambda_2: f64,
    /// Insurance premium loading; `1` is actuarially fair.
    pub phi: f64,
    /// Time preference.
    pub rho: f64,
    /// Weight of perishable consumption in the utility bundle.
    pub beta: f64,
    /// Relative risk aversion.
    pub gamma: f64,
    /// Proportional transaction cost on selling the durable stock.
    pub theta: f64,
}

/// Combinations of [`ModelParams`] that appear throughout the reduced
/// equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// `β(1-γ)`
    pub beta_bar: f64,
    /// `ρ + δ(1-γ)`
    pub rho_bar: f64,
    /// `μ_P - r - δ`
    pub mu_bar_p: f64,
    /// `μ_S + λ₁η - r`
    pub mu_bar_s: f64,
    /// `σ_P1² + σ_P2²`
    pub sigma_p_sq: f64,
}

impl DerivedParams {
    /// Coefficient of `v(z)` in the transformed generator,
    /// `β̄μ_P - ½β̄(1-β̄)σ_P²`.
    pub fn growth_coefficient(&self, mu_p: f64) -> f64 {
        self.beta_bar * mu_p - 0.5 * self.beta_bar * (1.0 - self.beta_bar) * self.sigma_p_sq
    }
}

/// Outcome of the transversality check `ρ̄ ≥ β̄μ_P - ½β̄(1-β̄)σ_P²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transversality {
    pub holds: bool,
    /// `ρ̄` minus the right-hand side; nonnegative exactly when `holds`.
    pub margin: f64,
}

/// A single broken parameter constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub constraint: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.constraint)
    }
}

impl ModelParams {
    /// Base scenario of the frictionless experiments (loading `φ = 1`,
    /// no transaction cost).
    pub fn base() -> Self {
        Self {
            mu_s: 0.06,
            sigma_s: 0.25,
            eta: 0.1,
            lambda_1: 0.0,
            r: 0.02,
            mu_p: 0.02,
            sigma_p1: 0.1,
            sigma_p2: 0.2,
            delta: 0.015,
            ell: 0.5,
            lambda_2: 0.01,
            phi: 1.0,
            rho: 0.04,
            beta: 0.5,
            gamma: 0.9,
            theta: 0.0,
        }
    }

    /// Parameters of the transaction-cost experiments: the base scenario
    /// with `θ = 0.05` and loading `φ = 1.2`.
    pub fn transaction_cost_base() -> Self {
        Self {
            theta: 0.05,
            phi: 1.2,
            ..Self::base()
        }
    }

    pub fn with_phi(self, phi: f64) -> Self {
        Self { phi, ..self }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    pub fn derived(&self) -> DerivedParams {
        DerivedParams {
            beta_bar: self.beta * (1.0 - self.gamma),
            rho_bar: self.rho + self.delta * (1.0 - self.gamma),
            mu_bar_p: self.mu_p - self.r - self.delta,
            mu_bar_s: self.mu_s + self.lambda_1 * self.eta - self.r,
            sigma_p_sq: self.sigma_p1 * self.sigma_p1 + self.sigma_p2 * self.sigma_p2,
        }
    }

    pub fn transversality(&self) -> Transversality {
        let d = self.derived();
        let margin = d.rho_bar - d.growth_coefficient(self.mu_p);
        Transversality {
            holds: margin >= 0.0,
            margin,
        }
    }

    /// Every broken constraint, in field order. Empty means valid.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, field: &'static str, constraint: &str| {
            if !ok {
                out.push(Violation {
                    field,
                    constraint: constraint.to_string(),
                });
            }
        };
        let fields = [
            ("mu_s", self.mu_s),
            ("sigma_s", self.sigma_s),
            ("eta", self.eta),
            ("lambda_1", self.lambda_1),
            ("r", self.r),
            ("mu_p", self.mu_p),
            ("sigma_p1", self.sigma_p1),
            ("sigma_p2", self.sigma_p2),
            ("delta", self.delta),
            ("ell", self.ell),
            ("lambda_2", self.lambda_2),
            ("phi", self.phi),
            ("rho", self.rho),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("theta", self.theta),
        ];
        for (name, value) in fields {
            check(value.is_finite(), name, "must be finite");
        }
        check(self.sigma_s > 0.0, "sigma_s", "must be > 0");
        check(self.eta >= 0.0, "eta", "must be >= 0");
        check(
            self.lambda_1 <= 0.0 || self.eta > 0.0,
            "eta",
            "must be > 0 when lambda_1 > 0",
        );
        check(self.lambda_1 >= 0.0, "lambda_1", "must be >= 0");
        check(self.ell > 0.0 && self.ell < 1.0, "ell", "must lie in (0, 1)");
        check(self.lambda_2 >= 0.0, "lambda_2", "must be >= 0");
        check(self.phi >= 1.0, "phi", "loading factor must be >= 1");
        check(self.beta > 0.0 && self.beta < 1.0, "beta", "must lie in (0, 1)");
        check(self.gamma > 0.0, "gamma", "must be > 0");
        check(self.gamma != 1.0, "gamma", "must differ from 1 (gamma = 1 is the excluded log-utility case)");
        check(self.theta >= 0.0, "theta", "must be >= 0");
        out
    }

    pub fn validate(&self) -> Result<()> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            let joined: Vec<String> = violations.iter().map(ToString::to_string).collect();
            Err(Error::InvalidParams(joined.join("; ")))
        }
    }
}

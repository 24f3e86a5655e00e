use serde::Serialize;

use crate::error::{Error, Result};
use crate::no_tc::NoTcSolution;
use crate::params::ModelParams;

/// Bounds on the transformed value function,
/// `α̲ (z-θ)^(1-γ) / (1-γ) <= v(z) <= ᾱ z^(1-γ) / (1-γ)`.
///
/// The upper constant is the frictionless `α_v`; the lower one is the value
/// of a simple buy-and-hold strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueBounds {
    pub lower_alpha: f64,
    pub upper_alpha: f64,
    pub theta: f64,
    pub gamma: f64,
}

pub fn lower_alpha(params: &ModelParams) -> Result<f64> {
    let p = params;
    let omg = 1.0 - p.gamma;
    let denom = p.rho + (p.delta - p.ell * p.lambda_2) * (1.0 - p.beta) * omg;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "lower-bound constant has nonpositive denominator {denom}"
        )));
    }
    let num = p.beta.powf(p.beta * omg) * (1.0 - p.beta).powf((1.0 - p.beta) * omg) * p.r.powf(p.beta * omg);
    Ok(num / denom)
}

impl ValueBounds {
    pub fn new(params: &ModelParams, ntc: &NoTcSolution) -> Result<Self> {
        if !(params.gamma < 1.0) {
            return Err(Error::Domain(format!(
                "value bounds need gamma < 1, got {}",
                params.gamma
            )));
        }
        Ok(Self {
            lower_alpha: lower_alpha(params)?,
            upper_alpha: ntc.alpha_v,
            theta: params.theta,
            gamma: params.gamma,
        })
    }

    pub fn lower(&self, z: f64) -> f64 {
        let omg = 1.0 - self.gamma;
        self.lower_alpha / omg * (z - self.theta).max(0.0).powf(omg)
    }

    pub fn upper(&self, z: f64) -> f64 {
        let omg = 1.0 - self.gamma;
        self.upper_alpha / omg * z.max(0.0).powf(omg)
    }

    pub fn at(&self, z: f64) -> (f64, f64) {
        (self.lower(z), self.upper(z))
    }
}

/// `(lower, upper)` bounds of `v(z)`.
pub fn bounds(z: f64, params: &ModelParams, ntc: &NoTcSolution) -> Result<(f64, f64)> {
    if z < params.theta {
        return Err(Error::Domain(format!(
            "z = {z} lies outside the solvency region z >= {}",
            params.theta
        )));
    }
    Ok(ValueBounds::new(params, ntc)?.at(z))
}

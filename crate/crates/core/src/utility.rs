//! Cobb-Douglas CRRA utility over perishable consumption and durable stock.

use crate::error::{Error, Result};

/// `u(c, k) = (c^β k^(1-β))^(1-γ) / (1-γ)`.
///
/// On the boundary `c·k = 0` the value is the analytic limit `0` when
/// `γ < 1`; for `γ > 1` the utility diverges to `-∞` and a domain error is
/// returned instead.
pub fn utility(c: f64, k: f64, beta: f64, gamma: f64) -> Result<f64> {
    if !(c >= 0.0 && k >= 0.0) {
        return Err(Error::Domain(format!(
            "utility needs c >= 0 and k >= 0, got c = {c}, k = {k}"
        )));
    }
    let one_minus_gamma = 1.0 - gamma;
    if c == 0.0 || k == 0.0 {
        return if gamma < 1.0 {
            Ok(0.0)
        } else {
            Err(Error::UtilityDomain { c, k, gamma })
        };
    }
    let log_bundle = beta * c.ln() + (1.0 - beta) * k.ln();
    Ok((one_minus_gamma * log_bundle).exp() / one_minus_gamma)
}

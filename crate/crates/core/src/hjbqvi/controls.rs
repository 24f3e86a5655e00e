use rayon::prelude::*;
use serde::Serialize;

use super::generator::{Controls, Generator, PolicyField};
use crate::error::{Error, Result};
use crate::optimize::golden_section_max;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlOptions {
    /// Argument tolerance of the golden-section searches.
    pub tol: f64,
    /// Coordinate-wise passes over `(ĉ, π̂₁, q̂)`.
    pub passes: usize,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            passes: 2,
        }
    }
}

/// Distance kept from the strict solvency constraints, relative to `1 + z`.
const MARGIN: f64 = 1e-9;

/// Maximizes the supremand at interior node `i` over feasible controls,
/// starting from `start`. Returns the controls and the supremand value.
pub fn optimize_controls(
    gen: &Generator<'_>,
    v: &[f64],
    i: usize,
    start: Controls,
    opts: &ControlOptions,
) -> Result<(Controls, f64)> {
    let n = gen.grid.len();
    if i == 0 || i + 1 >= n {
        return Err(Error::Domain(format!(
            "controls are optimized at interior nodes only, got {i}"
        )));
    }
    let p = &gen.params;
    let z = gen.grid.nodes[i];
    let scale = 1.0 + z;

    let pi_bound = 10.0 * scale.max(start.pi1_hat.abs());
    let pi_hi = if p.lambda_1 > 0.0 {
        let cap = (z - gen.grid.theta) / p.eta * (1.0 - MARGIN);
        if cap <= -pi_bound {
            return Err(Error::Infeasible(format!("no feasible risky holding at z = {z}")));
        }
        pi_bound.min(cap)
    } else {
        pi_bound
    };
    let pi_lo = -pi_bound;

    let q_lo = (p.ell + gen.grid.theta - z + MARGIN * scale).max(0.0);
    let q_hi = q_lo + 2.0 * p.ell;

    let mut ctl = Controls {
        c_hat: start.c_hat.max(0.0),
        pi1_hat: start.pi1_hat.clamp(pi_lo, pi_hi),
        q_hat: start.q_hat.clamp(q_lo, q_hi),
    };
    let eval = |c: &Controls| gen.supremand(i, c, v);
    let mut best;

    for _ in 0..opts.passes.max(1) {
        ctl.c_hat = best_consumption(gen, v, i, &ctl);
        best = eval(&ctl);

        let (pi, value) = golden_section_max(
            |x| eval(&Controls { pi1_hat: x, ..ctl }),
            pi_lo,
            pi_hi,
            opts.tol,
        );
        if value >= best {
            ctl.pi1_hat = pi;
            best = value;
        }

        if p.lambda_2 > 0.0 {
            let (q, value) = golden_section_max(
                |x| eval(&Controls { q_hat: x, ..ctl }),
                q_lo,
                q_hi,
                opts.tol,
            );
            if value >= best {
                ctl.q_hat = q;
            }
        } else {
            ctl.q_hat = q_lo;
        }
    }
    ctl.c_hat = best_consumption(gen, v, i, &ctl);
    best = eval(&ctl);
    if !gen.feasible(z, &ctl) {
        return Err(Error::Infeasible(format!("no feasible control at z = {z}")));
    }
    Ok((ctl, best))
}

/// Closed-form consumption given the other two controls.
///
/// The upwind direction depends on the sign of the drift, which decreases
/// with `ĉ`, so the first-order condition is solved separately on the
/// forward-difference range `ĉ <= b₀` and on the backward-difference range
/// `ĉ >= b₀`, and the better candidate is kept.
fn best_consumption(gen: &Generator<'_>, v: &[f64], i: usize, ctl: &Controls) -> f64 {
    let h = gen.grid.h;
    let z = gen.grid.nodes[i];
    let beta = gen.params.beta;
    let exponent = 1.0 / (gen.beta_bar - 1.0);
    let c_max = 100.0 * (1.0 + z);
    let b0 = gen.drift(z, &Controls { c_hat: 0.0, ..*ctl });
    let forward = (v[i + 1] - v[i]) / h;
    let backward = (v[i] - v[i - 1]) / h;

    let foc = |slope: f64, lo: f64, hi: f64| {
        if slope > 0.0 {
            (slope / beta).powf(exponent).clamp(lo, hi)
        } else {
            hi
        }
    };
    let split = b0.clamp(0.0, c_max);
    let mut candidates = [foc(backward, split, c_max), f64::NAN];
    if split > 0.0 {
        candidates[1] = foc(forward, 0.0, split);
    }
    let mut best = (candidates[0], f64::NEG_INFINITY);
    for c in candidates.into_iter().filter(|c| !c.is_nan()) {
        let value = gen.supremand(i, &Controls { c_hat: c, ..*ctl }, v);
        if value > best.1 {
            best = (c, value);
        }
    }
    best.0
}

/// Optimizes controls at every interior node in parallel, warm-started
/// from `warm`. Node 0 keeps zero controls; the last node copies its
/// neighbour.
pub fn optimize_policy(
    gen: &Generator<'_>,
    v: &[f64],
    warm: &PolicyField,
    opts: &ControlOptions,
) -> Result<PolicyField> {
    let n = gen.grid.len();
    let interior: Vec<Controls> = (1..n - 1)
        .into_par_iter()
        .map(|i| optimize_controls(gen, v, i, warm.at(i), opts).map(|(c, _)| c))
        .collect::<Result<_>>()?;
    let mut controls = Vec::with_capacity(n);
    controls.push(Controls::default());
    controls.extend_from_slice(&interior);
    controls.push(interior[interior.len() - 1]);
    let mut field = PolicyField::from_controls(controls);
    field.trade_flag = warm.trade_flag.clone();
    Ok(field)
}

use arrayvec::ArrayVec;
use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform grid on `[θ, z_max]` in transformed wealth `z = x / (k p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub theta: f64,
    pub z_max: f64,
    pub h: f64,
    pub nodes: Vec<f64>,
}

/// Interpolation stencil: at most two `(node, weight)` pairs.
pub type Stencil = ArrayVec<(usize, f64), 2>;

impl Grid {
    pub fn uniform(theta: f64, z_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("grid needs at least 3 nodes, got {n}")));
        }
        if !(theta >= 0.0 && z_max > theta && z_max.is_finite()) {
            return Err(Error::Domain(format!(
                "grid needs 0 <= theta < z_max, got theta = {theta}, z_max = {z_max}"
            )));
        }
        let h = (z_max - theta) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| theta + h * i as f64).collect();
        nodes[n - 1] = z_max;
        Ok(Self {
            theta,
            z_max,
            h,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weights expressing `v(target)` through nodal values.
    ///
    /// Inside the grid this is linear interpolation (a convex combination).
    /// Left of `θ` the value is `v(θ) = 0`. Right of `z_max` the value is
    /// continued with the intervention shape `(z - θ)^(1-γ)` scaled from the
    /// last node, which keeps the weight nonnegative.
    pub fn stencil(&self, target: f64, gamma: f64) -> Stencil {
        let n = self.len();
        let mut out = Stencil::new();
        if target <= self.theta {
            out.push((0, 1.0));
        } else if target >= self.z_max {
            let scale = ((target - self.theta) / (self.z_max - self.theta)).powf(1.0 - gamma);
            out.push((n - 1, scale));
        } else {
            let j = (((target - self.theta) / self.h).floor() as usize).min(n - 2);
            let w = ((target - self.nodes[j]) / self.h).clamp(0.0, 1.0);
            out.push((j, 1.0 - w));
            out.push((j + 1, w));
        }
        out
    }

    /// Linear interpolation of nodal values, clamped to the end values.
    pub fn interpolate(&self, values: &[f64], z: f64) -> f64 {
        let n = self.len();
        if z <= self.theta {
            return values[0];
        }
        if z >= self.z_max {
            return values[n - 1];
        }
        let j = (((z - self.theta) / self.h).floor() as usize).min(n - 2);
        let w = ((z - self.nodes[j]) / self.h).clamp(0.0, 1.0);
        (1.0 - w) * values[j] + w * values[j + 1]
    }
}

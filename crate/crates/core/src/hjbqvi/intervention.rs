use serde::Serialize;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Result of applying the intervention operator to a value vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Intervention {
    /// `Mv(z) = (z - θ)^(1-γ) M` at every node.
    pub values: Vec<f64>,
    /// `M = max z^(γ-1) v(z)` over the grid.
    pub m: f64,
    /// Index of the maximizer (smallest on ties).
    pub star_index: usize,
    /// Restock target `z*`.
    pub z_star: f64,
}

/// Value of trading the durable good immediately: sell at cost `θ k p`,
/// then restock so that transformed wealth becomes `z*`.
pub fn intervention(grid: &Grid, v: &[f64], gamma: f64) -> Result<Intervention> {
    if v.len() != grid.len() {
        return Err(Error::Domain(format!(
            "value vector has {} entries, grid has {}",
            v.len(),
            grid.len()
        )));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::Domain(
            "intervention operator is degenerate for v = 0".into(),
        ));
    }
    let mut m = f64::NEG_INFINITY;
    let mut star_index = 0;
    for (i, (&z, &value)) in grid.nodes.iter().zip(v).enumerate() {
        // 0^(γ-1) * 0 is taken to be 0.
        let scaled = if value == 0.0 { 0.0 } else { z.powf(gamma - 1.0) * value };
        if scaled > m {
            m = scaled;
            star_index = i;
        }
    }
    let values = grid
        .nodes
        .iter()
        .map(|&z| (z - grid.theta).powf(1.0 - gamma) * m)
        .collect();
    Ok(Intervention {
        values,
        m,
        star_index,
        z_star: grid.nodes[star_index],
    })
}

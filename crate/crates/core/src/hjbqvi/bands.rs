use serde::Serialize;

use super::grid::Grid;
use super::intervention::intervention;
use crate::error::{Error, Result};

/// The no-trading interval `[z_low, z_high]` and the restock target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradingBands {
    pub z_low: f64,
    pub z_high: f64,
    pub z_star: f64,
    pub m: f64,
    pub low_index: usize,
    pub high_index: usize,
    pub star_index: usize,
}

impl TradingBands {
    pub fn contains(&self, z: f64) -> bool {
        z >= self.z_low && z <= self.z_high
    }
}

/// Nodewise excess value `v - Mv`.
pub fn excess(v: &[f64], mv: &[f64]) -> Vec<f64> {
    v.iter().zip(mv).map(|(a, b)| a - b).collect()
}

/// The maximal run of nodes with `v - Mv > tol`. It must be a single
/// contiguous interval.
pub fn extract_bands(grid: &Grid, v: &[f64], mv: &[f64], gamma: f64, tol: f64) -> Result<TradingBands> {
    if v.len() != grid.len() || mv.len() != grid.len() {
        return Err(Error::Domain("value vectors do not match the grid".into()));
    }
    let inside: Vec<usize> = (0..v.len()).filter(|&i| v[i] - mv[i] > tol).collect();
    let (Some(&low), Some(&high)) = (inside.first(), inside.last()) else {
        return Err(Error::Zone(format!(
            "degenerate zone: v - Mv <= {tol:e} at every node"
        )));
    };
    if high - low + 1 != inside.len() {
        let gap = inside.windows(2).find(|w| w[1] != w[0] + 1).map(|w| w[0] + 1).unwrap_or(low);
        return Err(Error::Zone(format!(
            "not a single interval: excess drops to <= {tol:e} at z = {} inside [{}, {}]",
            grid.nodes[gap], grid.nodes[low], grid.nodes[high]
        )));
    }
    let iv = intervention(grid, v, gamma)?;
    Ok(TradingBands {
        z_low: grid.nodes[low],
        z_high: grid.nodes[high],
        z_star: iv.z_star,
        m: iv.m,
        low_index: low,
        high_index: high,
        star_index: iv.star_index,
    })
}

//! Independent oracles for testing the solvers: an exhaustive
//! complementarity-problem solver built on dense LU, and generators of
//! random M-matrix problems.
//!
//! The `acceptance` integration test of this crate runs the full acceptance
//! suite.

use dic_core::hjbqvi::{CsrMatrix, LcpProblem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Dense LCP `A v - b >= 0`, `v - u >= 0`, `(A v - b)(v - u) = 0`.
#[derive(Debug, Clone)]
pub struct DenseLcp {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub u: Vec<f64>,
}

impl DenseLcp {
    pub fn to_problem(&self) -> LcpProblem {
        LcpProblem {
            a: CsrMatrix::from_dense(&self.a),
            b: self.b.clone(),
            u: self.u.clone(),
        }
    }
}

/// Strictly diagonally dominant matrix with nonpositive off-diagonal
/// entries, each present with probability `density`.
pub fn random_m_matrix(rng: &mut impl Rng, n: usize, density: f64) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        let mut off = 0.0;
        for (j, entry) in row.iter_mut().enumerate() {
            if i != j && rng.gen::<f64>() < density {
                *entry = -rng.gen_range(0.0..1.0);
                off -= *entry;
            }
        }
        row[i] = off + rng.gen_range(0.1..2.0);
    }
    a
}

/// Symmetric strictly diagonally dominant M-matrix, hence positive
/// definite; over-relaxation converges for every omega in (0, 2).
pub fn random_symmetric_m_matrix(rng: &mut impl Rng, n: usize, density: f64) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < density {
                let w = -rng.gen_range(0.0..1.0);
                a[i][j] = w;
                a[j][i] = w;
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| -a[i][j]).sum();
        a[i][i] = off + rng.gen_range(0.1..2.0);
    }
    a
}

fn with_random_data(rng: &mut impl Rng, a: Vec<Vec<f64>>) -> DenseLcp {
    let n = a.len();
    DenseLcp {
        a,
        b: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        u: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

pub fn random_lcp(rng: &mut impl Rng, n: usize) -> DenseLcp {
    let a = random_m_matrix(rng, n, 0.5);
    with_random_data(rng, a)
}

pub fn random_symmetric_lcp(rng: &mut impl Rng, n: usize) -> DenseLcp {
    let a = random_symmetric_m_matrix(rng, n, 0.5);
    with_random_data(rng, a)
}

/// Tries every active set (nodes pinned to the obstacle) and returns the
/// solution of the first one that satisfies all LCP conditions to `tol`.
/// Exponential in `n`; meant for `n <= 12`. Obstacles must be finite.
pub fn brute_force_lcp(lcp: &DenseLcp, tol: f64) -> Option<Vec<f64>> {
    let n = lcp.b.len();
    assert!(n <= 20, "brute force over 2^{n} active sets");
    let a = DMatrix::from_fn(n, n, |i, j| lcp.a[i][j]);
    for mask in 0u32..(1 << n) {
        let active: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let mut v = lcp.u.clone();
        if !free.is_empty() {
            // A_FF v_F = b_F - A_FA u_A
            let m = free.len();
            let aff = DMatrix::from_fn(m, m, |r, c| a[(free[r], free[c])]);
            let rhs = DVector::from_fn(m, |r, _| {
                let i = free[r];
                lcp.b[i] - (0..n).filter(|&j| active[j]).map(|j| a[(i, j)] * lcp.u[j]).sum::<f64>()
            });
            let Some(sol) = aff.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                v[i] = sol[r];
            }
        }
        let av = &a * DVector::from_column_slice(&v);
        let ok = (0..n).all(|i| {
            let pde = av[i] - lcp.b[i];
            let gap = v[i] - lcp.u[i];
            pde >= -tol && gap >= -tol && (pde * gap).abs() <= tol * (1.0 + pde.abs() + gap.abs())
        });
        if ok {
            return Some(v);
        }
    }
    None
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

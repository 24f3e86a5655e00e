use serde::Serialize;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with an index to each diagonal entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix from per-row `(col, value)` lists. Duplicate
    /// columns are summed; every row must contain its diagonal.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), n, "expected {n} rows");
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let start = cols.len();
            for (j, w) in row {
                assert!(j < n, "column {j} out of range");
                if cols.len() > start && cols[cols.len() - 1] == j {
                    *values.last_mut().unwrap() += w;
                } else {
                    cols.push(j);
                    values.push(w);
                }
            }
            let d = (start..cols.len())
                .find(|&k| cols[k] == i)
                .unwrap_or_else(|| panic!("row {i} has no diagonal entry"));
            diag.push(d);
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            values,
            diag,
        }
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let rows = a
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|&(j, &w)| w != 0.0 || j == i)
                    .map(|(j, &w)| (j, w))
                    .collect()
            })
            .collect();
        Self::from_rows(n, rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.values[self.diag[i]]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, w)| w)
    }

    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        self.row(i).map(|(j, w)| w * v[j]).sum()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row_dot(i, v)).collect()
    }

    /// First off-diagonal entry above `tol`, as `(row, col, value)`.
    pub fn positive_off_diagonal(&self, tol: f64) -> Option<(usize, usize, f64)> {
        (0..self.n).find_map(|i| {
            self.row(i)
                .find(|&(j, w)| j != i && w > tol)
                .map(|(j, w)| (i, j, w))
        })
    }
}

/// `A v >= b`, `v >= u`, `(A v - b)ᵀ(v - u) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcpProblem {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsorOptions {
    pub omega: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for PsorOptions {
    fn default() -> Self {
        Self {
            omega: 1.2,
            tol: 1e-10,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsorReport {
    pub solution: Vec<f64>,
    pub sweeps: usize,
    /// Sup-norm change of the final sweep.
    pub last_change: f64,
}

/// Projected SOR: Gauss-Seidel sweeps with relaxation `ω`, each component
/// projected onto the obstacle, until a sweep changes no component by more
/// than `tol`.
pub fn psor_solve(lcp: &LcpProblem, init: &[f64], opts: &PsorOptions) -> Result<PsorReport> {
    let n = lcp.a.n();
    if lcp.b.len() != n || lcp.u.len() != n || init.len() != n {
        return Err(Error::Domain("LCP dimensions do not match".into()));
    }
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(Error::Domain(format!(
            "relaxation parameter must lie in (0, 2), got {}",
            opts.omega
        )));
    }
    if let Some(i) = (0..n).find(|&i| !(lcp.a.diag(i) > 0.0)) {
        return Err(Error::Domain(format!("nonpositive diagonal in row {i}")));
    }
    let mut v = init.to_vec();
    let mut history = Vec::new();
    for sweep in 1..=opts.max_sweeps {
        let mut change: f64 = 0.0;
        for k in 0..n {
            let residual = lcp.b[k] - lcp.a.row_dot(k, &v);
            let w = v[k] + opts.omega / lcp.a.diag(k) * residual;
            let next = w.max(lcp.u[k]);
            change = change.max((next - v[k]).abs());
            v[k] = next;
        }
        if !change.is_finite() {
            return Err(Error::Domain(format!("PSOR diverged at sweep {sweep}")));
        }
        if change < opts.tol {
            return Ok(PsorReport {
                solution: v,
                sweeps: sweep,
                last_change: change,
            });
        }
        if sweep % 1000 == 0 {
            history.push(change);
        }
        if sweep == opts.max_sweeps {
            return Err(Error::NoConvergence {
                what: "PSOR",
                iterations: sweep,
                residual: change,
                history,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "PSOR",
        iterations: 0,
        residual: f64::INFINITY,
        history,
    })
}

/// Complementarity residuals of a candidate solution: the most negative
/// entries of `Av - b` and `v - u`, and the largest `|min(Av-b, v-u)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LcpResiduals {
    pub min_pde: f64,
    pub min_obstacle: f64,
    pub max_complementarity: f64,
}

pub fn lcp_residuals(lcp: &LcpProblem, v: &[f64]) -> LcpResiduals {
    let av = lcp.a.mul_vec(v);
    let mut out = LcpResiduals {
        min_pde: f64::INFINITY,
        min_obstacle: f64::INFINITY,
        max_complementarity: 0.0,
    };
    for k in 0..v.len() {
        let pde = av[k] - lcp.b[k];
        let obstacle = v[k] - lcp.u[k];
        out.min_pde = out.min_pde.min(pde);
        out.min_obstacle = out.min_obstacle.min(obstacle);
        out.max_complementarity = out.max_complementarity.max(pde.min(obstacle).abs());
    }
    out
}

/// Solves `A x = b` for an M-matrix by splitting `A = T + N`, where `T` is
/// the tridiagonal part, and iterating `T x⁺ = b - N x` with the Thomas
/// algorithm. The non-local entries come from jump terms, whose weight is
/// small against the diagonal, so the iteration contracts quickly.
pub fn solve_tridiagonal_splitting(
    a: &CsrMatrix,
    b: &[f64],
    init: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.n();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        for (j, w) in a.row(i) {
            if j + 1 == i {
                lower[i] = w;
            } else if j == i {
                diag[i] = w;
            } else if j == i + 1 {
                upper[i] = w;
            }
        }
    }
    let mut x = init.to_vec();
    let mut rhs = vec![0.0; n];
    let mut history = Vec::new();
    for iter in 1..=max_iter {
        for i in 0..n {
            let far: f64 = a
                .row(i)
                .filter(|&(j, _)| j + 1 < i || j > i + 1)
                .map(|(j, w)| w * x[j])
                .sum();
            rhs[i] = b[i] - far;
        }
        let next = thomas(&lower, &diag, &upper, &rhs)?;
        let change = next
            .iter()
            .zip(&x)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        x = next;
        history.push(change);
        if change < tol {
            return Ok((x, iter));
        }
    }
    Err(Error::NoConvergence {
        what: "tridiagonal splitting",
        iterations: max_iter,
        residual: history.last().copied().unwrap_or(f64::INFINITY),
        history,
    })
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    for i in 0..n {
        if i > 0 {
            denom = diag[i] - lower[i] * c[i - 1];
        }
        if denom.abs() < f64::MIN_POSITIVE {
            return Err(Error::Domain(format!("singular tridiagonal system at row {i}")));
        }
        c[i] = upper[i] / denom;
        d[i] = if i == 0 {
            rhs[0] / denom
        } else {
            (rhs[i] - lower[i] * d[i - 1]) / denom
        };
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(a: &[Vec<f64>], b: &[f64], u: &[f64]) -> LcpProblem {
        LcpProblem {
            a: CsrMatrix::from_dense(a),
            b: b.to_vec(),
            u: u.to_vec(),
        }
    }

    #[test]
    fn diagonal_lcp_with_one_active_constraint() {
        let lcp = problem(&[vec![2.0, 0.0], vec![0.0, 2.0]], &[2.0, 6.0], &[2.0, 2.0]);
        let out = psor_solve(&lcp, &[0.0, 0.0], &PsorOptions::default()).unwrap();
        assert!((out.solution[0] - 2.0).abs() < 1e-12);
        assert!((out.solution[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn no_obstacle_reduces_to_linear_solve() {
        let a = vec![
            vec![4.0, -1.0, 0.0],
            vec![-1.0, 4.0, -1.0],
            vec![0.0, -1.0, 4.0],
        ];
        let lcp = problem(&a, &[1.0, 2.0, 3.0], &[f64::NEG_INFINITY; 3]);
        let out = psor_solve(&lcp, &[0.0; 3], &PsorOptions::default()).unwrap();
        let av = lcp.a.mul_vec(&out.solution);
        for (x, y) in av.iter().zip(&lcp.b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn obstacle_binds_everywhere_for_negative_rhs() {
        let a = vec![vec![3.0, -1.0], vec![-1.0, 3.0]];
        let lcp = problem(&a, &[-100.0, -100.0], &[0.5, 1.5]);
        let out = psor_solve(&lcp, &[0.0; 2], &PsorOptions::default()).unwrap();
        assert_eq!(out.solution, vec![0.5, 1.5]);
    }

    #[test]
    fn sweep_limit_reports_no_convergence() {
        let a = vec![vec![1.0, -0.999], vec![-0.999, 1.0]];
        let lcp = problem(&a, &[1.0, 1.0], &[f64::NEG_INFINITY; 2]);
        let opts = PsorOptions {
            max_sweeps: 5,
            ..PsorOptions::default()
        };
        assert!(matches!(
            psor_solve(&lcp, &[0.0; 2], &opts),
            Err(Error::NoConvergence { iterations: 5, .. })
        ));
        let bad = PsorOptions {
            omega: 2.0,
            ..PsorOptions::default()
        };
        assert!(psor_solve(&lcp, &[0.0; 2], &bad).is_err());
    }

    #[test]
    fn csr_merges_duplicates() {
        let m = CsrMatrix::from_rows(2, vec![vec![(1, -1.0), (0, 2.0), (1, -0.5)], vec![(1, 1.0)]]);
        assert_eq!(m.get(0, 1), -1.5);
        assert_eq!(m.diag(0), 2.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert!(m.positive_off_diagonal(0.0).is_none());
    }

    #[test]
    fn splitting_matches_dense_solution() {
        // Tridiagonal part plus a far entry in each interior row.
        let n = 6;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = 3.0;
            if i > 0 {
                a[i][i - 1] = -1.0;
            }
            if i + 1 < n {
                a[i][i + 1] = -1.0;
            }
        }
        a[1][4] = -0.3;
        a[4][0] = -0.2;
        let m = CsrMatrix::from_dense(&a);
        let b = vec![1.0, 0.0, 2.0, -1.0, 0.5, 3.0];
        let (x, _) = solve_tridiagonal_splitting(&m, &b, &[0.0; 6], 1e-14, 1000).unwrap();
        let ax = m.mul_vec(&x);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}

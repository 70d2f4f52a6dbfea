//! Dense two-phase simplex method.
//!
//! Solves `max c^T x` subject to `A x = b`, `x >= 0`. Meant for problems with
//! a handful of rows and up to a few thousand columns; pivoting uses Bland's
//! rule so degenerate problems terminate.

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("pivot limit reached")]
    PivotLimit,
    #[error("constraint matrix has inconsistent dimensions")]
    Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    /// Each row holds the coefficients followed by the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<(), LpError> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| {
                let reduced =
                    cost[j] - self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[j]).sum::<f64>();
                reduced > PIVOT_EPS
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][j];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - PIVOT_EPS
                                || (ratio <= lratio + PIVOT_EPS && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, j);
        }
        Err(LpError::PivotLimit)
    }
}

/// Maximizes `c^T x` subject to `a x = b`, `x >= 0`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution, LpError> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(LpError::Shape);
    }
    let ncols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (r, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        let mut t: Vec<f64> = row.iter().map(|v| sign * v).collect();
        t.extend((0..m).map(|k| if k == r { 1.0 } else { 0.0 }));
        t.push(sign * rhs);
        rows.push(t);
    }
    let mut tab = Tableau { rows, basis: (n..n + m).collect(), ncols };

    // phase one: drive the artificial variables to zero
    let mut phase1 = vec![0.0; ncols];
    phase1[n..].iter_mut().for_each(|v| *v = -1.0);
    tab.optimize(&phase1, ncols)?;
    let scale = 1.0 + b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let infeas: f64 = (0..m).filter(|&r| tab.basis[r] >= n).map(|r| tab.rhs(r)).sum();
    if infeas > 1e-9 * scale {
        return Err(LpError::Infeasible);
    }
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| tab.rows[r][j].abs() > 1e-9) {
                Some(j) => tab.pivot(r, j),
                None => {
                    // redundant equality
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut cost = c.to_vec();
    cost.resize(ncols, 0.0);
    tab.optimize(&cost, n)?;
    let mut x = vec![0.0; n];
    for (r, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.rhs(r);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective })
}

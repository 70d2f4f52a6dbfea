//! Empirical likelihood with vector-valued constraints.
//!
//! The dual variable `lambda` maximizes the concave map
//! `F(lambda) = sum_i log(1 + lambda . h_i)` on the open polytope where every
//! `1 + lambda . h_i > 0`. Starting from `lambda = 0`, damped Newton steps are
//! halved until they stay strictly inside the domain and pass an Armijo test.
//! The weights are `w_i = 1 / (n (1 + lambda . h_i))`.

use nalgebra::{DMatrix, DVector};

use crate::el::Sample;
use crate::lp;
use crate::{Error, Result};

const MAX_ITER: usize = 200;
const FEAS_EPS: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;

/// `n` constraint vectors of common dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSample {
    d: usize,
    data: Vec<f64>,
}

impl VectorSample {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("constraint vectors differ in dimension".into()));
        }
        Self::from_flat(d, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || data.is_empty() || !data.len().is_multiple_of(d) {
            return Err(Error::InvalidInput("need at least one vector of dimension >= 1".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("constraint vectors must be finite".into()));
        }
        Ok(Self { d, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn max_norm(&self) -> f64 {
        self.rows().map(norm).fold(0.0, f64::max)
    }

    /// Applies `h_i -> A h_i` for a `d x d` matrix given row-major.
    pub fn transform(&self, a: &[f64]) -> Result<Self> {
        let d = self.d;
        if a.len() != d * d {
            return Err(Error::InvalidInput("transform must be d x d".into()));
        }
        let data =
            self.rows().flat_map(|h| (0..d).map(move |r| (0..d).map(|c| a[r * d + c] * h[c]).sum::<f64>())).collect();
        Self::from_flat(d, data)
    }

    fn rank(&self) -> usize {
        let m = DMatrix::from_row_slice(self.len(), self.d, &self.data);
        let sv = m.singular_values();
        let top = sv.amax();
        sv.iter().filter(|&&s| s > 1e-10 * top.max(f64::MIN_POSITIVE)).count()
    }
}

impl From<&Sample> for VectorSample {
    fn from(s: &Sample) -> Self {
        Self { d: 1, data: s.values().to_vec() }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest `s` such that some weights with `w_i >= s`, `sum w = 1` and
/// `sum w_i h_i = 0` exist; `None` when even `s = 0` is infeasible.
fn interior_margin(sample: &VectorSample) -> Option<f64> {
    let n = sample.len();
    let d = sample.dim();
    // w_i = u_i + s with u_i >= 0, s >= 0
    let mut a = Vec::with_capacity(d + 1);
    for k in 0..d {
        let mut row: Vec<f64> = sample.rows().map(|h| h[k]).collect();
        row.push(row.iter().sum());
        a.push(row);
    }
    let mut ones = vec![1.0; n];
    ones.push(n as f64);
    a.push(ones);
    let mut b = vec![0.0; d];
    b.push(1.0);
    let mut c = vec![0.0; n];
    c.push(1.0);
    lp::maximize(&c, &a, &b).ok().map(|sol| sol.objective)
}

/// `true` iff the origin lies in the interior of the convex hull of the
/// constraint vectors, and the vectors span all `d` dimensions.
pub fn check_feasibility_multi(sample: &VectorSample) -> bool {
    if sample.rank() < sample.dim() {
        return false;
    }
    let n = sample.len() as f64;
    interior_margin(sample).is_some_and(|s| n * s > 1e-9)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSolution {
    pub lambda_hat: Vec<f64>,
    pub weights: Vec<f64>,
    pub log_likelihood: f64,
    /// `2 sum_i log(1 + lambda . h_i)`
    pub wilks: f64,
    pub max_weight_index: usize,
    pub iterations: usize,
    /// `F(lambda)` at every accepted iterate, starting with `F(0) = 0`.
    pub objective_trace: Vec<f64>,
}

fn objective(sample: &VectorSample, lambda: &[f64]) -> Option<f64> {
    let mut f = 0.0;
    for h in sample.rows() {
        let x = dot(lambda, h);
        if 1.0 + x < FEAS_EPS {
            return None;
        }
        f += if x.abs() < 0.5 { x.ln_1p() } else { (1.0 + x).ln() };
    }
    Some(f)
}

/// `F(lambda + delta) - F(lambda)`, summed as `log1p` of the relative change
/// of each term so that it stays accurate when the change is far below the
/// rounding level of `F` itself.
fn increment(sample: &VectorSample, lambda: &[f64], delta: &[f64]) -> Option<f64> {
    let mut gain = 0.0;
    for h in sample.rows() {
        let base = 1.0 + dot(lambda, h);
        let change = dot(delta, h);
        if base + change < FEAS_EPS {
            return None;
        }
        gain += (change / base).ln_1p();
    }
    Some(gain)
}

/// Dual Newton solve for vector constraints.
pub fn solve_multi(sample: &VectorSample, tol: f64) -> Result<MultiSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let d = sample.dim();
    let rank = sample.rank();
    if rank < d {
        return Err(Error::RankDeficient { rank, dim: d });
    }
    if !check_feasibility_multi(sample) {
        return Err(Error::Infeasible("origin is not interior to the convex hull".into()));
    }
    let n = sample.len();
    let target = tol * n as f64 * (1.0 + sample.max_norm());

    let mut lambda = vec![0.0; d];
    let mut f = 0.0;
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut polished = false;
    loop {
        let mut grad = DVector::<f64>::zeros(d);
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for h in sample.rows() {
            let inv = 1.0 / (1.0 + dot(&lambda, h));
            for r in 0..d {
                grad[r] += h[r] * inv;
                for c in 0..d {
                    hess[(r, c)] += h[r] * h[c] * inv * inv;
                }
            }
        }
        let converged = grad.norm() <= target;
        if converged && polished {
            break;
        }
        if iterations == MAX_ITER {
            return Err(Error::ConvergenceMulti { iterations, last: lambda });
        }
        iterations += 1;
        // hess holds the negated Hessian of F, positive definite on
        // full-rank data
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad.clone(),
        };
        if converged {
            // one full Newton step from inside the tolerance takes the
            // gradient down to rounding level
            polished = true;
            let delta: Vec<f64> = step.iter().copied().collect();
            match increment(sample, &lambda, &delta) {
                Some(gain) if gain >= 0.0 => {
                    for (l, d) in lambda.iter_mut().zip(&delta) {
                        *l += d;
                    }
                    f += gain;
                    trace.push(f);
                    continue;
                }
                _ => break,
            }
        }
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-30 {
            let delta: Vec<f64> = step.iter().map(|s| t * s).collect();
            if let Some(gain) = increment(sample, &lambda, &delta) {
                if gain >= ARMIJO * t * slope {
                    for (l, d) in lambda.iter_mut().zip(&delta) {
                        *l += d;
                    }
                    f += gain;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::ConvergenceMulti { iterations, last: lambda });
        }
        trace.push(f);
    }

    let nf = n as f64;
    let mut weights: Vec<f64> = sample.rows().map(|h| 1.0 / (nf * (1.0 + dot(&lambda, h)))).collect();
    // for large lambda the cancellation in 1 + lambda.h leaves a drift of
    // order |lambda| eps in the total
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let f_final = objective(sample, &lambda).unwrap_or(f);
    let max_weight_index = weights.iter().enumerate().fold(0, |best, (i, &w)| if w > weights[best] { i } else { best });
    Ok(MultiSolution {
        lambda_hat: lambda,
        weights,
        log_likelihood: -nf * nf.ln() - f_final,
        wilks: 2.0 * f_final,
        max_weight_index,
        iterations,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(rows: &[[f64; 2]]) -> VectorSample {
        VectorSample::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn feasibility_examples() {
        assert!(check_feasibility_multi(&vs(&[[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]])));
        assert!(!check_feasibility_multi(&vs(&[[1.0, 0.0], [2.0, 0.0], [1.0, 1.0]])));
        assert!(!check_feasibility_multi(&vs(&[[1.0, 0.0], [-1.0, 0.0]])));
        // origin on an edge of the hull
        assert!(!check_feasibility_multi(&vs(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])));
    }

    #[test]
    fn symmetric_cross() {
        let s = solve_multi(&vs(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]), 1e-12).unwrap();
        assert_eq!(s.lambda_hat, vec![0.0, 0.0]);
        assert_eq!(s.weights, vec![0.25; 4]);
    }

    #[test]
    fn triangle_closed_form() {
        let s = solve_multi(&vs(&[[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]]), 1e-12).unwrap();
        for (w, e) in s.weights.iter().zip([0.5, 0.25, 0.25]) {
            assert!((w - e).abs() < 1e-12);
        }
        assert!((s.lambda_hat[0] + 1.0 / 3.0).abs() < 1e-12);
        assert!(s.lambda_hat[1].abs() < 1e-12);
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            solve_multi(&vs(&[[1.0, 0.0], [-1.0, 0.0]]), 1e-12),
            Err(Error::RankDeficient { rank: 1, dim: 2 })
        ));
        assert!(matches!(solve_multi(&vs(&[[1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]), 1e-12), Err(Error::Infeasible(_))));
    }

    #[test]
    fn transform_applies_matrix() {
        let s = vs(&[[1.0, 2.0]]);
        let t = s.transform(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(t.row(0), &[2.0, 1.0]);
    }
}

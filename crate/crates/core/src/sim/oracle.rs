//! Brute-force primal solver for tiny instances.
//!
//! Maximizes the objective directly over `{w > 0, sum w = 1, sum w_i h_i = 0}`
//! without touching the dual. Feasible points are generated by enumerating
//! all solutions of the constraint system supported on at most `d + 1`
//! indices; strictly positive convex combinations of them are interior
//! starting points. From each start a Newton iteration runs in the null space
//! of the constraint matrix, with step halving to stay inside the positive
//! orthant and an Armijo test.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::multi::VectorSample;
use crate::sim::SeededStream;
use crate::{Error, Result};
use rand::Rng;

/// Largest sample size the oracle accepts.
pub const MAX_ORACLE_POINTS: usize = 8;

const STARTS: usize = 32;
const MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleObjective {
    /// `sum_i log w_i`
    LogLikelihood,
    /// `-sum_i w_i log w_i`
    Entropy,
}

impl OracleObjective {
    pub fn value(self, w: &[f64]) -> f64 {
        match self {
            OracleObjective::LogLikelihood => w.iter().map(|v| v.ln()).sum(),
            OracleObjective::Entropy => -w.iter().map(|v| v * v.ln()).sum::<f64>(),
        }
    }

    fn grad_hess(self, w: &[f64]) -> (DVector<f64>, DVector<f64>) {
        match self {
            OracleObjective::LogLikelihood => (
                DVector::from_iterator(w.len(), w.iter().map(|v| 1.0 / v)),
                DVector::from_iterator(w.len(), w.iter().map(|v| -1.0 / (v * v))),
            ),
            OracleObjective::Entropy => (
                DVector::from_iterator(w.len(), w.iter().map(|v| -(v.ln() + 1.0))),
                DVector::from_iterator(w.len(), w.iter().map(|v| -1.0 / v)),
            ),
        }
    }
}

/// Maximizes `objective` over the simplex intersected with `sum_i w_i h_i = 0`.
///
/// `tol` bounds the Newton decrement at termination. Fails with
/// [`Error::Infeasible`] when no strictly positive feasible weights exist.
pub fn primal_oracle(sample: &VectorSample, objective: OracleObjective, tol: f64) -> Result<Vec<f64>> {
    let n = sample.len();
    if n > MAX_ORACLE_POINTS {
        return Err(Error::InvalidInput(format!("oracle accepts at most {MAX_ORACLE_POINTS} points, got {n}")));
    }
    let d = sample.dim();
    let mut a = DMatrix::<f64>::zeros(d + 1, n);
    for i in 0..n {
        for (k, &v) in sample.row(i).iter().enumerate() {
            a[(k, i)] = v;
        }
        a[(d, i)] = 1.0;
    }
    let scale = 1.0 + sample.max_norm();

    let generators = feasible_generators(&a, scale);
    if generators.is_empty() {
        return Err(Error::Infeasible("no feasible weights".into()));
    }
    if let Some(i) = (0..n).find(|&i| generators.iter().all(|g| g[i] <= 0.0)) {
        return Err(Error::Infeasible(format!("weight {i} is zero at every feasible point")));
    }
    let basis = null_space(&a);

    let mut rng = SeededStream::new(0x05ee_d0e1, 0).rng();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in 0..STARTS {
        let mix: Vec<f64> = if start == 0 {
            vec![1.0; generators.len()]
        } else {
            (0..generators.len()).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect()
        };
        let total: f64 = mix.iter().sum();
        let mut w0 = vec![0.0; n];
        for (g, m) in generators.iter().zip(&mix) {
            for (wi, gi) in w0.iter_mut().zip(g) {
                *wi += m / total * gi;
            }
        }
        let w = newton_on_slice(w0, &basis, objective, tol);
        let f = objective.value(&w);
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, w));
        }
    }
    Ok(best.expect("at least one start").1)
}

/// Strictly positive solutions of `a w = e_last` supported on at most
/// `rows` indices.
fn feasible_generators(a: &DMatrix<f64>, scale: f64) -> Vec<Vec<f64>> {
    let (rows, n) = a.shape();
    let mut rhs = DVector::<f64>::zeros(rows);
    rhs[rows - 1] = 1.0;
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if support.len() > rows {
            continue;
        }
        let sub = DMatrix::from_fn(rows, support.len(), |r, c| a[(r, support[c])]);
        let Ok(x) = sub.clone().svd(true, true).solve(&rhs, 1e-13) else {
            continue;
        };
        let residual = (&sub * &x - &rhs).amax();
        if residual > 1e-11 * scale || x.iter().any(|&v| !(v > 1e-12)) {
            continue;
        }
        let mut w = vec![0.0; n];
        for (c, &i) in support.iter().enumerate() {
            w[i] = x[c];
        }
        out.push(w);
    }
    out
}

/// Orthonormal basis of the null space of `a`, one vector per column.
fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    let gram = a.transpose() * a;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.amax().max(1.0);
    let cols: Vec<usize> = (0..n).filter(|&j| eig.eigenvalues[j] <= 1e-10 * top).collect();
    DMatrix::from_fn(n, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])])
}

fn newton_on_slice(mut w: Vec<f64>, basis: &DMatrix<f64>, objective: OracleObjective, tol: f64) -> Vec<f64> {
    if basis.ncols() == 0 {
        return w;
    }
    let mut f = objective.value(&w);
    for _ in 0..MAX_ITER {
        let (grad, hess) = objective.grad_hess(&w);
        let gz = basis.transpose() * &grad;
        let neg_h = -(basis.transpose() * DMatrix::from_diagonal(&hess) * basis);
        let Some(chol) = neg_h.cholesky() else {
            break;
        };
        let dz = chol.solve(&gz);
        let decrement = gz.dot(&dz);
        if decrement <= tol * tol {
            break;
        }
        let dw = basis * dz;
        let mut t = 1.0;
        while w.iter().zip(dw.iter()).any(|(wi, di)| wi + t * di <= 0.0) {
            t *= 0.5;
        }
        let mut accepted = false;
        while t > 1e-30 {
            let trial: Vec<f64> = w.iter().zip(dw.iter()).map(|(wi, di)| wi + t * di).collect();
            let ft = objective.value(&trial);
            if ft >= f + 1e-4 * t * decrement - 4.0 * f64::EPSILON * f.abs() {
                w = trial;
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn univariate(h: &[f64]) -> VectorSample {
        VectorSample::from_flat(1, h.to_vec()).unwrap()
    }

    #[test]
    fn unique_feasible_point() {
        let w = primal_oracle(&univariate(&[-1.0, 2.0]), OracleObjective::LogLikelihood, 1e-12).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn three_point_log_likelihood() {
        let w = primal_oracle(&univariate(&[-1.0, 0.0, 2.0]), OracleObjective::LogLikelihood, 1e-12).unwrap();
        for (a, b) in w.iter().zip([4.0 / 9.0, 1.0 / 3.0, 2.0 / 9.0]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn three_point_entropy() {
        let w = primal_oracle(&univariate(&[-1.0, 0.0, 2.0]), OracleObjective::Entropy, 1e-12).unwrap();
        for (a, b) in w.iter().zip([0.435977, 0.346034, 0.217989]) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn infeasible_and_oversized_inputs() {
        assert!(matches!(
            primal_oracle(&univariate(&[1.0, 2.0]), OracleObjective::LogLikelihood, 1e-12),
            Err(Error::Infeasible(_))
        ));
        // origin on the hull boundary: the zero point carries all feasible mass
        assert!(matches!(
            primal_oracle(&univariate(&[0.0, 1.0]), OracleObjective::LogLikelihood, 1e-12),
            Err(Error::Infeasible(_))
        ));
        let big = univariate(&[-1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 2.0]);
        assert!(matches!(primal_oracle(&big, OracleObjective::LogLikelihood, 1e-12), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn bivariate_triangle() {
        let s = VectorSample::new(vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![0.5, 0.5]]).unwrap();
        let w = primal_oracle(&s, OracleObjective::LogLikelihood, 1e-12).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..2 {
            let m: f64 = (0..4).map(|i| w[i] * s.row(i)[k]).sum();
            assert!(m.abs() < 1e-12);
        }
    }
}

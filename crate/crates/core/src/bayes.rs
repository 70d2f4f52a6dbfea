//! Grid posterior with the empirical likelihood in place of a parametric
//! likelihood.
//!
//! On each grid point `theta` the constraint values `h(X_i, theta)` are
//! solved for the maximal log-likelihood `L_n(theta)` (`-inf` when the
//! constraint is infeasible). The posterior density is proportional to
//! `exp(L_n(theta) - max L_n) * prior(theta)` and normalized with the
//! trapezoid rule.

use rayon::prelude::*;

use crate::el::{self, Sample};
use crate::{Error, Result, DEFAULT_TOL};

pub const MIN_GRID_SIZE: usize = 16;
pub const DEFAULT_GRID_SIZE: usize = 401;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    theta: Vec<f64>,
    log_lik: Vec<f64>,
    prior: Vec<f64>,
    posterior: Vec<f64>,
}

/// `size` evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, size: usize) -> Result<Vec<f64>> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!("need finite lo < hi, got [{lo}, {hi}]")));
    }
    if size < 2 {
        return Err(Error::InvalidInput("a uniform grid needs at least two points".into()));
    }
    let span = hi - lo;
    let last = (size - 1) as f64;
    Ok((0..size).map(|i| if i + 1 == size { hi } else { lo + span * (i as f64) / last }).collect())
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// Posterior on `grid_size` uniform points over `[theta_lo, theta_hi]`.
pub fn posterior<H, P>(
    observations: &[f64],
    h: H,
    prior: P,
    theta_lo: f64,
    theta_hi: f64,
    grid_size: usize,
) -> Result<PosteriorGrid>
where
    H: Fn(f64, f64) -> f64 + Sync,
    P: Fn(f64) -> f64,
{
    if grid_size < MIN_GRID_SIZE {
        return Err(Error::InvalidInput(format!("grid needs at least {MIN_GRID_SIZE} points, got {grid_size}")));
    }
    posterior_on_grid(observations, h, prior, uniform_grid(theta_lo, theta_hi, grid_size)?)
}

/// Posterior on an arbitrary strictly increasing grid.
///
/// A single-point grid yields the point mass at that point.
pub fn posterior_on_grid<H, P>(observations: &[f64], h: H, prior: P, grid: Vec<f64>) -> Result<PosteriorGrid>
where
    H: Fn(f64, f64) -> f64 + Sync,
    P: Fn(f64) -> f64,
{
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("grid must be non-empty and strictly increasing".into()));
    }
    if observations.is_empty() {
        return Err(Error::InvalidInput("no observations".into()));
    }
    let prior_vals: Vec<f64> = grid.iter().map(|&t| prior(t)).collect();
    if let Some(i) = prior_vals.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidPrior(format!("prior({}) = {}", grid[i], prior_vals[i])));
    }
    if prior_vals.iter().all(|&p| p == 0.0) {
        return Err(Error::InvalidPrior("prior vanishes on the whole grid".into()));
    }

    let log_lik = grid
        .par_iter()
        .map(|&theta| {
            let sample = Sample::new(observations.iter().map(|&x| h(x, theta)).collect())?;
            Ok(el::solve(&sample, DEFAULT_TOL)?.log_likelihood)
        })
        .collect::<Result<Vec<f64>>>()?;

    let peak = log_lik
        .iter()
        .zip(&prior_vals)
        .filter(|&(l, &p)| l.is_finite() && p > 0.0)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Err(Error::DegeneratePosterior);
    }
    let unnormalized: Vec<f64> = log_lik
        .iter()
        .zip(&prior_vals)
        .map(|(&l, &p)| if l.is_finite() && p > 0.0 { (l - peak).exp() * p } else { 0.0 })
        .collect();

    let posterior = if grid.len() == 1 {
        vec![1.0]
    } else {
        let z = trapezoid(&grid, &unnormalized);
        if !(z > 0.0) {
            return Err(Error::DegeneratePosterior);
        }
        unnormalized.iter().map(|u| u / z).collect()
    };
    Ok(PosteriorGrid { theta: grid, log_lik, prior: prior_vals, posterior })
}

impl PosteriorGrid {
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn log_lik(&self) -> &[f64] {
        &self.log_lik
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Trapezoid integral of the posterior (1 up to rounding).
    pub fn integral(&self) -> f64 {
        if self.theta.len() == 1 {
            return self.posterior[0];
        }
        trapezoid(&self.theta, &self.posterior)
    }

    pub fn mean(&self) -> f64 {
        if self.theta.len() == 1 {
            return self.theta[0];
        }
        let tp: Vec<f64> = self.theta.iter().zip(&self.posterior).map(|(t, p)| t * p).collect();
        trapezoid(&self.theta, &tp)
    }

    /// Grid point of highest posterior density (first on ties).
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (i, &p) in self.posterior.iter().enumerate() {
            if p > self.posterior[best] {
                best = i;
            }
        }
        self.theta[best]
    }

    /// Posterior mass of `{theta : |theta - center| > radius}`, integrating the
    /// piecewise-linear interpolant of the grid density.
    pub fn tail_mass(&self, center: f64, radius: f64) -> f64 {
        let r = radius.max(0.0);
        let (ball_lo, ball_hi) = (center - r, center + r);
        if self.theta.len() == 1 {
            return if (self.theta[0] - center).abs() > r { 1.0 } else { 0.0 };
        }
        let mut mass = 0.0;
        for i in 0..self.theta.len() - 1 {
            let (a, b) = (self.theta[i], self.theta[i + 1]);
            let (pa, pb) = (self.posterior[i], self.posterior[i + 1]);
            let at = |x: f64| pa + (pb - pa) * (x - a) / (b - a);
            let piece = |x: f64, y: f64| if y > x { 0.5 * (y - x) * (at(x) + at(y)) } else { 0.0 };
            mass += piece(a, b.min(ball_lo)) + piece(a.max(ball_hi), b);
        }
        mass
    }
}

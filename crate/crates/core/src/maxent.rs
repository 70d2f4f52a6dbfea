//! Maximum-entropy weights under a moment constraint.
//!
//! Maximizing `-sum v_i log v_i` subject to `sum v_i = 1` and
//! `sum v_i h_i = h0` gives the exponential tilt
//! `v_i = exp(kappa (h_i - h0)) / sum_j exp(kappa (h_j - h0))`, with `kappa`
//! the root of `phi(kappa) = sum_i (h_i - h0) exp(kappa (h_i - h0))`.
//! The solver works with the tilted mean `phi(kappa) / sum_i exp(...)`, which
//! has the same sign, is strictly increasing with derivative equal to the
//! tilted variance, and can be evaluated after subtracting the largest
//! exponent.

use crate::el::Sample;
use crate::{Error, Result};

const MAX_BISECTIONS: usize = 200;
const MAX_NEWTON: usize = 50;
const MAX_EXPANSIONS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct MaxentSolution {
    pub kappa: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedMaxent {
    pub kappa: f64,
    /// Weight of one member of each group.
    pub unit_weights: Vec<f64>,
    /// `count * unit weight` per group.
    pub group_weights: Vec<f64>,
}

/// `phi(kappa) = sum_i (h_i - h0) exp(kappa (h_i - h0))`, unscaled.
pub fn phi(sample: &Sample, h0: f64, kappa: f64) -> f64 {
    sample.values().iter().map(|&h| (h - h0) * (kappa * (h - h0)).exp()).sum()
}

struct Tilt<'a> {
    centered: &'a [f64],
    counts: Option<&'a [f64]>,
}

impl Tilt<'_> {
    fn count(&self, i: usize) -> f64 {
        self.counts.map_or(1.0, |m| m[i])
    }

    /// Unnormalized unit weights `exp(kappa c_i - shift)` and their total.
    fn unit(&self, kappa: f64) -> (Vec<f64>, f64) {
        let shift = self.centered.iter().fold(f64::NEG_INFINITY, |m, &c| m.max(kappa * c));
        let e: Vec<f64> = self.centered.iter().map(|&c| (kappa * c - shift).exp()).collect();
        let z = e.iter().enumerate().map(|(i, v)| self.count(i) * v).sum();
        (e, z)
    }

    /// Tilted mean and variance of the centered values.
    fn moments(&self, kappa: f64) -> (f64, f64) {
        let (e, z) = self.unit(kappa);
        let mut mean = 0.0;
        for (i, (&c, v)) in self.centered.iter().zip(&e).enumerate() {
            mean += self.count(i) * v * c;
        }
        mean /= z;
        let mut var = 0.0;
        for (i, (&c, v)) in self.centered.iter().zip(&e).enumerate() {
            var += self.count(i) * v * (c - mean) * (c - mean);
        }
        (mean, var / z)
    }

    fn solve(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        let lo_c = self.centered.iter().copied().fold(f64::INFINITY, f64::min);
        let hi_c = self.centered.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo_c < 0.0 && 0.0 < hi_c) {
            return Err(Error::Infeasible("h0 must lie strictly inside the range of h".into()));
        }
        let target = tol * (1.0 + lo_c.abs().max(hi_c));

        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        let mut expansions = 0;
        while self.moments(lo).0 >= 0.0 {
            lo *= 2.0;
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(Error::Convergence { iterations: expansions, lo, hi });
            }
        }
        while self.moments(hi).0 <= 0.0 {
            hi *= 2.0;
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(Error::Convergence { iterations: expansions, lo, hi });
            }
        }

        let mut x = if lo < 0.0 && 0.0 < hi { 0.0 } else { 0.5 * (lo + hi) };
        let (mut bisections, mut newtons) = (0usize, 0usize);
        loop {
            let (m, var) = self.moments(x);
            if m.abs() <= target {
                // polish with one Newton step when it stays in the bracket
                let polished = x - m / var;
                return Ok(if var > 0.0 && polished > lo && polished < hi { polished } else { x });
            }
            if m < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                return Ok(x);
            }
            let step = m / var;
            let candidate = x - step;
            if newtons < MAX_NEWTON && var > 0.0 && candidate > lo && candidate < hi {
                newtons += 1;
                if step.abs() <= 2.0 * f64::EPSILON * x.abs() {
                    return Ok(candidate);
                }
                x = candidate;
            } else {
                if bisections == MAX_BISECTIONS {
                    return Err(Error::Convergence { iterations: bisections + newtons, lo, hi });
                }
                bisections += 1;
                x = 0.5 * (lo + hi);
            }
        }
    }
}

/// Maximum-entropy weights with mean `h0`.
pub fn solve_maxent(sample: &Sample, h0: f64, tol: f64) -> Result<MaxentSolution> {
    if !h0.is_finite() {
        return Err(Error::InvalidInput("h0 must be finite".into()));
    }
    let centered: Vec<f64> = sample.values().iter().map(|h| h - h0).collect();
    let tilt = Tilt { centered: &centered, counts: None };
    let kappa = tilt.solve(tol)?;
    let (e, z) = tilt.unit(kappa);
    Ok(MaxentSolution { kappa, weights: e.into_iter().map(|v| v / z).collect() })
}

/// Maximum-entropy weights for `counts[k]` copies of `values[k]`.
pub fn solve_maxent_grouped(values: &[f64], counts: &[u64], h0: f64, tol: f64) -> Result<GroupedMaxent> {
    if values.len() != counts.len() || values.is_empty() {
        return Err(Error::InvalidInput("values and counts must be non-empty and of equal length".into()));
    }
    if values.iter().any(|v| !v.is_finite()) || counts.contains(&0) || !h0.is_finite() {
        return Err(Error::InvalidInput("values and h0 must be finite and counts positive".into()));
    }
    let centered: Vec<f64> = values.iter().map(|h| h - h0).collect();
    let m: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let tilt = Tilt { centered: &centered, counts: Some(&m) };
    let kappa = tilt.solve(tol)?;
    let (e, z) = tilt.unit(kappa);
    let unit: Vec<f64> = e.into_iter().map(|v| v / z).collect();
    let group = unit.iter().zip(&m).map(|(u, c)| u * c).collect();
    Ok(GroupedMaxent { kappa, unit_weights: unit, group_weights: group })
}

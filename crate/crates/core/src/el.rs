//! Univariate empirical likelihood.
//!
//! Maximizes `sum_i log w_i` over the probability simplex subject to
//! `sum_i w_i h_i = 0`. The optimum is `w_i = 1 / (n (1 + lambda h_i))` where
//! `lambda` is the unique root of
//!
//! ```text
//! g(lambda) = sum_i h_i / (1 + lambda h_i)
//! ```
//!
//! on the open interval `(-1/max{h_i > 0}, 1/|min{h_i < 0}|)`. `g` is strictly
//! decreasing there with simple poles at both ends, so the root is found by a
//! bracketed Newton iteration that falls back to bisection whenever a Newton
//! step would leave the current bracket.

use crate::{Error, Result};

const MAX_BISECTIONS: usize = 200;
const MAX_NEWTON: usize = 50;

/// Relative inset keeping the bracket away from the poles of `g`.
const POLE_INSET: f64 = 1e-12;

/// Constraint values `h_i = h(X_i, theta)` for one dataset and hypothesis.
///
/// Every entry is finite and the sample is non-empty. Order is preserved:
/// weight `i` always refers to `h[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    h: Vec<f64>,
}

impl Sample {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::InvalidInput("sample is empty".into()));
        }
        if let Some(i) = h.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("h[{i}] = {} is not finite", h[i])));
        }
        Ok(Self { h })
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.h
    }

    /// Largest absolute constraint value.
    pub fn max_abs(&self) -> f64 {
        self.h.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(h: Vec<f64>) -> Result<Self> {
        Sample::new(h)
    }
}

/// Result of an empirical likelihood solve.
///
/// For an infeasible constraint the weights are all zero, `log_likelihood`
/// is `-inf`, `lambda_hat` is NaN and `wilks` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElSolution {
    pub feasible: bool,
    pub lambda_hat: f64,
    pub weights: Vec<f64>,
    pub log_likelihood: f64,
    pub wilks: Option<f64>,
    /// First index attaining the largest weight.
    pub max_weight_index: usize,
    pub max_weight: f64,
    pub second_max_weight: f64,
    pub min_weight: f64,
}

impl ElSolution {
    fn infeasible(n: usize) -> Self {
        Self {
            feasible: false,
            lambda_hat: f64::NAN,
            weights: vec![0.0; n],
            log_likelihood: f64::NEG_INFINITY,
            wilks: None,
            max_weight_index: 0,
            max_weight: 0.0,
            second_max_weight: 0.0,
            min_weight: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Wilks statistic `-2 sum_i log(n w_i)`.
    pub fn wilks(&self) -> Result<f64> {
        self.wilks.ok_or(Error::UndefinedStatistic)
    }
}

/// `true` iff the sample has values of both strict signs.
///
/// Zero entries alone never make the constraint feasible.
pub fn check_feasibility(sample: &Sample) -> bool {
    let h = sample.values();
    let lo = h.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo < 0.0 && 0.0 < hi
}

/// `1 + lambda * h`, evaluated with a single rounding.
#[inline]
fn shifted(lambda: f64, h: f64) -> f64 {
    lambda.mul_add(h, 1.0)
}

/// `log(1 + lambda * h)` without cancellation for small `lambda * h`.
#[inline]
fn log_shifted(lambda: f64, h: f64) -> f64 {
    let x = lambda * h;
    if x.abs() < 0.5 {
        x.ln_1p()
    } else {
        shifted(lambda, h).ln()
    }
}

fn domain_check(h: &[f64], lambda: f64) -> Result<()> {
    for (i, &v) in h.iter().enumerate() {
        let d = shifted(lambda, v);
        if !(d > 0.0) {
            return Err(Error::Domain { lambda, index: i, value: d });
        }
    }
    Ok(())
}

/// `g(lambda) = sum_i h_i / (1 + lambda h_i)`.
pub fn g(sample: &Sample, lambda: f64) -> Result<f64> {
    let h = sample.values();
    domain_check(h, lambda)?;
    Ok(h.iter().map(|&v| v / (1.0 + lambda * v)).sum())
}

/// `g'(lambda) = -sum_i h_i^2 / (1 + lambda h_i)^2`.
pub fn g_prime(sample: &Sample, lambda: f64) -> Result<f64> {
    let h = sample.values();
    domain_check(h, lambda)?;
    Ok(-h
        .iter()
        .map(|&v| {
            let q = v / shifted(lambda, v);
            q * q
        })
        .sum::<f64>())
}

/// Dual objective `L(lambda) = -sum_i log(1 + lambda h_i)`.
///
/// At the root its value equals the maximal log-likelihood plus `n log n`.
pub fn dual_objective(sample: &Sample, lambda: f64) -> Result<f64> {
    let h = sample.values();
    domain_check(h, lambda)?;
    Ok(-h.iter().map(|&v| log_shifted(lambda, v)).sum::<f64>())
}

/// Open interval of `lambda` values with `1 + lambda h_i > 0` for all `i`.
pub fn feasible_interval(sample: &Sample) -> Option<(f64, f64)> {
    poles(sample.values())
}

fn poles(h: &[f64]) -> Option<(f64, f64)> {
    let pos_max = h.iter().copied().filter(|&v| v > 0.0).fold(f64::NAN, f64::max);
    let neg_min = h.iter().copied().filter(|&v| v < 0.0).fold(f64::NAN, f64::min);
    if pos_max.is_nan() || neg_min.is_nan() {
        return None;
    }
    Some((-1.0 / pos_max, -1.0 / neg_min))
}

/// Constraint values with optional integer multiplicities.
struct Dual<'a> {
    h: &'a [f64],
    counts: Option<&'a [f64]>,
    total: f64,
}

impl<'a> Dual<'a> {
    /// `(g, g')` at `lambda`. Caller guarantees `lambda` is inside the bracket.
    fn eval(&self, lambda: f64) -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        match self.counts {
            None => {
                for &v in self.h {
                    let q = v / shifted(lambda, v);
                    g += q;
                    dg -= q * q;
                }
            }
            Some(m) => {
                for (&v, &c) in self.h.iter().zip(m) {
                    let q = v / shifted(lambda, v);
                    g += c * q;
                    dg -= c * q * q;
                }
            }
        }
        (g, dg)
    }

    fn max_abs(&self) -> f64 {
        self.h.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Search bracket for the root.
    ///
    /// Besides the pole inset, every weight at the optimum is at most one,
    /// so `1 + lambda h_i >= 1/n` and the bracket can be tightened to
    /// `[(1/n - 1)/max h, (1 - 1/n)/|min h|]`.
    fn bracket(&self) -> Result<(f64, f64)> {
        let (lo_pole, hi_pole) =
            poles(self.h).ok_or_else(|| Error::Infeasible("constraint values do not take both signs".into()))?;
        let inset = POLE_INSET * (hi_pole - lo_pole);
        let frac = 1.0 - 1.0 / self.total;
        let lo = (lo_pole + inset).max(lo_pole * frac);
        let hi = (hi_pole - inset).min(hi_pole * frac);
        if !(lo < hi) {
            return Err(Error::Infeasible("empty search bracket".into()));
        }
        Ok((lo, hi))
    }

    fn solve(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        let (mut lo, mut hi) = self.bracket()?;
        let target = tol * self.total * (1.0 + self.max_abs());
        let mut x = if lo < 0.0 && 0.0 < hi { 0.0 } else { 0.5 * (lo + hi) };
        let (mut bisections, mut newtons) = (0usize, 0usize);
        loop {
            let (gx, dgx) = self.eval(x);
            if gx.abs() <= target {
                // one more Newton step takes g down to rounding level
                let polished = x - gx / dgx;
                return Ok(if polished > lo && polished < hi { polished } else { x });
            }
            // g is decreasing: a positive value puts the root to the right
            if gx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                return Ok(x);
            }
            let step = gx / dgx;
            let candidate = x - step;
            if newtons < MAX_NEWTON && candidate > lo && candidate < hi {
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

/// Root `lambda_hat` of `g` inside the feasible interval.
///
/// Converges when `|g(lambda)| <= tol * n * (1 + max|h_i|)` or when the
/// bracket has collapsed to a few ulps.
pub fn solve_lambda(sample: &Sample, tol: f64) -> Result<f64> {
    let dual = Dual { h: sample.values(), counts: None, total: sample.len() as f64 };
    dual.solve(tol)
}

/// Empirical likelihood weights and diagnostics.
///
/// An infeasible sample yields the sentinel solution rather than an error.
pub fn solve(sample: &Sample, tol: f64) -> Result<ElSolution> {
    let n = sample.len();
    if !check_feasibility(sample) {
        return Ok(ElSolution::infeasible(n));
    }
    let lambda = solve_lambda(sample, tol)?;
    let h = sample.values();
    let nf = n as f64;
    let weights: Vec<f64> = h.iter().map(|&v| 1.0 / (nf * shifted(lambda, v))).collect();
    let log_sum: f64 = h.iter().map(|&v| log_shifted(lambda, v)).sum();

    let (mut imax, mut wmax, mut wmin) = (0, f64::NEG_INFINITY, f64::INFINITY);
    for (i, &w) in weights.iter().enumerate() {
        if w > wmax {
            imax = i;
            wmax = w;
        }
        wmin = wmin.min(w);
    }
    let second = weights.iter().enumerate().filter(|&(i, _)| i != imax).fold(0.0f64, |m, (_, &w)| m.max(w));

    Ok(ElSolution {
        feasible: true,
        lambda_hat: lambda,
        weights,
        log_likelihood: -nf * nf.ln() - log_sum,
        wilks: Some(2.0 * log_sum),
        max_weight_index: imax,
        max_weight: wmax,
        second_max_weight: second,
        min_weight: wmin,
    })
}

/// Wilks statistic `-2 sum_i log(n w_i) = 2 sum_i log(1 + lambda h_i)`.
pub fn wilks(solution: &ElSolution) -> Result<f64> {
    solution.wilks()
}

/// Solution on a sample given as distinct values with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSolution {
    pub lambda_hat: f64,
    /// Weight of a single member of each group.
    pub unit_weights: Vec<f64>,
    /// Total weight of each group (`count * unit weight`).
    pub group_weights: Vec<f64>,
    pub log_likelihood: f64,
    pub wilks: f64,
}

/// Solves the problem whose sample consists of `counts[k]` copies of
/// `values[k]`. The dual depends on the sample only through this multiset,
/// so the result matches [`solve`] on the expanded sample.
pub fn solve_grouped(values: &[f64], counts: &[u64], tol: f64) -> Result<GroupedSolution> {
    if values.len() != counts.len() || values.is_empty() {
        return Err(Error::InvalidInput("values and counts must be non-empty and of equal length".into()));
    }
    if values.iter().any(|v| !v.is_finite()) || counts.contains(&0) {
        return Err(Error::InvalidInput("values must be finite and counts positive".into()));
    }
    let m: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let total: f64 = m.iter().sum();
    let dual = Dual { h: values, counts: Some(&m), total };
    let lambda = dual.solve(tol)?;
    let unit: Vec<f64> = values.iter().map(|&v| 1.0 / (total * shifted(lambda, v))).collect();
    let group = unit.iter().zip(&m).map(|(w, c)| w * c).collect();
    let log_sum: f64 = values.iter().zip(&m).map(|(&v, c)| c * log_shifted(lambda, v)).sum();
    Ok(GroupedSolution {
        lambda_hat: lambda,
        unit_weights: unit,
        group_weights: group,
        log_likelihood: -total * total.ln() - log_sum,
        wilks: 2.0 * log_sum,
    })
}

/// Location of the degenerate weight under a biased constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    /// Index of the extreme observation opposing the bias: the minimum of `h`
    /// when the bias is positive, the maximum when it is negative.
    pub h_max_index: usize,
    pub h_max: f64,
    pub weight_at_h_max: f64,
    /// Whether the largest weight sits on `h_max`.
    pub coincides: bool,
    pub max_weight: f64,
    pub ratio_to_second: f64,
    /// `n * min_i w_i`.
    pub n_min_weight: f64,
}

/// Checks where the largest weight falls relative to the bias sign `a`.
///
/// Only the sign of `a` is used; zero is rejected since the report is only
/// meaningful under mis-specification.
pub fn degeneracy_report(solution: &ElSolution, sample: &Sample, a: f64) -> Result<DegeneracyReport> {
    if !solution.feasible {
        return Err(Error::UndefinedStatistic);
    }
    if !(a != 0.0) {
        return Err(Error::InvalidInput("bias sign must be nonzero".into()));
    }
    let h = sample.values();
    if h.len() != solution.len() {
        return Err(Error::InvalidInput("sample and solution lengths differ".into()));
    }
    let mut idx = 0;
    for (i, &v) in h.iter().enumerate() {
        let better = if a > 0.0 { v < h[idx] } else { v > h[idx] };
        if better {
            idx = i;
        }
    }
    let n = h.len() as f64;
    Ok(DegeneracyReport {
        h_max_index: idx,
        h_max: h[idx],
        weight_at_h_max: solution.weights[idx],
        coincides: solution.max_weight_index == idx || solution.weights[idx] == solution.max_weight,
        max_weight: solution.max_weight,
        ratio_to_second: solution.max_weight / solution.second_max_weight,
        n_min_weight: n * solution.min_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(h: &[f64]) -> Sample {
        Sample::new(h.to_vec()).unwrap()
    }

    #[test]
    fn feasibility_requires_both_signs() {
        assert!(check_feasibility(&sample(&[-1.0, 2.0])));
        assert!(!check_feasibility(&sample(&[1.0, 2.0, 3.0])));
        assert!(!check_feasibility(&sample(&[0.0, 0.0])));
        assert!(!check_feasibility(&sample(&[0.0, 1.0])));
    }

    #[test]
    fn sample_rejects_empty_and_non_finite() {
        assert!(matches!(Sample::new(vec![]), Err(Error::InvalidInput(_))));
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
        assert!(Sample::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn g_values() {
        assert_eq!(g(&sample(&[-1.0, 2.0]), 0.0).unwrap(), 1.0);
        assert!(g(&sample(&[-1.0, 2.0]), 0.25).unwrap().abs() < 1e-15);
        assert_eq!(g(&sample(&[-1.0, 1.0]), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn g_outside_interval_names_index() {
        let err = g(&sample(&[-1.0, 2.0]), 1.0).unwrap_err();
        assert!(matches!(err, Error::Domain { index: 0, .. }));
        let err = g(&sample(&[-1.0, 2.0]), -0.5).unwrap_err();
        assert!(matches!(err, Error::Domain { index: 1, .. }));
    }

    #[test]
    fn lambda_closed_forms() {
        assert!((solve_lambda(&sample(&[-1.0, 2.0]), 1e-12).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(solve_lambda(&sample(&[-1.0, 1.0]), 1e-12).unwrap(), 0.0);
        assert!((solve_lambda(&sample(&[-2.0, 1.0]), 1e-12).unwrap() + 0.25).abs() < 1e-12);
    }

    #[test]
    fn solve_lambda_rejects_infeasible_and_bad_tol() {
        assert!(matches!(solve_lambda(&sample(&[1.0, 2.0]), 1e-12), Err(Error::Infeasible(_))));
        assert!(matches!(solve_lambda(&sample(&[-1.0, 2.0]), 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn solve_closed_forms() {
        let s = solve(&sample(&[-1.0, 2.0]), 1e-12).unwrap();
        assert!((s.weights[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.weights[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.max_weight_index, 0);

        let s = solve(&sample(&[-1.0, 0.0, 2.0]), 1e-12).unwrap();
        assert!((s.lambda_hat - 0.25).abs() < 1e-12);
        for (w, e) in s.weights.iter().zip([4.0 / 9.0, 1.0 / 3.0, 2.0 / 9.0]) {
            assert!((w - e).abs() < 1e-12);
        }
        // zero entries carry weight exactly 1/n
        assert_eq!(s.weights[1], 1.0 / 3.0);
    }

    #[test]
    fn infeasible_sentinel() {
        let s = solve(&sample(&[1.0, 2.0, 3.0]), 1e-12).unwrap();
        assert!(!s.feasible);
        assert_eq!(s.weights, vec![0.0; 3]);
        assert_eq!(s.log_likelihood, f64::NEG_INFINITY);
        assert_eq!(wilks(&s), Err(Error::UndefinedStatistic));
    }

    #[test]
    fn wilks_values() {
        let s = solve(&sample(&[-1.0, 2.0]), 1e-12).unwrap();
        let expected = 2.0 * (9.0f64 / 8.0).ln();
        assert!((wilks(&s).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.235566).abs() < 1e-6);
        assert_eq!(wilks(&solve(&sample(&[-1.0, 1.0]), 1e-12).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn degeneracy_report_examples() {
        let smp = sample(&[-1.0, 2.0]);
        let s = solve(&smp, 1e-12).unwrap();
        let r = degeneracy_report(&s, &smp, 1.0).unwrap();
        assert_eq!(r.h_max, -1.0);
        assert!(r.coincides);
        assert!((r.max_weight - 2.0 / 3.0).abs() < 1e-12);

        let smp = sample(&[-1.0, 1.0]);
        let s = solve(&smp, 1e-12).unwrap();
        let r = degeneracy_report(&s, &smp, 1.0).unwrap();
        assert_eq!(r.n_min_weight, 1.0);
        assert!(degeneracy_report(&s, &smp, 0.0).is_err());
    }

    #[test]
    fn ties_report_first_index() {
        let smp = sample(&[-1.0, 3.0, -1.0]);
        let s = solve(&smp, 1e-12).unwrap();
        assert_eq!(s.max_weight_index, 0);
        let r = degeneracy_report(&s, &smp, 1.0).unwrap();
        assert_eq!(r.h_max_index, 0);
    }

    #[test]
    fn grouped_matches_expanded() {
        let values = [-1.0, 0.5, 3.0];
        let counts = [3u64, 5, 2];
        let expanded: Vec<f64> =
            values.iter().zip(counts).flat_map(|(&v, c)| std::iter::repeat_n(v, c as usize)).collect();
        let full = solve(&Sample::new(expanded).unwrap(), 1e-12).unwrap();
        let grouped = solve_grouped(&values, &counts, 1e-12).unwrap();
        assert!((full.lambda_hat - grouped.lambda_hat).abs() < 1e-14);
        assert!((full.weights[0] - grouped.unit_weights[0]).abs() < 1e-15);
        assert!((full.weights[9] - grouped.unit_weights[2]).abs() < 1e-15);
        assert!((grouped.group_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((full.wilks.unwrap() - grouped.wilks).abs() < 1e-12);
    }

    #[test]
    fn extreme_ratio_is_solved() {
        // root sits close to the pole at lambda = 1
        let s = solve(&sample(&[-1.0, 1e6]), 1e-12).unwrap();
        let w = 1e6 / (1e6 + 1.0);
        assert!((s.weights[0] - w).abs() < 1e-12);
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

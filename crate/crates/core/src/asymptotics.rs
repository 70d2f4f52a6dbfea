//! Large-sample predictions under a biased constraint `h_i = a + xi_i`.
//!
//! With `M_n` the growth rate of the error maxima, the multiplier behaves like
//! `sgn(a)/M_n - 1/(a n)`, the weight on the extreme observation opposing the
//! bias like `|a|/M_n`, every other weight like `M_n^(gamma+1)/n`, and the
//! Wilks statistic like `2n |a| / M_n`. Higher-order Wilks terms use the raw
//! moments `mu_j = E[(a + xi)^j]`.

use std::fmt;
use std::str::FromStr;

use crate::el::Sample;
use crate::{Error, Result};

/// Constant `C` in `max_{i != i_max} w_i <= C M_n^(gamma+1) / n` (gamma = 1).
///
/// 99th percentile of `n w_(2) / M_n^2` pooled over the calibration run
/// `el calibrate --seed 20240611 --reps 400 --n-list 1e3,1e4,1e5,1e6`
/// (Gaussian errors, a = 1), rounded up; see `calibration/` in the repo root.
pub const SECOND_WEIGHT_BOUND_C: f64 = 38.0;

/// Law of the errors `xi_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorDistribution {
    StandardGaussian,
    /// Density `exp(-|x|)/2`.
    StandardLaplace,
}

impl fmt::Display for ErrorDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorDistribution::StandardGaussian => "gaussian",
            ErrorDistribution::StandardLaplace => "laplace",
        })
    }
}

impl FromStr for ErrorDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(ErrorDistribution::StandardGaussian),
            "laplace" => Ok(ErrorDistribution::StandardLaplace),
            other => Err(Error::InvalidInput(format!("unsupported error distribution '{other}'"))),
        }
    }
}

/// Growth rate `M_n` of the error maxima.
///
/// Gaussian: `sqrt(2 ln n)`. Laplace: `ln(n/2)`, the solution of
/// `n P(xi > M) = 1` for the tail `exp(-t)/2`.
pub fn norming_constant(dist: ErrorDistribution, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("norming constant needs n >= 3, got {n}")));
    }
    norming_constant_real(dist, n as f64)
}

/// [`norming_constant`] for a real-valued `n >= 3`.
pub fn norming_constant_real(dist: ErrorDistribution, n: f64) -> Result<f64> {
    if !(n >= 3.0) {
        return Err(Error::InvalidInput(format!("norming constant needs n >= 3, got {n}")));
    }
    Ok(match dist {
        ErrorDistribution::StandardGaussian => (2.0 * n.ln()).sqrt(),
        ErrorDistribution::StandardLaplace => (n / 2.0).ln(),
    })
}

fn binomial(m: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * f64::from(m - j) / f64::from(j + 1))
}

/// `E[(a + xi)^m]` for standard Gaussian `xi`.
pub fn gaussian_moments(a: f64, m: u32) -> f64 {
    // E xi^(2r) = (2r - 1)!!
    let mut total = 0.0;
    let mut double_factorial = 1.0;
    for k in (0..=m).step_by(2) {
        if k >= 2 {
            double_factorial *= f64::from(k - 1);
        }
        total += binomial(m, k) * a.powi((m - k) as i32) * double_factorial;
    }
    total
}

/// `E[(a + xi)^m]` for standard Laplace `xi`.
pub fn laplace_moments(a: f64, m: u32) -> f64 {
    // E xi^(2r) = (2r)!
    let mut total = 0.0;
    let mut factorial = 1.0;
    for k in (0..=m).step_by(2) {
        if k >= 2 {
            factorial *= f64::from(k) * f64::from(k - 1);
        }
        total += binomial(m, k) * a.powi((m - k) as i32) * factorial;
    }
    total
}

pub fn raw_moment(dist: ErrorDistribution, a: f64, m: u32) -> f64 {
    match dist {
        ErrorDistribution::StandardGaussian => gaussian_moments(a, m),
        ErrorDistribution::StandardLaplace => laplace_moments(a, m),
    }
}

/// Norming constant, spacing exponent and tail-truncation exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionParams {
    pub m_n: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl AssumptionParams {
    pub fn new(m_n: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(m_n > 0.0 && m_n.is_finite()) {
            return Err(Error::InvalidInput(format!("M_n must be positive, got {m_n}")));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { m_n, gamma, delta })
    }

    /// Defaults `gamma = 1`, `delta = 0.25` with the distribution's `M_n`.
    pub fn standard(dist: ErrorDistribution, n: usize) -> Result<Self> {
        Self::new(norming_constant(dist, n)?, 1.0, 0.25)
    }

    /// `M_n^(gamma+1) / n`, the scale of the non-degenerate weights.
    pub fn second_weight_scale(&self, n: usize) -> f64 {
        self.m_n.powf(self.gamma + 1.0) / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticPrediction {
    pub a: f64,
    pub n: usize,
    pub m_n: f64,
    /// `sgn(a) / M_n`
    pub lambda_leading: f64,
    /// `-1 / (a n)`
    pub lambda_second: f64,
    /// `|a| / M_n`
    pub w_max_pred: f64,
    /// Entry `j - 1` is the `j`-term sum
    /// `2n sum_{m=1..j} (-1)^(m-1) sgn(a)^m mu_m / (m M_n^m)`.
    pub wilks_pred: Vec<f64>,
}

impl AsymptoticPrediction {
    /// Two-term expansion of the multiplier.
    pub fn lambda(&self) -> f64 {
        self.lambda_leading + self.lambda_second
    }
}

/// Closed-form predictions for bias `a`, sample size `n` and `k` Wilks terms.
pub fn predict(dist: ErrorDistribution, a: f64, n: usize, k: u32) -> Result<AsymptoticPrediction> {
    if !(a != 0.0) || !a.is_finite() {
        return Err(Error::InvalidInput("predictions need a nonzero bias a".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("need at least one Wilks term".into()));
    }
    let m_n = norming_constant(dist, n)?;
    let sign = a.signum();
    let nf = n as f64;
    let mut partial = 0.0;
    let mut wilks_pred = Vec::with_capacity(k as usize);
    for m in 1..=k {
        let alt = if m % 2 == 1 { 1.0 } else { -1.0 };
        let term = alt * sign.powi(m as i32) * raw_moment(dist, a, m) / (f64::from(m) * m_n.powi(m as i32));
        partial += term;
        wilks_pred.push(2.0 * nf * partial);
    }
    Ok(AsymptoticPrediction {
        a,
        n,
        m_n,
        lambda_leading: sign / m_n,
        lambda_second: -1.0 / (a * nf),
        w_max_pred: a.abs() / m_n,
        wilks_pred,
    })
}

/// `(sum h)^2 / sum h^2`, the quadratic approximation to the Wilks statistic
/// under a correctly specified constraint.
pub fn chi2_null_approx(sample: &Sample) -> Result<f64> {
    let h = sample.values();
    let s1: f64 = h.iter().sum();
    let s2: f64 = h.iter().map(|v| v * v).sum();
    if s2 == 0.0 {
        return Err(Error::InvalidInput("all constraint values are zero".into()));
    }
    Ok(s1 * s1 / s2)
}

/// Gaps between the two largest errors on each side of zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingReport {
    /// Bias used to center the sample.
    pub center: f64,
    pub positive_max: f64,
    pub positive_second: f64,
    pub positive_spacing: f64,
    /// Magnitudes of the two most negative errors.
    pub negative_max: f64,
    pub negative_second: f64,
    pub negative_spacing: f64,
    /// `M_n^(-gamma)`
    pub threshold: f64,
    pub positive_ok: bool,
    pub negative_ok: bool,
}

/// Separation of the first and second maxima of `xi_i = h_i - a`.
///
/// `a` defaults to the sample mean.
pub fn spacing_check(sample: &Sample, params: &AssumptionParams, a: Option<f64>) -> Result<SpacingReport> {
    let h = sample.values();
    let center = a.unwrap_or_else(|| h.iter().sum::<f64>() / h.len() as f64);
    let (mut p1, mut p2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut q1, mut q2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut npos, mut nneg) = (0, 0);
    for &v in h {
        let xi = v - center;
        if xi > 0.0 {
            npos += 1;
            if xi > p1 {
                p2 = p1;
                p1 = xi;
            } else if xi > p2 {
                p2 = xi;
            }
        } else if xi < 0.0 {
            nneg += 1;
            let m = -xi;
            if m > q1 {
                q2 = q1;
                q1 = m;
            } else if m > q2 {
                q2 = m;
            }
        }
    }
    if npos < 2 || nneg < 2 {
        return Err(Error::InvalidInput(format!(
            "spacing check needs two errors of each sign, found {npos} positive and {nneg} negative"
        )));
    }
    let threshold = params.m_n.powf(-params.gamma);
    let (ps, ns) = (p1 - p2, q1 - q2);
    Ok(SpacingReport {
        center,
        positive_max: p1,
        positive_second: p2,
        positive_spacing: ps,
        negative_max: q1,
        negative_second: q2,
        negative_spacing: ns,
        threshold,
        positive_ok: ps >= threshold,
        negative_ok: ns >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ErrorDistribution::*;

    #[test]
    fn norming_examples() {
        assert!((norming_constant(StandardGaussian, 1000).unwrap() - 3.716922).abs() < 1e-6);
        let e2 = 2.0f64.exp();
        assert!((norming_constant_real(StandardGaussian, e2).unwrap() - 2.0).abs() < 1e-14);
        assert!((norming_constant(StandardLaplace, 2000).unwrap() - 6.907755).abs() < 1e-6);
        assert!(norming_constant(StandardGaussian, 2).is_err());
    }

    #[test]
    fn gaussian_moment_examples() {
        assert_eq!(gaussian_moments(0.0, 2), 1.0);
        assert_eq!(gaussian_moments(1.0, 3), 4.0);
        assert_eq!(gaussian_moments(1.0, 4), 10.0);
        assert_eq!(gaussian_moments(1.0, 1), 1.0);
        assert_eq!(gaussian_moments(0.0, 6), 15.0);
    }

    #[test]
    fn laplace_moment_examples() {
        assert_eq!(laplace_moments(0.0, 2), 2.0);
        assert_eq!(laplace_moments(0.0, 4), 24.0);
        // a^3 + 3 a * 2
        assert_eq!(laplace_moments(1.0, 3), 7.0);
    }

    #[test]
    fn predict_examples() {
        let p = predict(StandardGaussian, 1.0, 1000, 2).unwrap();
        assert!((p.lambda_leading - 0.26904).abs() < 1e-5);
        assert!((p.lambda_second + 0.001).abs() < 1e-15);
        assert!((p.lambda() - 0.26804).abs() < 1e-5);
        assert!((p.w_max_pred - 0.26904).abs() < 1e-5);
        assert!((p.wilks_pred[0] - 538.08).abs() < 0.01);
        assert!((p.wilks_pred[1] - 393.31).abs() < 0.01);
        // Example-1 scale: n * w_max ~ 269
        assert!((1000.0 * p.w_max_pred - 269.0).abs() < 0.1);
    }

    #[test]
    fn predict_sign_and_errors() {
        let p = predict(StandardGaussian, -0.5, 1000, 3).unwrap();
        assert!(p.lambda_leading < 0.0);
        assert!(p.wilks_pred.iter().all(|w| *w > 0.0));
        assert!(predict(StandardGaussian, 0.0, 1000, 1).is_err());
        let q = predict(StandardGaussian, -0.5, 1000, 3).unwrap();
        assert_eq!(format!("{p:?}"), format!("{q:?}"));
    }

    #[test]
    fn chi2_examples() {
        let s = |h: &[f64]| Sample::new(h.to_vec()).unwrap();
        assert_eq!(chi2_null_approx(&s(&[-1.0, 1.0])).unwrap(), 0.0);
        assert!((chi2_null_approx(&s(&[-1.0, 2.0])).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(chi2_null_approx(&s(&[3.0; 7])).unwrap(), 7.0);
        assert!(chi2_null_approx(&s(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn spacing_examples() {
        let params = AssumptionParams::new(2.0, 1.0, 0.25).unwrap();
        let s = Sample::new(vec![3.0, 1.0, -1.0, -2.0]).unwrap();
        let r = spacing_check(&s, &params, Some(0.0)).unwrap();
        assert_eq!(r.positive_spacing, 2.0);
        assert_eq!(r.negative_spacing, 1.0);
        assert!(r.positive_ok && r.negative_ok);
        // centering on the sample mean leaves spacings unchanged here
        let r = spacing_check(&s, &params, None).unwrap();
        assert_eq!(r.positive_spacing, 2.0);

        let tie = Sample::new(vec![3.0, 3.0, -1.0, -2.0]).unwrap();
        let r = spacing_check(&tie, &params, Some(0.0)).unwrap();
        assert_eq!(r.positive_spacing, 0.0);
        assert!(!r.positive_ok);

        let lopsided = Sample::new(vec![3.0, -1.0, -2.0, -3.0]).unwrap();
        assert!(spacing_check(&lopsided, &params, Some(0.0)).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(AssumptionParams::new(1.0, 0.0, 0.25).is_err());
        assert!(AssumptionParams::new(1.0, 1.0, 1.0).is_err());
        assert!(AssumptionParams::new(0.0, 1.0, 0.5).is_err());
        assert!("laplace".parse::<ErrorDistribution>().is_ok());
        assert!("cauchy".parse::<ErrorDistribution>().is_err());
    }
}

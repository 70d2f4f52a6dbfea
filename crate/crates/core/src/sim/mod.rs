//! Seeded random generation and estimating functions.
//!
//! Every replicate draws from its own ChaCha20 stream keyed by
//! `(seed, stream_id)`: the 64-bit seed is expanded into the cipher key with
//! [`SeedableRng::seed_from_u64`] and `stream_id` selects the ChaCha stream.
//! Replicates are therefore independent of evaluation order and thread count.
//!
//! Gaussian variates use the Marsaglia polar method (both variates of each
//! accepted pair are used); Laplace variates use the inverse CDF.

mod oracle;

pub use oracle::{primal_oracle, OracleObjective, MAX_ORACLE_POINTS};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::asymptotics::ErrorDistribution;
use crate::el::Sample;
use crate::Result;

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Stream id for replicate `rep` at sample size `n`.
pub fn replicate_stream_id(n: usize, rep: usize) -> u64 {
    ((n as u64) << 24) | (rep as u64 & 0xff_ffff)
}

/// Fills `out` with standard normal draws (polar method).
pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_mut(2);
    for chunk in &mut chunks {
        let (x, y) = polar_pair(rng);
        chunk[0] = x;
        if let Some(slot) = chunk.get_mut(1) {
            *slot = y;
        }
    }
}

fn polar_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (u * f, v * f);
        }
    }
}

/// One standard Laplace draw via the inverse CDF.
pub fn standard_laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -u.signum() * tail.ln();
        }
    }
}

/// `n` i.i.d. draws from `dist` on `stream`.
pub fn sample_errors(stream: SeededStream, dist: ErrorDistribution, n: usize) -> Vec<f64> {
    let mut rng = stream.rng();
    let mut out = vec![0.0; n];
    match dist {
        ErrorDistribution::StandardGaussian => fill_standard_normal(&mut rng, &mut out),
        ErrorDistribution::StandardLaplace => {
            for x in &mut out {
                *x = standard_laplace(&mut rng);
            }
        }
    }
    out
}

/// Location estimating function `h(x, theta) = x - theta`.
pub fn location_h(observations: &[f64], theta: f64) -> Result<Sample> {
    Sample::new(observations.iter().map(|x| x - theta).collect())
}

/// `n` draws from a centered bivariate normal with unit variances and
/// correlation `rho`.
pub fn bivariate_normal(stream: SeededStream, n: usize, rho: f64) -> Vec<[f64; 2]> {
    let mut rng = stream.rng();
    let mut z = vec![0.0; 2 * n];
    fill_standard_normal(&mut rng, &mut z);
    let c = (1.0 - rho * rho).sqrt();
    z.chunks_exact(2).map(|p| [p[0], rho * p[0] + c * p[1]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_golden_vector() {
        let x = sample_errors(SeededStream::new(42, 0), ErrorDistribution::StandardGaussian, 5);
        let golden =
            [0.40364853310055593, -2.5800666980196434, -0.9942947978487855, -0.4566436660771017, 1.2653303570050847];
        assert_eq!(x, golden);
    }

    #[test]
    fn identical_streams_reproduce() {
        let s = SeededStream::new(7, 3);
        let a = sample_errors(s, ErrorDistribution::StandardLaplace, 100);
        let b = sample_errors(s, ErrorDistribution::StandardLaplace, 100);
        assert_eq!(a, b);
        let c = sample_errors(SeededStream::new(7, 4), ErrorDistribution::StandardLaplace, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_mean_within_clt_bound() {
        let n = 1_000_000;
        let x = sample_errors(SeededStream::new(1, 0), ErrorDistribution::StandardGaussian, n);
        let mean = x.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn laplace_tail_matches_exponential() {
        let n = 400_000;
        let x = sample_errors(SeededStream::new(2, 0), ErrorDistribution::StandardLaplace, n);
        let p = x.iter().filter(|v| v.abs() > 2.0).count() as f64 / n as f64;
        let expected = (-2.0f64).exp();
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((p - expected).abs() < 4.0 * se, "p {p} expected {expected}");
    }

    #[test]
    fn location_h_examples() {
        assert_eq!(location_h(&[0.0], 0.0).unwrap().values(), &[0.0]);
        assert_eq!(location_h(&[1.0, 2.0], 1.0).unwrap().values(), &[0.0, 1.0]);
    }

    #[test]
    fn misspecified_location_has_unit_bias() {
        let x = sample_errors(SeededStream::new(3, 0), ErrorDistribution::StandardGaussian, 200_000);
        let h = location_h(&x, -1.0).unwrap();
        let a = h.values().iter().sum::<f64>() / h.len() as f64;
        assert!((a - 1.0).abs() < 0.01);
    }

    #[test]
    fn bivariate_correlation() {
        let z = bivariate_normal(SeededStream::new(5, 0), 200_000, 0.5);
        let n = z.len() as f64;
        let sxy = z.iter().map(|p| p[0] * p[1]).sum::<f64>() / n;
        let syy = z.iter().map(|p| p[1] * p[1]).sum::<f64>() / n;
        assert!((sxy - 0.5).abs() < 0.01);
        assert!((syy - 1.0).abs() < 0.01);
    }
}

//! Seeded Monte Carlo experiments.
//!
//! Each replicate draws from its own stream (see [`crate::sim`]), and
//! replicate loops run on the rayon pool with results collected in
//! `(n, replicate)` order, so every output is a pure function of its config.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::asymptotics::{self, AssumptionParams, ErrorDistribution, SECOND_WEIGHT_BOUND_C};
use crate::bayes::{self, PosteriorGrid};
use crate::el::{self, Sample};
use crate::graphs::{self, EnsembleFit, FitMethod, GraphEnsemble};
use crate::maxent;
use crate::multi::{self, VectorSample};
use crate::sim::{self, OracleObjective, SeededStream};
use crate::table::{format_float, Cell, Provenance, Table};
use crate::{Error, Result, DEFAULT_TOL};

/// Median of the finite entries; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile (type 7) of the finite entries.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn argmin(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, &x)| if x < v[best] { i } else { best })
}

// ---------------------------------------------------------------------------
// Gaussian location example

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianExample {
    pub seed: u64,
    pub theta: f64,
    pub x: Vec<f64>,
    /// Weights under the true mean 0.
    pub correct: el::ElSolution,
    /// Weights under the hypothesized mean `theta`.
    pub misspecified: el::ElSolution,
    pub argmin_observation: usize,
}

impl GaussianExample {
    pub fn max_weight_on_min_observation(&self) -> bool {
        self.misspecified.feasible && self.misspecified.max_weight_index == self.argmin_observation
    }

    pub fn n_max_weight(&self) -> f64 {
        self.x.len() as f64 * self.misspecified.max_weight
    }

    pub fn max_to_second(&self) -> f64 {
        self.misspecified.max_weight / self.misspecified.second_max_weight
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "index",
            "x",
            "weight_correct",
            "weight_misspecified",
            "is_max_weight",
            "is_min_observation",
            "infeasible",
        ]);
        let infeasible = !self.misspecified.feasible;
        for (i, &x) in self.x.iter().enumerate() {
            t.push(vec![
                i.into(),
                x.into(),
                self.correct.weights[i].into(),
                self.misspecified.weights[i].into(),
                (self.misspecified.feasible && i == self.misspecified.max_weight_index).into(),
                (i == self.argmin_observation).into(),
                infeasible.into(),
            ]);
        }
        t
    }
}

/// `n` standard normal observations fitted under mean 0 and mean `theta`.
pub fn gaussian_example(seed: u64, n: usize, theta: f64) -> Result<GaussianExample> {
    let x = sim::sample_errors(SeededStream::new(seed, 0), ErrorDistribution::StandardGaussian, n);
    let correct = el::solve(&sim::location_h(&x, 0.0)?, DEFAULT_TOL)?;
    let misspecified = el::solve(&sim::location_h(&x, theta)?, DEFAULT_TOL)?;
    let argmin_observation = argmin(&x);
    Ok(GaussianExample { seed, theta, x, correct, misspecified, argmin_observation })
}

// ---------------------------------------------------------------------------
// Mis-specified replicates: multiplier, degeneracy and Wilks

#[derive(Debug, Clone, PartialEq)]
pub struct MisspecConfig {
    pub seed: u64,
    pub a: f64,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub dist: ErrorDistribution,
    /// Number of Wilks expansion terms.
    pub k: u32,
}

/// One replicate with `h_i = a + xi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MisspecReplicate {
    pub n: usize,
    pub rep: usize,
    pub infeasible: bool,
    pub m_n: f64,
    pub lambda_hat: f64,
    /// Extreme observation opposing the bias.
    pub h_max: f64,
    /// `lambda_hat + 1/h_max`, the distance to the pole at `-1/h_max`.
    pub lambda_gap: f64,
    pub w_max: f64,
    pub w_second: f64,
    pub n_min_weight: f64,
    pub coincides: bool,
    pub wilks: f64,
    pub wilks_pred: Vec<f64>,
}

impl MisspecReplicate {
    /// `M_n lambda_hat`
    pub fn scaled_lambda(&self) -> f64 {
        self.m_n * self.lambda_hat
    }

    /// `n (lambda_hat + 1/h_max)`
    pub fn scaled_gap(&self) -> f64 {
        self.n as f64 * self.lambda_gap
    }

    /// `w_max M_n / |a|`
    pub fn scaled_w_max(&self, a: f64) -> f64 {
        self.w_max * self.m_n / a.abs()
    }

    /// `n w_(2) / M_n^2`
    pub fn scaled_second(&self) -> f64 {
        self.n as f64 * self.w_second / (self.m_n * self.m_n)
    }

    /// `L M_n / (2 n |a|)`
    pub fn scaled_wilks(&self, a: f64) -> f64 {
        self.wilks * self.m_n / (2.0 * self.n as f64 * a.abs())
    }

    /// `|L / pred_k - 1|` for `k` expansion terms.
    pub fn wilks_rel_err(&self, k: usize) -> f64 {
        (self.wilks / self.wilks_pred[k - 1] - 1.0).abs()
    }
}

pub fn misspecified_replicate(cfg: &MisspecConfig, n: usize, rep: usize) -> Result<MisspecReplicate> {
    let stream = SeededStream::new(cfg.seed, sim::replicate_stream_id(n, rep));
    let mut h = sim::sample_errors(stream, cfg.dist, n);
    for v in &mut h {
        *v += cfg.a;
    }
    let pred = asymptotics::predict(cfg.dist, cfg.a, n, cfg.k)?;
    let sample = Sample::new(h)?;
    let sol = el::solve(&sample, DEFAULT_TOL)?;
    if !sol.feasible {
        return Ok(MisspecReplicate {
            n,
            rep,
            infeasible: true,
            m_n: pred.m_n,
            lambda_hat: f64::NAN,
            h_max: f64::NAN,
            lambda_gap: f64::NAN,
            w_max: f64::NAN,
            w_second: f64::NAN,
            n_min_weight: f64::NAN,
            coincides: false,
            wilks: f64::NAN,
            wilks_pred: pred.wilks_pred,
        });
    }
    let report = el::degeneracy_report(&sol, &sample, cfg.a)?;
    Ok(MisspecReplicate {
        n,
        rep,
        infeasible: false,
        m_n: pred.m_n,
        lambda_hat: sol.lambda_hat,
        h_max: report.h_max,
        lambda_gap: sol.lambda_hat + 1.0 / report.h_max,
        w_max: sol.max_weight,
        w_second: sol.second_max_weight,
        n_min_weight: report.n_min_weight,
        coincides: report.coincides,
        wilks: sol.wilks.unwrap_or(f64::NAN),
        wilks_pred: pred.wilks_pred,
    })
}

pub fn misspecified_replicates(cfg: &MisspecConfig) -> Result<Vec<MisspecReplicate>> {
    if cfg.reps == 0 || cfg.n_list.is_empty() {
        return Err(Error::InvalidInput("need at least one replicate and one sample size".into()));
    }
    let jobs: Vec<(usize, usize)> = cfg.n_list.iter().flat_map(|&n| (0..cfg.reps).map(move |r| (n, r))).collect();
    jobs.par_iter().map(|&(n, r)| misspecified_replicate(cfg, n, r)).collect()
}

/// Per-`n` medians of the mis-specified replicate diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MisspecSummary {
    pub n: usize,
    pub m_n: f64,
    pub reps: usize,
    pub infeasible: usize,
    pub median_scaled_lambda: f64,
    pub median_scaled_gap: f64,
    pub median_scaled_w_max: f64,
    pub median_scaled_second: f64,
    /// Fraction with `w_(2) <= C M_n^2 / n`.
    pub frac_second_bounded: f64,
    pub median_n_min_weight: f64,
    pub min_n_min_weight: f64,
    pub frac_coincide: f64,
    pub median_scaled_wilks: f64,
    /// Median `|L / pred_k - 1|`, one entry per expansion order.
    pub median_wilks_rel_err: Vec<f64>,
    pub lambda_pred: f64,
    pub w_max_pred: f64,
}

pub fn summarize_misspecified(cfg: &MisspecConfig, reps: &[MisspecReplicate]) -> Vec<MisspecSummary> {
    cfg.n_list
        .iter()
        .map(|&n| {
            let rows: Vec<&MisspecReplicate> = reps.iter().filter(|r| r.n == n).collect();
            let ok: Vec<&&MisspecReplicate> = rows.iter().filter(|r| !r.infeasible).collect();
            let col = |f: &dyn Fn(&MisspecReplicate) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let frac = |f: &dyn Fn(&MisspecReplicate) -> bool| {
                ok.iter().filter(|r| f(r)).count() as f64 / ok.len().max(1) as f64
            };
            let m_n = asymptotics::norming_constant(cfg.dist, n).unwrap_or(f64::NAN);
            let pred = asymptotics::predict(cfg.dist, cfg.a, n, cfg.k).ok();
            let params = AssumptionParams::new(m_n, 1.0, 0.25).ok();
            let bound = params.map_or(f64::NAN, |p| SECOND_WEIGHT_BOUND_C * p.second_weight_scale(n));
            MisspecSummary {
                n,
                m_n,
                reps: rows.len(),
                infeasible: rows.len() - ok.len(),
                median_scaled_lambda: median(&col(&|r| r.scaled_lambda())),
                median_scaled_gap: median(&col(&|r| r.scaled_gap())),
                median_scaled_w_max: median(&col(&|r| r.scaled_w_max(cfg.a))),
                median_scaled_second: median(&col(&|r| r.scaled_second())),
                frac_second_bounded: frac(&|r| r.w_second <= bound),
                median_n_min_weight: median(&col(&|r| r.n_min_weight)),
                min_n_min_weight: col(&|r| r.n_min_weight).into_iter().fold(f64::INFINITY, f64::min),
                frac_coincide: frac(&|r| r.coincides),
                median_scaled_wilks: median(&col(&|r| r.scaled_wilks(cfg.a))),
                median_wilks_rel_err: (1..=cfg.k as usize).map(|k| median(&col(&|r| r.wilks_rel_err(k)))).collect(),
                lambda_pred: pred.as_ref().map_or(f64::NAN, |p| p.lambda()),
                w_max_pred: pred.as_ref().map_or(f64::NAN, |p| p.w_max_pred),
            }
        })
        .collect()
}

pub fn lambda_replicate_table(reps: &[MisspecReplicate]) -> Table {
    let mut t = Table::new(&["n", "rep", "infeasible", "m_n", "lambda_hat", "m_n_lambda", "h_max", "n_lambda_gap"]);
    for r in reps {
        t.push(vec![
            r.n.into(),
            r.rep.into(),
            r.infeasible.into(),
            r.m_n.into(),
            r.lambda_hat.into(),
            r.scaled_lambda().into(),
            r.h_max.into(),
            r.scaled_gap().into(),
        ]);
    }
    t
}

pub fn lambda_summary_table(summary: &[MisspecSummary], a: f64) -> Table {
    let mut t = Table::new(&[
        "n",
        "reps",
        "infeasible",
        "m_n",
        "median_m_n_lambda",
        "median_n_lambda_gap",
        "predicted_gap",
        "lambda_pred",
    ]);
    for s in summary {
        t.push(vec![
            s.n.into(),
            s.reps.into(),
            s.infeasible.into(),
            s.m_n.into(),
            s.median_scaled_lambda.into(),
            s.median_scaled_gap.into(),
            (-1.0 / a).into(),
            s.lambda_pred.into(),
        ]);
    }
    t
}

pub fn degeneracy_replicate_table(reps: &[MisspecReplicate], a: f64) -> Table {
    let mut t = Table::new(&[
        "n",
        "rep",
        "infeasible",
        "m_n",
        "w_max",
        "w_max_m_n_over_a",
        "w_second",
        "n_w_second_over_m_n_sq",
        "n_min_weight",
        "coincides",
    ]);
    for r in reps {
        t.push(vec![
            r.n.into(),
            r.rep.into(),
            r.infeasible.into(),
            r.m_n.into(),
            r.w_max.into(),
            r.scaled_w_max(a).into(),
            r.w_second.into(),
            r.scaled_second().into(),
            r.n_min_weight.into(),
            r.coincides.into(),
        ]);
    }
    t
}

pub fn degeneracy_summary_table(summary: &[MisspecSummary]) -> Table {
    let mut t = Table::new(&[
        "n",
        "reps",
        "infeasible",
        "m_n",
        "median_w_max_m_n_over_a",
        "median_n_w_second_over_m_n_sq",
        "frac_second_bounded",
        "bound_c",
        "median_n_min_weight",
        "min_n_min_weight",
        "frac_coincide",
        "w_max_pred",
    ]);
    for s in summary {
        t.push(vec![
            s.n.into(),
            s.reps.into(),
            s.infeasible.into(),
            s.m_n.into(),
            s.median_scaled_w_max.into(),
            s.median_scaled_second.into(),
            s.frac_second_bounded.into(),
            SECOND_WEIGHT_BOUND_C.into(),
            s.median_n_min_weight.into(),
            s.min_n_min_weight.into(),
            s.frac_coincide.into(),
            s.w_max_pred.into(),
        ]);
    }
    t
}

pub fn wilks_replicate_table(reps: &[MisspecReplicate], a: f64, k: u32) -> Table {
    let mut header =
        vec!["n".to_owned(), "rep".into(), "infeasible".into(), "wilks".into(), "wilks_m_n_over_2na".into()];
    header.extend((1..=k).map(|j| format!("pred_k{j}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for r in reps {
        let mut row: Vec<Cell> =
            vec![r.n.into(), r.rep.into(), r.infeasible.into(), r.wilks.into(), r.scaled_wilks(a).into()];
        row.extend(r.wilks_pred.iter().map(|&p| Cell::from(p)));
        t.push(row);
    }
    t
}

pub fn wilks_summary_table(summary: &[MisspecSummary], k: u32) -> Table {
    let mut header =
        vec!["n".to_owned(), "reps".into(), "infeasible".into(), "m_n".into(), "median_wilks_m_n_over_2na".into()];
    header.extend((1..=k).map(|j| format!("median_rel_err_k{j}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for s in summary {
        let mut row: Vec<Cell> =
            vec![s.n.into(), s.reps.into(), s.infeasible.into(), s.m_n.into(), s.median_scaled_wilks.into()];
        row.extend(s.median_wilks_rel_err.iter().map(|&e| Cell::from(e)));
        t.push(row);
    }
    t
}

/// Quantiles of `n w_(2) / M_n^2` used to freeze [`SECOND_WEIGHT_BOUND_C`].
pub fn second_weight_calibration(cfg: &MisspecConfig, reps: &[MisspecReplicate]) -> Table {
    let mut t = Table::new(&["n", "reps", "q50", "q95", "q99", "max"]);
    let mut pooled = Vec::new();
    for &n in &cfg.n_list {
        let v: Vec<f64> = reps.iter().filter(|r| r.n == n && !r.infeasible).map(|r| r.scaled_second()).collect();
        pooled.extend_from_slice(&v);
        t.push(vec![
            n.into(),
            v.len().into(),
            quantile(&v, 0.5).into(),
            quantile(&v, 0.95).into(),
            quantile(&v, 0.99).into(),
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max).into(),
        ]);
    }
    t.push(vec![
        0usize.into(),
        pooled.len().into(),
        quantile(&pooled, 0.5).into(),
        quantile(&pooled, 0.95).into(),
        quantile(&pooled, 0.99).into(),
        pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max).into(),
    ]);
    t
}

// ---------------------------------------------------------------------------
// Null Wilks replicates

#[derive(Debug, Clone, PartialEq)]
pub struct NullReplicate {
    pub rep: usize,
    pub infeasible: bool,
    pub wilks: f64,
    pub chi2_approx: f64,
    /// `max_i |n w_i - 1|`
    pub max_weight_dev: f64,
}

pub fn null_wilks(seed: u64, n: usize, reps: usize, dist: ErrorDistribution) -> Result<Vec<NullReplicate>> {
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let h = sim::sample_errors(SeededStream::new(seed, sim::replicate_stream_id(n, rep)), dist, n);
            let sample = Sample::new(h)?;
            let sol = el::solve(&sample, DEFAULT_TOL)?;
            let chi2 = asymptotics::chi2_null_approx(&sample)?;
            let nf = n as f64;
            Ok(NullReplicate {
                rep,
                infeasible: !sol.feasible,
                wilks: sol.wilks.unwrap_or(f64::NAN),
                chi2_approx: chi2,
                max_weight_dev: if sol.feasible {
                    sol.weights.iter().map(|w| (nf * w - 1.0).abs()).fold(0.0, f64::max)
                } else {
                    f64::NAN
                },
            })
        })
        .collect()
}

pub fn null_table(reps: &[NullReplicate]) -> Table {
    let mut t = Table::new(&["rep", "infeasible", "wilks", "chi2_approx", "max_abs_n_w_minus_1"]);
    for r in reps {
        t.push(vec![r.rep.into(), r.infeasible.into(), r.wilks.into(), r.chi2_approx.into(), r.max_weight_dev.into()]);
    }
    t
}

// ---------------------------------------------------------------------------
// Posterior consistency

#[derive(Debug, Clone, PartialEq)]
pub struct BayesConfig {
    pub seed: u64,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub radius: f64,
    pub theta0: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub grid_size: usize,
}

impl Default for BayesConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_list: vec![50, 200, 800, 3200],
            reps: 100,
            radius: 0.25,
            theta0: 0.0,
            theta_lo: -1.0,
            theta_hi: 1.0,
            grid_size: bayes::DEFAULT_GRID_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesReplicate {
    pub n: usize,
    pub rep: usize,
    pub infeasible: bool,
    pub tail_mass: f64,
    pub posterior_mean: f64,
    pub posterior_mode: f64,
    pub sample_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesRun {
    pub replicates: Vec<BayesReplicate>,
    /// Posterior of replicate 0 for every `n`.
    pub grids: Vec<(usize, PosteriorGrid)>,
}

fn location_posterior(cfg: &BayesConfig, x: &[f64]) -> Result<PosteriorGrid> {
    let width = cfg.theta_hi - cfg.theta_lo;
    bayes::posterior(x, |x, t| x - t, |_| 1.0 / width, cfg.theta_lo, cfg.theta_hi, cfg.grid_size)
}

/// Gaussian location data with true mean `theta0` and a uniform prior.
pub fn bayes_consistency(cfg: &BayesConfig) -> Result<BayesRun> {
    let jobs: Vec<(usize, usize)> = cfg.n_list.iter().flat_map(|&n| (0..cfg.reps).map(move |r| (n, r))).collect();
    let results: Vec<(BayesReplicate, Option<PosteriorGrid>)> = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let stream = SeededStream::new(cfg.seed, sim::replicate_stream_id(n, rep));
            let mut x = sim::sample_errors(stream, ErrorDistribution::StandardGaussian, n);
            for v in &mut x {
                *v += cfg.theta0;
            }
            let sample_mean = x.iter().sum::<f64>() / n as f64;
            match location_posterior(cfg, &x) {
                Ok(grid) => {
                    let r = BayesReplicate {
                        n,
                        rep,
                        infeasible: false,
                        tail_mass: grid.tail_mass(cfg.theta0, cfg.radius),
                        posterior_mean: grid.mean(),
                        posterior_mode: grid.mode(),
                        sample_mean,
                    };
                    Ok((r, (rep == 0).then_some(grid)))
                }
                Err(Error::DegeneratePosterior) => Ok((
                    BayesReplicate {
                        n,
                        rep,
                        infeasible: true,
                        tail_mass: f64::NAN,
                        posterior_mean: f64::NAN,
                        posterior_mode: f64::NAN,
                        sample_mean,
                    },
                    None,
                )),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut replicates = Vec::with_capacity(results.len());
    let mut grids = Vec::new();
    for (r, g) in results {
        if let Some(g) = g {
            grids.push((r.n, g));
        }
        replicates.push(r);
    }
    Ok(BayesRun { replicates, grids })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesSummary {
    pub n: usize,
    pub median_tail_mass: f64,
    /// `n / sqrt(2 ln n)`
    pub rate_abscissa: f64,
    pub infeasible: usize,
}

pub fn summarize_bayes(cfg: &BayesConfig, run: &BayesRun) -> Vec<BayesSummary> {
    cfg.n_list
        .iter()
        .map(|&n| {
            let rows: Vec<&BayesReplicate> = run.replicates.iter().filter(|r| r.n == n).collect();
            let tails: Vec<f64> = rows.iter().filter(|r| !r.infeasible).map(|r| r.tail_mass).collect();
            let nf = n as f64;
            BayesSummary {
                n,
                median_tail_mass: median(&tails),
                rate_abscissa: nf / (2.0 * nf.ln()).sqrt(),
                infeasible: rows.len() - tails.len(),
            }
        })
        .collect()
}

/// Slope of `ln(median tail mass)` against `n / sqrt(2 ln n)`.
pub fn bayes_rate_slope(summary: &[BayesSummary]) -> f64 {
    let x: Vec<f64> = summary.iter().map(|s| s.rate_abscissa).collect();
    let y: Vec<f64> = summary.iter().map(|s| s.median_tail_mass.ln()).collect();
    ols_slope(&x, &y)
}

/// One row per replicate; `seed` is the replicate index within `n`.
pub fn bayes_replicate_table(run: &BayesRun) -> Table {
    let mut t = Table::new(&["n", "seed", "tail_mass", "posterior_mean", "posterior_mode", "infeasible"]);
    for r in &run.replicates {
        t.push(vec![
            r.n.into(),
            r.rep.into(),
            r.tail_mass.into(),
            r.posterior_mean.into(),
            r.posterior_mode.into(),
            r.infeasible.into(),
        ]);
    }
    t
}

pub fn bayes_summary_table(summary: &[BayesSummary]) -> Table {
    let mut t = Table::new(&["n", "infeasible", "median_tail_mass", "log_median_tail_mass", "n_over_sqrt_2_ln_n"]);
    for s in summary {
        t.push(vec![
            s.n.into(),
            s.infeasible.into(),
            s.median_tail_mass.into(),
            s.median_tail_mass.ln().into(),
            s.rate_abscissa.into(),
        ]);
    }
    t
}

pub fn posterior_table(grid: &PosteriorGrid) -> Table {
    let mut t = Table::new(&["theta", "log_lik", "prior", "posterior"]);
    for i in 0..grid.len() {
        t.push(vec![
            grid.theta()[i].into(),
            grid.log_lik()[i].into(),
            grid.prior()[i].into(),
            grid.posterior()[i].into(),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// Graph ensemble

#[derive(Debug, Clone, PartialEq)]
pub struct GraphsRun {
    pub ensemble: GraphEnsemble,
    pub h0: f64,
    pub el_full: EnsembleFit,
    pub maxent_full: EnsembleFit,
    pub el_hist: EnsembleFit,
    pub maxent_hist: EnsembleFit,
}

impl GraphsRun {
    /// Largest marginal discrepancy between the histogram and full fits.
    pub fn histogram_agreement(&self) -> f64 {
        let diff = |a: &EnsembleFit, b: &EnsembleFit| {
            a.marginal.iter().zip(&b.marginal).map(|(x, y)| (x.p - y.p).abs()).fold(0.0, f64::max)
        };
        diff(&self.el_full, &self.el_hist).max(diff(&self.maxent_full, &self.maxent_hist))
    }

    /// Streams the per-graph CSV (one row per labeled graph, `2^C(N,2)` rows).
    pub fn write_graph_csv<W: Write>(&self, out: &mut W, provenance: &Provenance) -> io::Result<()> {
        writeln!(out, "{}", provenance.line())?;
        writeln!(out, "graph_id,triangle_count,weight_el,weight_maxent")?;
        for (g, &tri) in self.ensemble.triangles().iter().enumerate() {
            writeln!(
                out,
                "{g},{tri},{},{}",
                format_float(self.el_full.graph_weights[g]),
                format_float(self.maxent_full.graph_weights[g])
            )?;
        }
        Ok(())
    }

    pub fn marginal_table(&self) -> Table {
        let mut t = Table::new(&["t", "multiplicity", "p_el", "p_maxent"]);
        for (e, m) in self.el_full.marginal.iter().zip(&self.maxent_full.marginal) {
            t.push(vec![e.t.into(), e.multiplicity.into(), e.p.into(), m.p.into()]);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&[
            "method",
            "multiplier",
            "max_graph_weight",
            "marginal_mean",
            "marginal_local_maxima",
            "unimodal",
            "histogram_fit_max_abs_diff",
        ]);
        for (name, full, hist) in
            [("el", &self.el_full, &self.el_hist), ("maxent", &self.maxent_full, &self.maxent_hist)]
        {
            let p = full.marginal_probabilities();
            let diff = full.marginal.iter().zip(&hist.marginal).map(|(x, y)| (x.p - y.p).abs()).fold(0.0, f64::max);
            t.push(vec![
                name.into(),
                full.multiplier.into(),
                full.max_graph_weight().into(),
                full.marginal_mean().into(),
                graphs::local_maxima(&p).into(),
                graphs::is_unimodal(&p).into(),
                diff.into(),
            ]);
        }
        t
    }
}

pub fn graphs_experiment(n_vertices: usize, h0: f64) -> Result<GraphsRun> {
    let ensemble = graphs::enumerate(n_vertices)?;
    let el_full = graphs::fit_ensemble(&ensemble, h0, FitMethod::EmpiricalLikelihood, DEFAULT_TOL)?;
    let maxent_full = graphs::fit_ensemble(&ensemble, h0, FitMethod::MaxEntropy, DEFAULT_TOL)?;
    let el_hist = graphs::fit_histogram(&ensemble, h0, FitMethod::EmpiricalLikelihood, DEFAULT_TOL)?;
    let maxent_hist = graphs::fit_histogram(&ensemble, h0, FitMethod::MaxEntropy, DEFAULT_TOL)?;
    Ok(GraphsRun { ensemble, h0, el_full, maxent_full, el_hist, maxent_hist })
}

// ---------------------------------------------------------------------------
// Bivariate experiment

#[derive(Debug, Clone, PartialEq)]
pub struct MultiRun {
    pub seed: u64,
    pub rho: f64,
    pub shift: [f64; 2],
    pub observations: Vec<[f64; 2]>,
    pub constraints: Vec<[f64; 2]>,
    pub solution: multi::MultiSolution,
}

/// Quadrant of a point: 1 to 4 counter-clockwise from `x > 0, y > 0`,
/// 0 on an axis.
pub fn quadrant(p: [f64; 2]) -> u32 {
    match (p[0].partial_cmp(&0.0), p[1].partial_cmp(&0.0)) {
        (Some(std::cmp::Ordering::Greater), Some(std::cmp::Ordering::Greater)) => 1,
        (Some(std::cmp::Ordering::Less), Some(std::cmp::Ordering::Greater)) => 2,
        (Some(std::cmp::Ordering::Less), Some(std::cmp::Ordering::Less)) => 3,
        (Some(std::cmp::Ordering::Greater), Some(std::cmp::Ordering::Less)) => 4,
        _ => 0,
    }
}

impl MultiRun {
    /// Indices ordered by decreasing weight (ties by index).
    pub fn ranked(&self) -> Vec<usize> {
        let w = &self.solution.weights;
        let mut idx: Vec<usize> = (0..w.len()).collect();
        idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        idx
    }

    /// Whether constraint vector `i` points away from the shift.
    pub fn opposes_shift(&self, i: usize) -> bool {
        let h = self.constraints[i];
        h[0] * self.shift[0] + h[1] * self.shift[1] < 0.0
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["index", "x", "y", "h1", "h2", "norm", "weight", "rank", "quadrant", "opposes_shift"]);
        let mut rank = vec![0usize; self.constraints.len()];
        for (r, &i) in self.ranked().iter().enumerate() {
            rank[i] = r + 1;
        }
        for (i, (o, h)) in self.observations.iter().zip(&self.constraints).enumerate() {
            t.push(vec![
                i.into(),
                o[0].into(),
                o[1].into(),
                h[0].into(),
                h[1].into(),
                h[0].hypot(h[1]).into(),
                self.solution.weights[i].into(),
                rank[i].into(),
                quadrant(*o).into(),
                self.opposes_shift(i).into(),
            ]);
        }
        t
    }
}

/// Bivariate normal observations under the constraints `(X + s1, Y + s2)`.
pub fn multi_experiment(seed: u64, n: usize, rho: f64, shift: [f64; 2]) -> Result<MultiRun> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidInput(format!("correlation must lie in (-1, 1), got {rho}")));
    }
    let observations = sim::bivariate_normal(SeededStream::new(seed, 0), n, rho);
    let constraints: Vec<[f64; 2]> = observations.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
    let sample = VectorSample::from_flat(2, constraints.iter().flatten().copied().collect())?;
    let solution = multi::solve_multi(&sample, DEFAULT_TOL)?;
    Ok(MultiRun { seed, rho, shift, observations, constraints, solution })
}

// ---------------------------------------------------------------------------
// Dual-versus-primal oracle suite

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Gaussian,
    Laplace,
    HandBuilt,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Gaussian => "gaussian",
            CaseKind::Laplace => "laplace",
            CaseKind::HandBuilt => "hand",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub case: usize,
    pub kind: CaseKind,
    pub h: Vec<f64>,
    /// Sup-norm gap between the univariate dual and the primal oracle.
    pub linf_el: f64,
    /// Same for the vector solver on the one-dimensional sample.
    pub linf_multi: f64,
    /// Same for maximum entropy with target 0.
    pub linf_maxent: f64,
}

impl OracleCase {
    pub fn passes(&self, tol: f64) -> bool {
        self.linf_el <= tol && self.linf_multi <= tol && self.linf_maxent <= tol
    }
}

const HAND_BUILT: &[&[f64]] = &[
    &[-1.0, 2.0],
    &[-1.0, 0.0, 2.0],
    &[-2.0, 1.0],
    &[-1.0, 1.0],
    &[-3.0, 1.0, 1.0, 1.0],
    &[-1.0, -1.0, 2.0, 0.5],
    &[-0.5, 4.0, -2.0, 0.0, 1.0, -1.0],
    &[-1.0, 50.0],
    &[-1.0, 1e-3, 2.0, 3.0, 4.0, 5.0],
    &[0.0, 0.0, -1.0, 1.0, 0.0],
    &[-10.0, 0.1, 0.2, 0.3, 0.4, 0.5],
];

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn oracle_sample(seed: u64, case: usize) -> (CaseKind, Vec<f64>) {
    let kind = match case % 3 {
        0 => CaseKind::Gaussian,
        1 => CaseKind::Laplace,
        _ => CaseKind::HandBuilt,
    };
    if kind == CaseKind::HandBuilt {
        return (kind, HAND_BUILT[(case / 3) % HAND_BUILT.len()].to_vec());
    }
    let n = 2 + case % 5;
    let offset = [0.0, 0.5, -0.8, 1.5][(case / 5) % 4];
    let dist = if kind == CaseKind::Gaussian {
        ErrorDistribution::StandardGaussian
    } else {
        ErrorDistribution::StandardLaplace
    };
    let mut rng = SeededStream::new(seed, case as u64).rng();
    loop {
        let h: Vec<f64> = (0..n)
            .map(|_| {
                offset
                    + match dist {
                        ErrorDistribution::StandardGaussian => {
                            let mut z = [0.0];
                            sim::fill_standard_normal(&mut rng, &mut z);
                            z[0]
                        }
                        ErrorDistribution::StandardLaplace => sim::standard_laplace(&mut rng),
                    }
            })
            .collect();
        if h.iter().any(|&v| v < 0.0) && h.iter().any(|&v| v > 0.0) {
            return (kind, h);
        }
    }
}

/// Compares both dual solvers and the maximum-entropy solver with the primal
/// oracle on `cases` small samples (`n <= 6`).
pub fn oracle_suite(seed: u64, cases: usize) -> Result<Vec<OracleCase>> {
    (0..cases)
        .into_par_iter()
        .map(|case| {
            let (kind, h) = oracle_sample(seed, case);
            let sample = Sample::new(h.clone())?;
            let vector = VectorSample::from(&sample);
            let dual = el::solve(&sample, DEFAULT_TOL)?;
            let dual_multi = multi::solve_multi(&vector, DEFAULT_TOL)?;
            let ent = maxent::solve_maxent(&sample, 0.0, DEFAULT_TOL)?;
            let oracle_el = sim::primal_oracle(&vector, OracleObjective::LogLikelihood, 1e-13)?;
            let oracle_ent = sim::primal_oracle(&vector, OracleObjective::Entropy, 1e-13)?;
            Ok(OracleCase {
                case,
                kind,
                linf_el: linf(&dual.weights, &oracle_el),
                linf_multi: linf(&dual_multi.weights, &oracle_el),
                linf_maxent: linf(&ent.weights, &oracle_ent),
                h,
            })
        })
        .collect()
}

pub fn oracle_table(cases: &[OracleCase], tol: f64) -> Table {
    let mut t = Table::new(&["case", "kind", "n", "h", "linf_el", "linf_multi", "linf_maxent", "pass"]);
    for c in cases {
        let h: Vec<String> = c.h.iter().map(|v| format!("{v}")).collect();
        t.push(vec![
            c.case.into(),
            c.kind.name().into(),
            c.h.len().into(),
            h.join(";").into(),
            c.linf_el.into(),
            c.linf_multi.into(),
            c.linf_maxent.into(),
            c.passes(tol).into(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, f64::NAN, 4.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn slope_of_line() {
        assert!((ols_slope(&[1.0, 2.0, 3.0], &[2.0, 0.0, -2.0]) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn quadrant_labels() {
        assert_eq!(quadrant([1.0, 1.0]), 1);
        assert_eq!(quadrant([-1.0, 1.0]), 2);
        assert_eq!(quadrant([-1.0, -1.0]), 3);
        assert_eq!(quadrant([1.0, -1.0]), 4);
        assert_eq!(quadrant([0.0, -1.0]), 0);
    }

    #[test]
    fn replicates_are_order_independent() {
        let cfg = MisspecConfig {
            seed: 11,
            a: 1.0,
            n_list: vec![100, 300],
            reps: 6,
            dist: ErrorDistribution::StandardGaussian,
            k: 2,
        };
        let all = misspecified_replicates(&cfg).unwrap();
        let one = misspecified_replicate(&cfg, 300, 4).unwrap();
        assert_eq!(all[6 + 4], one);
        assert_eq!(all.iter().map(|r| (r.n, r.rep)).collect::<Vec<_>>()[..3], [(100, 0), (100, 1), (100, 2)]);
    }

    #[test]
    fn oracle_samples_are_feasible_and_small() {
        for case in 0..60 {
            let (_, h) = oracle_sample(5, case);
            assert!(h.len() <= 6);
            assert!(el::check_feasibility(&Sample::new(h).unwrap()));
        }
    }
}

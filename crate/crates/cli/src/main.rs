//! `el`: single-shot solves and the seeded Monte Carlo experiments, written
//! as CSV files with a `# seed=..., cmd=...` provenance line.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use empirical_likelihood::asymptotics::ErrorDistribution;
use empirical_likelihood::el::{self, Sample};
use empirical_likelihood::experiments::{self as exp, BayesConfig, MisspecConfig};
use empirical_likelihood::table::{Provenance, Table};
use empirical_likelihood::{maxent, Error, DEFAULT_TOL};

const EXIT_INFEASIBLE: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "el", version, about = "Empirical likelihood solver and experiment runner")]
struct Cli {
    /// Base seed for all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV outputs (created if missing).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Replicates per sample size.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one univariate problem and print the multiplier and top weights.
    Solve {
        /// Inline comma-separated values or a CSV file (first column).
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        /// Number of largest weights to print.
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Maximum-entropy weights for one sample.
    Maxent {
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h0: f64,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Per-index weights for the correct and the mis-specified Gaussian mean.
    ExampleGaussian {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        theta: f64,
    },
    /// Multiplier scaling under a biased constraint.
    LambdaExpansion(Misspec),
    /// Weight degeneracy under a biased constraint.
    Degeneracy(Misspec),
    /// Wilks statistic growth and its expansion, or the null replicate suite.
    Wilks {
        #[command(flatten)]
        cfg: Misspec,
        /// Number of expansion terms.
        #[arg(long, default_value_t = 4)]
        k: u32,
        /// Run the unbiased replicate suite instead.
        #[arg(long)]
        null: bool,
        /// Sample size for `--null`.
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Quantiles of the scaled second-largest weight.
    Calibrate(Misspec),
    /// Posterior concentration for Gaussian location data.
    Bayes {
        #[arg(long, value_parser = parse_n_list, default_value = "50,200,800,3200")]
        n_list: NList,
        #[arg(long, default_value_t = 0.25)]
        radius: f64,
        #[arg(long, default_value_t = 401)]
        grid: usize,
    },
    /// Triangle-count ensemble fits on all labeled graphs with N vertices.
    Graphs {
        #[arg(long = "N", default_value_t = 7)]
        vertices: usize,
        #[arg(long, default_value_t = 7.0)]
        h0: f64,
        /// Skip the per-graph CSV (2^C(N,2) rows).
        #[arg(long)]
        skip_per_graph: bool,
    },
    /// Bivariate normal weights under a shifted mean constraint.
    Multi {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, value_parser = parse_shift, default_value = "0.5,-0.1", allow_hyphen_values = true)]
        shift: [f64; 2],
    },
    /// Dual solvers against the brute-force primal oracle on small samples.
    OracleSuite {
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

type NList = Vec<usize>;

#[derive(Args, Debug)]
struct Misspec {
    /// Bias `a` of the constraint `h = a + xi`.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, value_parser = parse_n_list, default_value = "1e3,1e4,1e5,1e6")]
    n_list: NList,
    #[arg(long, default_value = "gaussian", value_parser = parse_dist)]
    dist: ErrorDistribution,
}

fn parse_n_list(s: &str) -> Result<NList, String> {
    s.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| format!("'{t}' is not a number"))?;
            if !(v.fract() == 0.0 && (3.0..=1e9).contains(&v)) {
                return Err(format!("sample size '{t}' must be an integer in [3, 1e9]"));
            }
            Ok(v as usize)
        })
        .collect()
}

fn parse_shift(s: &str) -> Result<[f64; 2], String> {
    let v = parse_values(s).map_err(|e| e.to_string())?;
    <[f64; 2]>::try_from(v).map_err(|_| "shift needs exactly two components".to_owned())
}

fn parse_dist(s: &str) -> Result<ErrorDistribution, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn parse_values(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| UsageError(format!("'{t}' is not a number")).into()))
        .collect()
}

/// Values from a file (first CSV column, `#` comments and a header skipped)
/// or an inline list.
fn read_values(spec: &str) -> anyhow::Result<Vec<f64>> {
    let path = Path::new(spec);
    if !path.is_file() {
        return parse_values(spec);
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let first = line.split(',').next().unwrap_or("").trim();
        match first.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if out.is_empty() => continue,
            Err(_) => return Err(UsageError(format!("{spec}:{}: '{first}' is not a number", i + 1)).into()),
        }
    }
    Ok(out)
}

/// The invocation without flags that cannot change file contents.
fn provenance_cmd() -> String {
    let mut parts = vec!["el".to_owned()];
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--out-dir" || a == "--threads" {
            args.next();
        } else if !(a.starts_with("--out-dir=") || a.starts_with("--threads=")) {
            parts.push(a);
        }
    }
    parts.join(" ")
}

struct Output {
    dir: PathBuf,
    provenance: Provenance,
}

impl Output {
    fn path(&self, name: &str) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        Ok(self.dir.join(name))
    }

    fn table(&self, name: &str, table: &Table) -> anyhow::Result<()> {
        self.stream(name, |w, p| table.write(w, p))
    }

    fn stream(
        &self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>, &Provenance) -> std::io::Result<()>,
    ) -> anyhow::Result<()> {
        let path = self.path(name)?;
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w, &self.provenance).and_then(|()| w.flush()).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }
}

fn short(v: f64) -> String {
    let s = format!("{v:.10}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

fn top_indices(w: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn misspec_config(seed: u64, reps: usize, cfg: &Misspec, k: u32) -> MisspecConfig {
    MisspecConfig { seed, a: cfg.a, n_list: cfg.n_list.clone(), reps, dist: cfg.dist, k }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let explicit_dir = cli.out_dir.is_some();
    let seed_default = match cli.command {
        Command::Calibrate(_) => 20240611,
        _ => 1,
    };
    let seed = cli.seed.unwrap_or(seed_default);
    let uses_seed = !matches!(cli.command, Command::Solve { .. } | Command::Maxent { .. } | Command::Graphs { .. });
    let out = Output {
        dir: cli.out_dir.unwrap_or_else(|| PathBuf::from(".")),
        provenance: Provenance::new(uses_seed.then_some(seed), provenance_cmd()),
    };

    match cli.command {
        Command::Solve { h, top } => {
            let sample = Sample::new(read_values(&h)?)?;
            let sol = el::solve(&sample, DEFAULT_TOL)?;
            if !sol.feasible {
                eprintln!("infeasible: zero is not inside the range of h");
                return Ok(ExitCode::from(EXIT_INFEASIBLE));
            }
            println!("lambda_hat={}", short(sol.lambda_hat));
            println!("wilks={}", short(sol.wilks()?));
            println!("log_likelihood={}", short(sol.log_likelihood));
            println!("top weights:");
            for i in top_indices(&sol.weights, top) {
                println!("  index={i} h={} weight={:.4}", sample.values()[i], sol.weights[i]);
            }
            if explicit_dir {
                let mut t = Table::new(&["index", "h", "weight"]);
                for (i, (&v, &w)) in sample.values().iter().zip(&sol.weights).enumerate() {
                    t.push(vec![i.into(), v.into(), w.into()]);
                }
                out.table("solve.csv", &t)?;
            }
        }
        Command::Maxent { h, h0, top } => {
            let sample = Sample::new(read_values(&h)?)?;
            let sol = maxent::solve_maxent(&sample, h0, DEFAULT_TOL)?;
            println!("kappa={}", short(sol.kappa));
            println!("top weights:");
            for i in top_indices(&sol.weights, top) {
                println!("  index={i} h={} weight={:.4}", sample.values()[i], sol.weights[i]);
            }
            if explicit_dir {
                let mut t = Table::new(&["index", "h", "weight"]);
                for (i, (&v, &w)) in sample.values().iter().zip(&sol.weights).enumerate() {
                    t.push(vec![i.into(), v.into(), w.into()]);
                }
                out.table("maxent.csv", &t)?;
            }
        }
        Command::ExampleGaussian { n, theta } => {
            let ex = exp::gaussian_example(seed, n, theta)?;
            out.table("example_gaussian.csv", &ex.to_table())?;
            if ex.misspecified.feasible {
                println!(
                    "max weight index={} min observation index={} n*w_max={} w_max/w_second={}",
                    ex.misspecified.max_weight_index,
                    ex.argmin_observation,
                    short(ex.n_max_weight()),
                    short(ex.max_to_second())
                );
            } else {
                println!("mis-specified constraint infeasible");
            }
        }
        Command::LambdaExpansion(m) => {
            let cfg = misspec_config(seed, cli.reps.unwrap_or(200), &m, 1);
            let reps = exp::misspecified_replicates(&cfg)?;
            let summary = exp::summarize_misspecified(&cfg, &reps);
            out.table("lambda_replicates.csv", &exp::lambda_replicate_table(&reps))?;
            out.table("lambda_summary.csv", &exp::lambda_summary_table(&summary, cfg.a))?;
            for s in &summary {
                println!(
                    "n={} median M_n*lambda={} median n*(lambda+1/h_max)={}",
                    s.n,
                    short(s.median_scaled_lambda),
                    short(s.median_scaled_gap)
                );
            }
        }
        Command::Degeneracy(m) => {
            let cfg = misspec_config(seed, cli.reps.unwrap_or(200), &m, 1);
            let reps = exp::misspecified_replicates(&cfg)?;
            let summary = exp::summarize_misspecified(&cfg, &reps);
            out.table("degeneracy_replicates.csv", &exp::degeneracy_replicate_table(&reps, cfg.a))?;
            out.table("degeneracy_summary.csv", &exp::degeneracy_summary_table(&summary))?;
            for s in &summary {
                println!(
                    "n={} median w_max*M_n/|a|={} bounded second weight={} min n*w_min={}",
                    s.n,
                    short(s.median_scaled_w_max),
                    short(s.frac_second_bounded),
                    short(s.min_n_min_weight)
                );
            }
        }
        Command::Wilks { cfg: m, k, null, n } => {
            if null {
                let reps = exp::null_wilks(seed, n, cli.reps.unwrap_or(500), m.dist)?;
                out.table("wilks_null.csv", &exp::null_table(&reps))?;
                let w: Vec<f64> = reps.iter().map(|r| r.wilks).collect();
                let finite: Vec<f64> = w.iter().copied().filter(|v| v.is_finite()).collect();
                println!(
                    "mean={} p95={} infeasible={}",
                    short(finite.iter().sum::<f64>() / finite.len() as f64),
                    short(exp::quantile(&w, 0.95)),
                    w.len() - finite.len()
                );
            } else {
                if k == 0 {
                    bail!("--k must be at least 1");
                }
                let cfg = misspec_config(seed, cli.reps.unwrap_or(200), &m, k);
                let reps = exp::misspecified_replicates(&cfg)?;
                let summary = exp::summarize_misspecified(&cfg, &reps);
                out.table("wilks_replicates.csv", &exp::wilks_replicate_table(&reps, cfg.a, k))?;
                out.table("wilks_summary.csv", &exp::wilks_summary_table(&summary, k))?;
                for s in &summary {
                    let errs: Vec<String> = s.median_wilks_rel_err.iter().map(|&e| short(e)).collect();
                    println!(
                        "n={} median L*M_n/(2n|a|)={} median rel err by k=[{}]",
                        s.n,
                        short(s.median_scaled_wilks),
                        errs.join(", ")
                    );
                }
            }
        }
        Command::Calibrate(m) => {
            let cfg = misspec_config(seed, cli.reps.unwrap_or(400), &m, 1);
            let reps = exp::misspecified_replicates(&cfg)?;
            let table = exp::second_weight_calibration(&cfg, &reps);
            out.table("calibration_second_weight.csv", &table)?;
        }
        Command::Bayes { n_list, radius, grid } => {
            let cfg = BayesConfig {
                seed,
                n_list,
                reps: cli.reps.unwrap_or(100),
                radius,
                grid_size: grid,
                ..BayesConfig::default()
            };
            let run = exp::bayes_consistency(&cfg)?;
            let summary = exp::summarize_bayes(&cfg, &run);
            out.table("bayes_replicates.csv", &exp::bayes_replicate_table(&run))?;
            out.table("bayes_summary.csv", &exp::bayes_summary_table(&summary))?;
            for (n, g) in &run.grids {
                out.table(&format!("bayes_posterior_n{n}.csv"), &exp::posterior_table(g))?;
            }
            for s in &summary {
                println!("n={} median tail mass={}", s.n, short(s.median_tail_mass));
            }
            println!("slope={}", exp::bayes_rate_slope(&summary));
        }
        Command::Graphs { vertices, h0, skip_per_graph } => {
            let run = exp::graphs_experiment(vertices, h0)?;
            if !skip_per_graph {
                out.stream("graphs_weights.csv", |w, p| run.write_graph_csv(w, p))?;
            }
            out.table("graphs_marginal.csv", &run.marginal_table())?;
            out.table("graphs_summary.csv", &run.summary_table())?;
            println!(
                "max graph weight el={} maxent={}",
                short(run.el_full.max_graph_weight()),
                short(run.maxent_full.max_graph_weight())
            );
        }
        Command::Multi { n, rho, shift } => {
            let run = exp::multi_experiment(seed, n, rho, shift)?;
            out.table("multi.csv", &run.to_table())?;
            for &i in run.ranked().iter().take(3) {
                let o = run.observations[i];
                println!(
                    "index={i} x={} y={} weight={} quadrant={}",
                    short(o[0]),
                    short(o[1]),
                    short(run.solution.weights[i]),
                    exp::quadrant(o)
                );
            }
        }
        Command::OracleSuite { cases, tol } => {
            let results = exp::oracle_suite(seed, cases)?;
            out.table("oracle_suite.csv", &exp::oracle_table(&results, tol))?;
            let failed = results.iter().filter(|c| !c.passes(tol)).count();
            let worst = results.iter().map(|c| c.linf_el.max(c.linf_multi).max(c.linf_maxent)).fold(0.0, f64::max);
            println!("cases={} failed={failed} worst={worst:e}", results.len());
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                return ExitCode::from(2);
            }
            match err.downcast_ref::<Error>() {
                Some(Error::Infeasible(_) | Error::RankDeficient { .. } | Error::DegeneratePosterior) => {
                    ExitCode::from(EXIT_INFEASIBLE)
                }
                Some(Error::Convergence { .. } | Error::ConvergenceMulti { .. }) => ExitCode::from(EXIT_CONVERGENCE),
                Some(Error::InvalidInput(_) | Error::InvalidPrior(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

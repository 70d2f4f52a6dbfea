use thiserror::Error;

/// Errors raised by the solvers and experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The moment constraint admits no strictly positive weights.
    #[error("moment constraint is infeasible: {0}")]
    Infeasible(String),

    /// `lambda` lies outside the open interval where every `1 + lambda * h_i > 0`.
    #[error("lambda = {lambda} is outside the feasible interval: 1 + lambda * h[{index}] = {value}")]
    Domain { lambda: f64, index: usize, value: f64 },

    #[error("root finder did not converge after {iterations} iterations; last bracket [{lo}, {hi}]")]
    Convergence { iterations: usize, lo: f64, hi: f64 },

    #[error("Newton solver did not converge after {iterations} iterations; last iterate {last:?}")]
    ConvergenceMulti { iterations: usize, last: Vec<f64> },

    /// Constraint vectors span fewer than `dim` dimensions.
    #[error("constraint vectors are rank deficient (rank {rank} < dimension {dim})")]
    RankDeficient { rank: usize, dim: usize },

    #[error("statistic is undefined for an infeasible solution")]
    UndefinedStatistic,

    #[error("every grid point is infeasible; the posterior is degenerate")]
    DegeneratePosterior,

    #[error("invalid prior: {0}")]
    InvalidPrior(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

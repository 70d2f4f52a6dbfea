//! Empirical likelihood under possibly mis-specified estimating equations.
//!
//! The univariate dual solver lives in [`el`], its d-dimensional counterpart
//! in [`multi`]. [`asymptotics`] holds the closed-form large-sample
//! predictions under a biased constraint, [`maxent`] the exponential-tilting
//! alternative, [`graphs`] the exhaustive triangle-count ensemble, and
//! [`bayes`] the grid posterior. [`sim`] provides seeded generators and the
//! brute-force primal oracle used to cross-check the dual solvers, and
//! [`experiments`] wires everything into reproducible Monte Carlo runs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bayes;
pub mod el;
pub mod error;
pub mod experiments;
pub mod graphs;
pub mod lp;
pub mod maxent;
pub mod multi;
pub mod sim;
pub mod table;

pub use error::{Error, Result};

/// Default solver tolerance (relative, see [`el::solve_lambda`]).
pub const DEFAULT_TOL: f64 = 1e-12;

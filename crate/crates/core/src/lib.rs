//! Penalty-level selection for ℓ1-penalized regression.
//!
//! Two Gaussian approximations of the penalty level (a normal tail quantile
//! and a Gaussian-multiplier Monte Carlo quantile), solvers for the lasso,
//! the square-root lasso and the Poisson weighted-score estimator, a K-fold
//! cross-validation baseline, and a simulation harness comparing the three.

pub mod cv;
pub mod error;
pub mod io;
pub mod model;
pub mod normal;
pub mod penalty;
pub mod rng;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use model::{gradient, loss, score_vectors, standardize, Coefficients, Dataset, Family, ProblemSpec};
pub use penalty::{coverage_check, lambda_mdt, lambda_stein, Method, PenaltyEstimate};
pub use solver::{fit, fit_lasso, fit_poisson_wsf, fit_sqrt_lasso, kkt_residual, FitResult, SolverConfig};

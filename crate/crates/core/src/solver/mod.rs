//! ℓ1-penalized fitting: β̂ = argmin L(β) + λ‖β‖₁.
//!
//! All three solvers run on a column-major copy of the design ([`Design`]),
//! which carries each column's mean square so they also work on training
//! subsets whose columns are no longer exactly unit scale.

mod lasso;
mod poisson;
mod sqrt_lasso;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gradient, Coefficients, Dataset, Family, ProblemSpec};

pub use lasso::{fit_lasso, fit_lasso_traced};
pub use poisson::{fit_poisson_wsf, fit_poisson_wsf_traced};
pub use sqrt_lasso::{fit_sqrt_lasso, fit_sqrt_lasso_alternating};

/// Coefficients smaller than this in magnitude are reported as exactly zero.
pub const ZERO_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// KKT residual tolerance.
    pub tol: f64,
    /// Cap on coordinate sweeps (lasso) or proximal steps (Poisson).
    pub max_sweeps: usize,
    pub sqrt_lasso_outer_iters: usize,
    pub line_search_shrink: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-7,
            max_sweeps: 10_000,
            sqrt_lasso_outer_iters: 50,
            line_search_shrink: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_sweeps == 0 || self.sqrt_lasso_outer_iters == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        if !(self.line_search_shrink > 0.0 && self.line_search_shrink < 1.0) {
            return Err(Error::Config(format!(
                "line_search_shrink = {} not in (0, 1)",
                self.line_search_shrink
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Coefficients,
    pub lambda: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub converged: bool,
}

/// Column-major copy of a design matrix.
#[derive(Debug, Clone)]
pub struct Design {
    n: usize,
    p: usize,
    cols: Vec<f64>,
    mean_sq: Vec<f64>,
}

impl Design {
    pub fn new(dataset: &Dataset) -> Self {
        let (n, p) = (dataset.n(), dataset.p());
        let mut cols = vec![0.0; n * p];
        for i in 0..n {
            for (j, &v) in dataset.row(i).iter().enumerate() {
                cols[j * n + i] = v;
            }
        }
        let mean_sq = cols
            .chunks_exact(n)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>() / n as f64)
            .collect();
        Design {
            n,
            p,
            cols,
            mean_sq,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub(crate) fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    pub(crate) fn mean_sq(&self, j: usize) -> f64 {
        self.mean_sq[j]
    }

    /// (1/n) x_j' w for every column.
    pub(crate) fn mean_cross(&self, w: &[f64]) -> Vec<f64> {
        let nf = self.n as f64;
        self.cols
            .chunks_exact(self.n)
            .map(|c| dot(c, w) / nf)
            .collect()
    }

    pub(crate) fn predictor(&self, beta: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(b, self.col(j), &mut u);
            }
        }
        u
    }
}

/// Four independent partial sums so the loop pipelines and vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Subgradient-optimality violation given the smooth-part gradient `g`.
pub(crate) fn kkt_from_gradient(g: &[f64], beta: &[f64], lambda: f64) -> f64 {
    g.iter().zip(beta).fold(0.0_f64, |worst, (&gj, &bj)| {
        let v = if bj > 0.0 {
            (gj + lambda).abs()
        } else if bj < 0.0 {
            (gj - lambda).abs()
        } else {
            (gj.abs() - lambda).max(0.0)
        };
        worst.max(v)
    })
}

pub(crate) fn snap_zeros(beta: &mut [f64]) -> bool {
    let mut changed = false;
    for b in beta.iter_mut() {
        if *b != 0.0 && b.abs() < ZERO_SNAP {
            *b = 0.0;
            changed = true;
        }
    }
    changed
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda = {lambda} must be finite and >= 0")));
    }
    Ok(())
}

fn check_standardized(dataset: &Dataset) -> Result<()> {
    if !dataset.is_standardized() {
        return Err(Error::NotStandardized);
    }
    Ok(())
}

/// KKT residual of `beta` for L(β) + λ‖β‖₁.
pub fn kkt_residual(
    spec: &ProblemSpec,
    dataset: &Dataset,
    beta: &Coefficients,
    lambda: f64,
) -> Result<f64> {
    let g = gradient(spec, dataset, beta)?;
    Ok(kkt_from_gradient(&g, beta.as_slice(), lambda))
}

/// ‖∇L(0)‖∞, the smallest λ at which β̂ = 0.
pub fn lambda_max(family: Family, dataset: &Dataset) -> Result<f64> {
    let spec = ProblemSpec {
        family,
        alpha: 0.5,
        c: 2.0,
        theta: 1.0,
    };
    let g = gradient(&spec, dataset, &Coefficients::zeros(dataset.p()))?;
    Ok(g.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Fits the family's estimator on a standardized dataset.
pub fn fit(family: Family, dataset: &Dataset, lambda: f64, config: &SolverConfig) -> Result<FitResult> {
    match family {
        Family::Lasso => fit_lasso(dataset, lambda, config),
        Family::SqrtLasso => fit_sqrt_lasso(dataset, lambda, config),
        Family::PoissonWsf => fit_poisson_wsf(dataset, lambda, config),
    }
}

/// Fits on a prepared design without the standardization precondition,
/// warm-starting from `warm` when given.
pub fn fit_design(
    family: Family,
    design: &Design,
    y: &[f64],
    lambda: f64,
    config: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<FitResult> {
    check_lambda(lambda)?;
    config.validate()?;
    if y.len() != design.n() {
        return Err(Error::Dimension("response length does not match design".into()));
    }
    if let Some(w) = warm {
        if w.len() != design.p() {
            return Err(Error::Dimension("warm start has wrong length".into()));
        }
    }
    match family {
        Family::Lasso => lasso::solve(design, y, lambda, config, warm, None),
        Family::SqrtLasso => sqrt_lasso::solve(design, y, lambda, config, warm),
        Family::PoissonWsf => poisson::solve(design, y, lambda, config, warm, None),
    }
}

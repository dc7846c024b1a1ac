//! Square-root lasso, ‖Y − Xβ‖/√n + λ‖β‖₁.
//!
//! The default solver is cyclic coordinate descent on the objective itself.
//! With partial residual a, A = ‖a‖²/n, c = x_j'a/n and s = ‖x_j‖²/n, the
//! coordinate minimizer is 0 when |c| ≤ λ√A and otherwise
//!
//! ```text
//! b = (c − sign(c) λ √(q s / (s − λ²))) / s,   q = A − c²/s.
//! ```
//!
//! Near the bottom of a path the active columns are close to collinear and
//! the active-set sweeps can drift along an almost flat valley long after the
//! KKT conditions hold, so the full residual is checked every few sweeps.
//!
//! [`fit_sqrt_lasso_alternating`] solves the same problem through the
//! variational form min over σ > 0 of ‖Y − Xβ‖²/(2nσ) + σ/2 + λ‖β‖₁, alternating
//! σ̂ = ‖Y − Xβ̂‖/√n with a lasso at penalty λσ̂.

use super::{
    axpy, check_lambda, check_standardized, dot, kkt_from_gradient, lasso, snap_zeros, Design,
    FitResult, SolverConfig,
};
use crate::error::{Error, Result};
use crate::model::{Coefficients, Dataset};

/// Noise levels below this are treated as an interpolating fit.
const MIN_SIGMA: f64 = 1e-12;
/// Same, relative to ‖y‖/√n. Coordinate descent only creeps towards the
/// interpolating solution, so it is recognized once the fit explains all but
/// this fraction of the response scale.
const REL_SIGMA_FLOOR: f64 = 1e-6;
/// Active-set sweeps between full KKT checks.
const KKT_EVERY: usize = 10;

pub fn fit_sqrt_lasso(dataset: &Dataset, lambda: f64, config: &SolverConfig) -> Result<FitResult> {
    check_standardized(dataset)?;
    check_lambda(lambda)?;
    config.validate()?;
    solve(&Design::new(dataset), dataset.y(), lambda, config, None)
}

/// Square-root lasso through the σ̂ / lasso alternation.
pub fn fit_sqrt_lasso_alternating(
    dataset: &Dataset,
    lambda: f64,
    config: &SolverConfig,
) -> Result<FitResult> {
    check_standardized(dataset)?;
    check_lambda(lambda)?;
    config.validate()?;
    solve_alternating(&Design::new(dataset), dataset.y(), lambda, config, None)
}

fn sigma_floor(y: &[f64]) -> f64 {
    (REL_SIGMA_FLOOR * (dot(y, y) / y.len() as f64).sqrt()).max(MIN_SIGMA)
}

fn residual_scale(design: &Design, y: &[f64], beta: &[f64]) -> (Vec<f64>, f64) {
    let u = design.predictor(beta);
    let r: Vec<f64> = y.iter().zip(&u).map(|(y, u)| y - u).collect();
    let sigma = (dot(&r, &r) / y.len() as f64).sqrt();
    (r, sigma)
}

fn sqrt_kkt(design: &Design, r: &[f64], sigma: f64, beta: &[f64], lambda: f64) -> f64 {
    let mut g = design.mean_cross(r);
    g.iter_mut().for_each(|v| *v = -*v / sigma);
    kkt_from_gradient(&g, beta, lambda)
}

fn objective(sigma: f64, beta: &[f64], lambda: f64) -> f64 {
    sigma + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Exact minimization over coordinate j; keeps `r` and `ms = ‖r‖²/n` current.
fn update(
    design: &Design,
    j: usize,
    beta: &mut [f64],
    r: &mut [f64],
    ms: &mut f64,
    lambda: f64,
) -> f64 {
    let col = design.col(j);
    let s = design.mean_sq(j);
    let old = beta[j];
    let cross = dot(col, r) / design.n() as f64;
    let c = cross + old * s;
    let a = (*ms + 2.0 * old * cross + old * old * s).max(0.0);
    let new = if c.abs() <= lambda * a.sqrt() || s <= lambda * lambda {
        0.0
    } else {
        let q = (a - c * c / s).max(0.0);
        (c - c.signum() * lambda * (q * s / (s - lambda * lambda)).sqrt()) / s
    };
    let delta = new - old;
    if delta != 0.0 {
        axpy(-delta, col, r);
        beta[j] = new;
        *ms = (a - 2.0 * new * c + new * new * s).max(0.0);
    }
    delta
}

pub(super) fn solve(
    design: &Design,
    y: &[f64],
    lambda: f64,
    config: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<FitResult> {
    let p = design.p();
    let mut beta = warm.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let floor = sigma_floor(y);
    let (mut r, mut sigma) = residual_scale(design, y, &beta);
    let mut ms = sigma * sigma;
    let mut sweeps = 0;
    let mut kkt_value = f64::INFINITY;
    let mut converged = false;

    'outer: while sweeps < config.max_sweeps {
        if sigma < floor {
            return Err(Error::ZeroResidual);
        }
        let mut moved = false;
        for j in 0..p {
            moved |= update(design, j, &mut beta, &mut r, &mut ms, lambda) != 0.0;
        }
        sweeps += 1;
        (r, sigma) = residual_scale(design, y, &beta);
        ms = sigma * sigma;
        if sigma < floor {
            return Err(Error::ZeroResidual);
        }
        kkt_value = sqrt_kkt(design, &r, sigma, &beta, lambda);
        if kkt_value <= config.tol {
            converged = true;
            break;
        }
        if !moved {
            break;
        }

        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        if active.is_empty() {
            continue;
        }
        for round in 1.. {
            if sweeps >= config.max_sweeps {
                break 'outer;
            }
            if round % KKT_EVERY == 0 {
                (r, sigma) = residual_scale(design, y, &beta);
                ms = sigma * sigma;
                if sigma < floor {
                    return Err(Error::ZeroResidual);
                }
                kkt_value = sqrt_kkt(design, &r, sigma, &beta, lambda);
                if kkt_value <= config.tol {
                    converged = true;
                    break 'outer;
                }
            }
            let mut max_change = 0.0_f64;
            for &j in &active {
                let d = update(design, j, &mut beta, &mut r, &mut ms, lambda);
                max_change = max_change.max(d.abs() * design.mean_sq(j).sqrt());
            }
            sweeps += 1;
            if ms.sqrt() < floor || max_change <= 0.1 * config.tol * ms.sqrt() {
                break;
            }
        }
    }

    if snap_zeros(&mut beta) || !converged {
        (r, sigma) = residual_scale(design, y, &beta);
        if sigma < floor {
            return Err(Error::ZeroResidual);
        }
        kkt_value = sqrt_kkt(design, &r, sigma, &beta, lambda);
        converged = kkt_value <= config.tol;
    }
    Ok(FitResult {
        objective: objective(sigma, &beta, lambda),
        beta: Coefficients::new(beta)?,
        lambda,
        iterations: sweeps,
        kkt_residual: kkt_value,
        converged,
    })
}

pub(super) fn solve_alternating(
    design: &Design,
    y: &[f64],
    lambda: f64,
    config: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<FitResult> {
    let p = design.p();
    let mut beta = warm.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let floor = sigma_floor(y);
    let (mut r, mut sigma) = residual_scale(design, y, &beta);
    if sigma < floor {
        return Err(Error::ZeroResidual);
    }
    let mut kkt_value = sqrt_kkt(design, &r, sigma, &beta, lambda);
    let mut sweeps = 0;
    let mut converged = kkt_value <= config.tol;

    for _ in 0..config.sqrt_lasso_outer_iters {
        if converged {
            break;
        }
        let inner_config = SolverConfig {
            tol: 0.5 * config.tol * sigma,
            ..config.clone()
        };
        let inner = lasso::solve(design, y, lambda * sigma, &inner_config, Some(&beta), None)?;
        sweeps += inner.iterations;
        beta = inner.beta.into_vec();

        let (r_new, sigma_new) = residual_scale(design, y, &beta);
        if sigma_new < floor {
            return Err(Error::ZeroResidual);
        }
        let change = (sigma_new - sigma).abs();
        r = r_new;
        sigma = sigma_new;
        kkt_value = sqrt_kkt(design, &r, sigma, &beta, lambda);
        converged = kkt_value <= config.tol;
        if change < config.tol * sigma {
            break;
        }
    }

    Ok(FitResult {
        objective: objective(sigma, &beta, lambda),
        beta: Coefficients::new(beta)?,
        lambda,
        iterations: sweeps,
        kkt_residual: kkt_value,
        converged,
    })
}

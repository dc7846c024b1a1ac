//! Proximal gradient with backtracking for the Poisson weighted-score loss
//! (2/n) Σ (y_i e^{−x_i'β/2} + e^{x_i'β/2}) + λ‖β‖₁.
//!
//! A trial step is accepted when the loss sits below its quadratic model,
//! L(β⁺) ≤ L(β) + ∇L(β)'Δ + ‖Δ‖²/(2t), which makes the composite objective
//! decrease by at least ‖Δ‖²/(2t). Trials that cross the exponent guard are
//! shrunk like any other rejected step.

use super::{
    axpy, check_lambda, check_standardized, kkt_from_gradient, snap_zeros, soft_threshold, Design,
    FitResult, SolverConfig,
};
use crate::error::{Error, Result};
use crate::model::{gradient_weights, loss_from_predictor, Coefficients, Dataset, Family, EXP_GUARD};

const INITIAL_STEP: f64 = 1.0;
const MIN_STEP: f64 = 1e-20;

pub fn fit_poisson_wsf(dataset: &Dataset, lambda: f64, config: &SolverConfig) -> Result<FitResult> {
    check_standardized(dataset)?;
    check_lambda(lambda)?;
    config.validate()?;
    solve(&Design::new(dataset), dataset.y(), lambda, config, None, None)
}

/// Like [`fit_poisson_wsf`], also returning the objective after every
/// accepted step (the first entry is the starting objective).
pub fn fit_poisson_wsf_traced(
    dataset: &Dataset,
    lambda: f64,
    config: &SolverConfig,
) -> Result<(FitResult, Vec<f64>)> {
    check_standardized(dataset)?;
    check_lambda(lambda)?;
    config.validate()?;
    let mut trace = Vec::new();
    let fit = solve(&Design::new(dataset), dataset.y(), lambda, config, None, Some(&mut trace))?;
    Ok((fit, trace))
}

fn l1(beta: &[f64]) -> f64 {
    beta.iter().map(|b| b.abs()).sum()
}

/// L(u + du) − L(u), summed term by term with expm1 so that small steps are
/// not lost to cancellation against the size of L.
fn loss_change(y: &[f64], u: &[f64], du: &[f64]) -> f64 {
    let total: f64 = y
        .iter()
        .zip(u.iter().zip(du))
        .map(|(&y, (&u, &d))| {
            let h = 0.5 * d;
            let mut term = (0.5 * u).exp() * h.exp_m1();
            if y != 0.0 {
                term += y * (-0.5 * u).exp() * (-h).exp_m1();
            }
            term
        })
        .sum();
    2.0 * total / y.len() as f64
}

fn smooth_gradient(design: &Design, y: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let w = gradient_weights(Family::PoissonWsf, y, u)?;
    Ok(design.mean_cross(&w))
}

pub(super) fn solve(
    design: &Design,
    y: &[f64],
    lambda: f64,
    config: &SolverConfig,
    warm: Option<&[f64]>,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<FitResult> {
    if y.iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("Poisson responses must be non-negative".into()));
    }
    let p = design.p();
    let mut beta = warm.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let mut u = design.predictor(&beta);
    let mut value = loss_from_predictor(Family::PoissonWsf, y, &u)?;
    if let Some(t) = trace.as_deref_mut() {
        t.push(value + lambda * l1(&beta));
    }

    let mut step = INITIAL_STEP;
    let mut iterations = 0;
    let mut g = smooth_gradient(design, y, &u)?;
    let mut kkt_value = kkt_from_gradient(&g, &beta, lambda);
    let mut trial = vec![0.0; p];
    let mut du = vec![0.0; u.len()];

    while kkt_value > config.tol && iterations < config.max_sweeps {
        iterations += 1;
        let accepted = loop {
            du.iter_mut().for_each(|v| *v = 0.0);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for j in 0..p {
                trial[j] = soft_threshold(beta[j] - step * g[j], step * lambda);
                let d = trial[j] - beta[j];
                if d != 0.0 {
                    axpy(d, design.col(j), &mut du);
                    lin += g[j] * d;
                    sq += d * d;
                }
            }
            if sq == 0.0 {
                break false;
            }
            let within_guard = u.iter().zip(&du).all(|(a, b)| (a + b).abs() <= EXP_GUARD);
            if within_guard && loss_change(y, &u, &du) <= lin + sq / (2.0 * step) {
                break true;
            }
            step *= config.line_search_shrink;
            if step < MIN_STEP {
                break false;
            }
        };
        if !accepted {
            break;
        }
        std::mem::swap(&mut beta, &mut trial);
        u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
        value = loss_from_predictor(Family::PoissonWsf, y, &u)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push(value + lambda * l1(&beta));
        }
        g = smooth_gradient(design, y, &u)?;
        kkt_value = kkt_from_gradient(&g, &beta, lambda);
        step /= config.line_search_shrink;
    }

    if snap_zeros(&mut beta) {
        u = design.predictor(&beta);
        value = loss_from_predictor(Family::PoissonWsf, y, &u)?;
        g = smooth_gradient(design, y, &u)?;
        kkt_value = kkt_from_gradient(&g, &beta, lambda);
    }
    Ok(FitResult {
        objective: value + lambda * l1(&beta),
        beta: Coefficients::new(beta)?,
        lambda,
        iterations,
        kkt_residual: kkt_value,
        converged: kkt_value <= config.tol,
    })
}

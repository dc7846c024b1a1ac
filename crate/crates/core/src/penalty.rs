//! Penalty-level estimators.
//!
//! Both estimators target the smallest λ with P(c‖∇L(β*)‖∞ ≤ λ) ≥ 1 − α.
//! [`lambda_mdt`] uses the normal tail quantile Φ⁻¹(1 − α/2p) for each
//! coordinate; [`lambda_stein`] simulates the maximum of the Gaussian
//! counterpart of √n∇L(β*) with one multiplier per observation and takes its
//! empirical (1 − α)-quantile.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gradient, Coefficients, Dataset, Family, ProblemSpec};
use crate::normal::phi_inv_upper;
use crate::rng::stream_rng;

pub const MIN_DRAWS: usize = 100;
pub const DEFAULT_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "mdt")]
    Mdt,
    #[serde(rename = "stein_mc")]
    SteinMc,
    #[serde(rename = "cv")]
    Cv,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mdt => "mdt",
            Method::SteinMc => "stein_mc",
            Method::Cv => "cv",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mdt" => Ok(Method::Mdt),
            "stein" | "stein_mc" | "stein-mc" => Ok(Method::SteinMc),
            "cv" => Ok(Method::Cv),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// A selected penalty level with the quantities that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyEstimate {
    pub lambda: f64,
    pub method: Method,
    /// Φ⁻¹(1 − α/2p) for MDT, z₁₋α for the Monte Carlo estimator.
    pub quantile: Option<f64>,
    pub draws: usize,
    pub seed: Option<u64>,
}

/// How Gaussian multipliers e_i become the simulated sums for each family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierScheme {
    /// Σ σ x_ij e_i
    Lasso { sigma: f64 },
    /// Σ x_ij e_i / √(Σ e_k² / n)
    SqrtLasso,
    /// Σ x_ij e_i
    PoissonWsf,
}

impl MultiplierScheme {
    pub fn for_spec(spec: &ProblemSpec) -> Self {
        match spec.family {
            Family::Lasso => MultiplierScheme::Lasso { sigma: spec.theta },
            Family::SqrtLasso => MultiplierScheme::SqrtLasso,
            Family::PoissonWsf => MultiplierScheme::PoissonWsf,
        }
    }

    fn factor(self, e: &[f64]) -> f64 {
        match self {
            MultiplierScheme::Lasso { sigma } => sigma,
            MultiplierScheme::SqrtLasso => {
                let ms = e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64;
                1.0 / ms.sqrt()
            }
            MultiplierScheme::PoissonWsf => 1.0,
        }
    }
}

/// λ̂₁ = c θ Φ⁻¹(1 − α/2p) / √n.
pub fn lambda_mdt(spec: &ProblemSpec, n: usize, p: usize) -> Result<PenaltyEstimate> {
    spec.validate()?;
    if n == 0 || p == 0 {
        return Err(Error::Domain(format!("need n, p >= 1, got n = {n}, p = {p}")));
    }
    let tail = spec.alpha / (2.0 * p as f64);
    if tail >= 1.0 {
        return Err(Error::Domain(format!("alpha / 2p = {tail} >= 1")));
    }
    let quantile = phi_inv_upper(tail)?;
    Ok(PenaltyEstimate {
        lambda: spec.c * spec.theta * quantile / (n as f64).sqrt(),
        method: Method::Mdt,
        quantile: Some(quantile),
        draws: 0,
        seed: None,
    })
}

/// Draws T_b = max_j |(1/√n) Σ_i m_ij(e)| for b = 0..draws, in draw order.
/// Draw b uses stream b of `seed`, so the result does not depend on how the
/// draws are scheduled across threads.
pub fn max_statistic_draws(
    scheme: MultiplierScheme,
    dataset: &Dataset,
    draws: usize,
    seed: u64,
) -> Vec<f64> {
    let (n, p) = (dataset.n(), dataset.p());
    let root_n = (n as f64).sqrt();
    (0..draws)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; p]),
            |(e, sums), b| {
                let mut rng = stream_rng(seed, b as u64);
                for v in e.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                sums.iter_mut().for_each(|s| *s = 0.0);
                for (i, &ei) in e.iter().enumerate() {
                    for (s, &x) in sums.iter_mut().zip(dataset.row(i)) {
                        *s += x * ei;
                    }
                }
                let max = sums.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
                scheme.factor(e) * max / root_n
            },
        )
        .collect()
}

/// Index (1-based) of the order statistic used as the (1 − α) quantile.
pub fn quantile_rank(alpha: f64, draws: usize) -> usize {
    // the small offset keeps (1 - 0.1) * 1000 from rounding up to 901
    let k = ((1.0 - alpha) * draws as f64 - 1e-9).ceil();
    (k as usize).clamp(1, draws)
}

/// z₁₋α without the standardization precondition.
pub fn stein_quantile(spec: &ProblemSpec, dataset: &Dataset, draws: usize, seed: u64) -> Result<f64> {
    spec.validate()?;
    if draws < MIN_DRAWS {
        return Err(Error::InsufficientDraws(draws));
    }
    let mut stats = max_statistic_draws(MultiplierScheme::for_spec(spec), dataset, draws, seed);
    stats.sort_by(f64::total_cmp);
    Ok(stats[quantile_rank(spec.alpha, draws) - 1])
}

/// λ̂₂ = c z₁₋α / √n.
pub fn lambda_stein(
    spec: &ProblemSpec,
    dataset: &Dataset,
    draws: usize,
    seed: u64,
) -> Result<PenaltyEstimate> {
    if !dataset.is_standardized() {
        return Err(Error::NotStandardized);
    }
    let z = stein_quantile(spec, dataset, draws, seed)?;
    Ok(PenaltyEstimate {
        lambda: spec.c * z / (dataset.n() as f64).sqrt(),
        method: Method::SteinMc,
        quantile: Some(z),
        draws,
        seed: Some(seed),
    })
}

/// Whether c‖∇L(β*)‖∞ ≤ λ.
pub fn coverage_check(
    spec: &ProblemSpec,
    dataset: &Dataset,
    beta_star: &Coefficients,
    lambda: f64,
) -> Result<bool> {
    let g = gradient(spec, dataset, beta_star)?;
    let sup = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(spec.c * sup <= lambda)
}

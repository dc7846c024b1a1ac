//! K-fold cross-validation over a log-spaced penalty grid.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{loss_from_predictor, Dataset, Family, ProblemSpec};
use crate::penalty::{Method, PenaltyEstimate};
use crate::rng::stream_rng;
use crate::solver::{fit_design, lambda_max, Design, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub grid_size: usize,
    pub grid_min_ratio: f64,
    pub seed: u64,
    /// Warm-start each fit from the previous (larger) λ on the same fold.
    pub warm_start: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            grid_size: 50,
            grid_min_ratio: 0.01,
            seed: 0,
            warm_start: true,
        }
    }
}

impl CvConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.folds < 2 || self.folds > n {
            return Err(Error::Config(format!("folds = {} must be in [2, n = {n}]", self.folds)));
        }
        if self.grid_size == 0 {
            return Err(Error::Config("grid_size must be positive".into()));
        }
        if !(self.grid_min_ratio > 0.0 && self.grid_min_ratio < 1.0) {
            return Err(Error::Config(format!(
                "grid_min_ratio = {} not in (0, 1)",
                self.grid_min_ratio
            )));
        }
        Ok(())
    }
}

/// Full cross-validation output.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// Decreasing penalty grid.
    pub lambdas: Vec<f64>,
    /// `heldout[k][f]`: held-out loss of λ_k on fold f.
    pub heldout: Vec<Vec<f64>>,
    pub mean_loss: Vec<f64>,
    pub selected: usize,
    pub estimate: PenaltyEstimate,
}

impl CvOutcome {
    /// Long-format table: lambda_index, lambda, fold, heldout_loss.
    pub fn write_loss_table<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wtr.write_record(["lambda_index", "lambda", "fold", "heldout_loss"]).map_err(io)?;
        for (k, row) in self.heldout.iter().enumerate() {
            for (f, loss) in row.iter().enumerate() {
                wtr.write_record([
                    k.to_string(),
                    self.lambdas[k].to_string(),
                    f.to_string(),
                    loss.to_string(),
                ])
                .map_err(io)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// λ_max · ratio^{k/(G−1)} for k = 0..G.
pub fn lambda_grid(lambda_max: f64, size: usize, min_ratio: f64) -> Vec<f64> {
    if size == 1 {
        return vec![lambda_max];
    }
    let step = min_ratio.ln() / (size - 1) as f64;
    (0..size)
        .map(|k| lambda_max * (step * k as f64).exp())
        .collect()
}

/// Seeded Fisher–Yates shuffle dealt round-robin into `folds` groups.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, 0));
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (pos, i) in idx.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    out
}

/// Held-out loss: mean squared error for the lasso families, the weighted
/// score loss for Poisson.
fn heldout_loss(family: Family, test: &Dataset, beta: &[f64]) -> Result<f64> {
    let u = test.linear_predictor(beta);
    match family {
        Family::Lasso | Family::SqrtLasso => {
            let n = test.n() as f64;
            Ok(test.y().iter().zip(&u).map(|(y, u)| (y - u) * (y - u)).sum::<f64>() / n)
        }
        Family::PoissonWsf => loss_from_predictor(Family::PoissonWsf, test.y(), &u),
    }
}

fn fold_path(
    family: Family,
    dataset: &Dataset,
    test_idx: &[usize],
    lambdas: &[f64],
    config: &CvConfig,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    let train_idx: Vec<usize> = {
        let mut in_test = vec![false; dataset.n()];
        test_idx.iter().for_each(|&i| in_test[i] = true);
        (0..dataset.n()).filter(|&i| !in_test[i]).collect()
    };
    let train = dataset.subset(&train_idx);
    let test = dataset.subset(test_idx);
    let design = Design::new(&train);

    let mut losses = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Vec<f64>> = None;
    let mut broken = false;
    for &lambda in lambdas {
        if broken {
            losses.push(f64::INFINITY);
            continue;
        }
        let start = if config.warm_start { warm.as_deref() } else { None };
        match fit_design(family, &design, train.y(), lambda, solver, start) {
            Ok(fit) => {
                let beta = fit.beta.into_vec();
                losses.push(heldout_loss(family, &test, &beta).unwrap_or(f64::INFINITY));
                warm = Some(beta);
            }
            // the estimator is undefined from here down the grid on this fold
            Err(Error::ZeroResidual) | Err(Error::Overflow(_)) => {
                broken = true;
                losses.push(f64::INFINITY);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(losses)
}

/// Runs the full cross-validation and keeps every held-out loss.
pub fn cv_path(
    spec: &ProblemSpec,
    dataset: &Dataset,
    config: &CvConfig,
    solver: &SolverConfig,
) -> Result<CvOutcome> {
    if !dataset.is_standardized() {
        return Err(Error::NotStandardized);
    }
    spec.validate()?;
    solver.validate()?;
    config.validate(dataset.n())?;
    let folds = fold_assignment(dataset.n(), config.folds, config.seed);
    if let Some((fold, f)) = folds.iter().enumerate().find(|(_, f)| f.len() < 2) {
        return Err(Error::FoldTooSmall { fold, size: f.len() });
    }
    let lmax = lambda_max(spec.family, dataset)?;
    let lambdas = lambda_grid(lmax, config.grid_size, config.grid_min_ratio);

    let per_fold: Vec<Vec<f64>> = folds
        .par_iter()
        .map(|test| fold_path(spec.family, dataset, test, &lambdas, config, solver))
        .collect::<Result<_>>()?;

    let heldout: Vec<Vec<f64>> = (0..lambdas.len())
        .map(|k| per_fold.iter().map(|f| f[k]).collect())
        .collect();
    let mean_loss: Vec<f64> = heldout
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();
    // first minimum, i.e. the largest λ among ties
    let selected = mean_loss
        .iter()
        .enumerate()
        .fold(0, |best, (k, &v)| if v < mean_loss[best] { k } else { best });
    if !mean_loss[selected].is_finite() {
        return Err(Error::Config("no grid point produced a finite held-out loss".into()));
    }
    let estimate = PenaltyEstimate {
        lambda: lambdas[selected],
        method: Method::Cv,
        quantile: None,
        draws: 0,
        seed: Some(config.seed),
    };
    Ok(CvOutcome {
        lambdas,
        heldout,
        mean_loss,
        selected,
        estimate,
    })
}

/// λ minimizing the mean held-out loss.
pub fn cv_select(
    spec: &ProblemSpec,
    dataset: &Dataset,
    config: &CvConfig,
    solver: &SolverConfig,
) -> Result<PenaltyEstimate> {
    cv_path(spec, dataset, config, solver).map(|o| o.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = lambda_grid(2.0, 5, 0.01);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 2.0);
        assert!((g[4] - 0.02).abs() < 1e-15);
        let r0 = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
        assert_eq!(lambda_grid(0.7, 1, 0.01), vec![0.7]);
    }

    #[test]
    fn folds_partition_observations() {
        for (n, k) in [(10, 10), (23, 10), (200, 7), (5, 2)] {
            let folds = fold_assignment(n, k, 99);
            let mut seen = vec![0; n];
            for f in &folds {
                for &i in f {
                    seen[i] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            assert!(hi - lo <= 1);
        }
        assert_eq!(fold_assignment(30, 3, 5), fold_assignment(30, 3, 5));
        assert_ne!(fold_assignment(30, 3, 5), fold_assignment(30, 3, 6));
    }

    #[test]
    fn config_validation() {
        let cfg = CvConfig::default();
        assert!(cfg.validate(100).is_ok());
        assert!(cfg.validate(9).is_err());
        assert!(CvConfig { folds: 1, ..cfg.clone() }.validate(100).is_err());
        assert!(CvConfig { grid_min_ratio: 1.0, ..cfg }.validate(100).is_err());
    }
}

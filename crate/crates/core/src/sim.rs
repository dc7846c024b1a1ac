//! Synthetic experiments comparing penalty-selection methods.
//!
//! Each replication draws an AR(1)-correlated Gaussian design, a sparse β*
//! and a response, then for every requested method times the penalty
//! selection, fits the family's estimator and records the prediction error
//! and whether the selected λ dominates c‖∇L(β*)‖∞.
//!
//! Seeds: replication r uses `base_seed ^ mix64(r)`; design, coefficients,
//! response, Monte Carlo draws and CV folds each take a separate sub-seed of
//! it (see [`crate::rng`]).

use std::io::Write;
use std::time::Instant;

use rand_distr::{Distribution, Poisson, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{cv_select, CvConfig};
use crate::error::{Error, Result};
use crate::model::{standardize, Coefficients, Dataset, Family, ProblemSpec, EXP_GUARD};
use crate::penalty::{coverage_check, lambda_mdt, lambda_stein, Method, PenaltyEstimate, DEFAULT_DRAWS};
use crate::rng::{replication_seed, stream_rng, sub_seed, SubStream, RNG_NAME};
use crate::solver::{fit, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoefLaw {
    /// Uniform on [−1, 1], redrawn when within 1e−6 of zero.
    #[default]
    UniformSigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimDesign {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub sparsity: usize,
    pub coef_law: CoefLaw,
    /// Multiplier applied to the nonzero coefficients.
    pub beta_scale: f64,
    pub family: Family,
    /// Noise level for the lasso families.
    pub sigma: f64,
    pub replications: usize,
    pub base_seed: u64,
    /// Draw β* once from `base_seed` instead of once per replication.
    pub freeze_beta: bool,
}

impl Default for SimDesign {
    fn default() -> Self {
        SimDesign {
            n: 200,
            p: 1000,
            rho: 0.5,
            sparsity: 10,
            coef_law: CoefLaw::UniformSigned,
            beta_scale: 1.0,
            family: Family::Lasso,
            sigma: 1.0,
            replications: 100,
            base_seed: 0,
            freeze_beta: false,
        }
    }
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(Error::Config(format!("need n >= 2 and p >= 1, got {} x {}", self.n, self.p)));
        }
        if self.sparsity > self.p {
            return Err(Error::Config(format!(
                "sparsity {} exceeds p = {}",
                self.sparsity, self.p
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho = {} not in [0, 1)", self.rho)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        if !(self.sigma >= 0.0) || !self.beta_scale.is_finite() {
            return Err(Error::Config("sigma must be >= 0 and beta_scale finite".into()));
        }
        Ok(())
    }
}

/// Complete experiment configuration; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub design: SimDesign,
    pub alpha: f64,
    pub c: f64,
    pub methods: Vec<Method>,
    pub draws: usize,
    pub cv: CvConfig,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            design: SimDesign::default(),
            alpha: 0.1,
            c: 1.01,
            methods: vec![Method::Mdt, Method::SteinMc, Method::Cv],
            draws: DEFAULT_DRAWS,
            cv: CvConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn spec(&self) -> Result<ProblemSpec> {
        ProblemSpec::for_family(self.design.family, self.alpha, self.c, self.design.sigma)
    }
}

/// Row i is x_i with x_i1 = z_1, x_ij = ρ x_i,j−1 + √(1−ρ²) z_j, then the
/// columns are standardized. The response is left at zero.
pub fn gen_design(design: &SimDesign, seed: u64) -> Result<Dataset> {
    design.validate()?;
    let (n, p, rho) = (design.n, design.p, design.rho);
    let innovation = (1.0 - rho * rho).sqrt();
    let mut rng = stream_rng(seed, 0);
    let mut x = Vec::with_capacity(n * p);
    for _ in 0..n {
        let mut prev: f64 = StandardNormal.sample(&mut rng);
        x.push(prev);
        for _ in 1..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            prev = rho * prev + innovation * z;
            x.push(prev);
        }
    }
    standardize(&Dataset::new(n, p, x, vec![0.0; n])?)
}

/// First `sparsity` coordinates nonzero, the rest exactly zero.
pub fn gen_beta(design: &SimDesign, seed: u64) -> Coefficients {
    let mut rng = stream_rng(seed, 0);
    let law = match design.coef_law {
        CoefLaw::UniformSigned => Uniform::new_inclusive(-1.0, 1.0).expect("valid range"),
    };
    let mut beta = vec![0.0; design.p];
    for b in beta.iter_mut().take(design.sparsity) {
        *b = loop {
            let v: f64 = law.sample(&mut rng);
            if v.abs() > 1e-6 {
                break v * design.beta_scale;
            }
        };
    }
    Coefficients::new(beta).expect("finite draws")
}

/// Y = Xβ* + σε for the lasso families, y_i ~ Poisson(e^{x_i'β*}) otherwise.
pub fn gen_response(
    design: &SimDesign,
    x: &Dataset,
    beta_star: &Coefficients,
    seed: u64,
) -> Result<Dataset> {
    if beta_star.len() != x.p() {
        return Err(Error::Dimension("beta_star length does not match design".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let u = x.linear_predictor(beta_star.as_slice());
    let y: Vec<f64> = match design.family {
        Family::Lasso | Family::SqrtLasso => u
            .iter()
            .map(|&m| {
                let e: f64 = StandardNormal.sample(&mut rng);
                m + design.sigma * e
            })
            .collect(),
        Family::PoissonWsf => u
            .iter()
            .map(|&m| {
                if m.abs() > EXP_GUARD {
                    return Err(Error::Overflow(m.abs()));
                }
                let law = Poisson::new(m.exp()).map_err(|_| Error::Overflow(m.abs()))?;
                Ok(law.sample(&mut rng))
            })
            .collect::<Result<_>>()?,
    };
    x.with_response(y)
}

/// √((1/n)‖X(β̂ − β*)‖²).
pub fn prediction_error(x: &Dataset, beta_hat: &Coefficients, beta_star: &Coefficients) -> f64 {
    let diff: Vec<f64> = beta_hat
        .as_slice()
        .iter()
        .zip(beta_star.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let u = x.linear_predictor(&diff);
    (u.iter().map(|v| v * v).sum::<f64>() / x.n() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub rep: usize,
    pub method: Method,
    pub lambda: f64,
    pub prediction_error: f64,
    pub coverage: bool,
    pub select_seconds: f64,
    pub fit_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub rep: usize,
    pub method: Option<Method>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub successes: usize,
    pub median_prediction_error: f64,
    pub mean_prediction_error: f64,
    pub coverage: f64,
    pub total_select_seconds: f64,
    pub total_fit_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rng: String,
    pub config: ExperimentConfig,
    pub summary: Vec<MethodSummary>,
    pub failures: Vec<Failure>,
    #[serde(skip)]
    pub records: Vec<Record>,
}

pub const RECORD_COLUMNS: [&str; 7] = [
    "rep",
    "method",
    "lambda",
    "prediction_error",
    "coverage",
    "select_seconds",
    "fit_seconds",
];

impl ExperimentReport {
    /// Long-format CSV, one row per (replication, method).
    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wtr.write_record(RECORD_COLUMNS).map_err(io)?;
        for r in &self.records {
            wtr.write_record([
                r.rep.to_string(),
                r.method.to_string(),
                r.lambda.to_string(),
                r.prediction_error.to_string(),
                u8::from(r.coverage).to_string(),
                r.select_seconds.to_string(),
                r.fit_seconds.to_string(),
            ])
            .map_err(io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }
}

/// Data of one replication, regenerated from seeds alone.
#[derive(Debug, Clone)]
pub struct Replication {
    pub seed: u64,
    pub data: Dataset,
    pub beta_star: Coefficients,
}

pub fn replication_data(design: &SimDesign, rep: usize) -> Result<Replication> {
    let seed = replication_seed(design.base_seed, rep as u64);
    let x = gen_design(design, sub_seed(seed, SubStream::Design))?;
    let beta_seed = if design.freeze_beta { design.base_seed } else { seed };
    let beta_star = gen_beta(design, sub_seed(beta_seed, SubStream::Coefficients));
    let data = gen_response(design, &x, &beta_star, sub_seed(seed, SubStream::Response))?;
    Ok(Replication {
        seed,
        data,
        beta_star,
    })
}

/// Penalty selection with the seeds a replication would use.
pub fn select_penalty(
    config: &ExperimentConfig,
    method: Method,
    data: &Dataset,
    rep_seed: u64,
) -> Result<PenaltyEstimate> {
    let spec = config.spec()?;
    match method {
        Method::Mdt => lambda_mdt(&spec, data.n(), data.p()),
        Method::SteinMc => lambda_stein(&spec, data, config.draws, sub_seed(rep_seed, SubStream::MonteCarlo)),
        Method::Cv => {
            let cv = CvConfig {
                seed: sub_seed(rep_seed, SubStream::Folds),
                ..config.cv.clone()
            };
            cv_select(&spec, data, &cv, &config.solver)
        }
    }
}

fn run_method(
    config: &ExperimentConfig,
    method: Method,
    rep: usize,
    replication: &Replication,
) -> Result<Record> {
    let spec = config.spec()?;
    let data = &replication.data;
    let start = Instant::now();
    let estimate = select_penalty(config, method, data, replication.seed)?;
    let select_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let fitted = fit(spec.family, data, estimate.lambda, &config.solver)?;
    let fit_seconds = start.elapsed().as_secs_f64();

    Ok(Record {
        rep,
        method,
        lambda: estimate.lambda,
        prediction_error: prediction_error(data, &fitted.beta, &replication.beta_star),
        coverage: coverage_check(&spec, data, &replication.beta_star, estimate.lambda)?,
        select_seconds,
        fit_seconds,
    })
}

fn run_replication(config: &ExperimentConfig, rep: usize) -> (Vec<Record>, Vec<Failure>) {
    let replication = match replication_data(&config.design, rep) {
        Ok(r) => r,
        Err(e) => {
            return (
                Vec::new(),
                vec![Failure {
                    rep,
                    method: None,
                    message: e.to_string(),
                }],
            )
        }
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &method in &config.methods {
        match run_method(config, method, rep, &replication) {
            Ok(r) => records.push(r),
            Err(e) => failures.push(Failure {
                rep,
                method: Some(method),
                message: e.to_string(),
            }),
        }
    }
    (records, failures)
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

fn summarize(methods: &[Method], records: &[Record]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let rs: Vec<&Record> = records.iter().filter(|r| r.method == method).collect();
            let count = rs.len();
            let mut pe: Vec<f64> = rs.iter().map(|r| r.prediction_error).collect();
            let mean = pe.iter().sum::<f64>() / count.max(1) as f64;
            MethodSummary {
                method,
                successes: count,
                median_prediction_error: median(&mut pe),
                mean_prediction_error: if count == 0 { f64::NAN } else { mean },
                coverage: rs.iter().filter(|r| r.coverage).count() as f64 / count.max(1) as f64,
                total_select_seconds: rs.iter().map(|r| r.select_seconds).sum(),
                total_fit_seconds: rs.iter().map(|r| r.fit_seconds).sum(),
            }
        })
        .collect()
}

/// Runs every replication and assembles the report in replication order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.design.validate()?;
    config.spec()?;
    config.solver.validate()?;
    config.cv.validate(config.design.n)?;
    if config.methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    let per_rep: Vec<(Vec<Record>, Vec<Failure>)> = (0..config.design.replications)
        .into_par_iter()
        .map(|rep| run_replication(config, rep))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in per_rep {
        records.extend(r);
        failures.extend(f);
    }
    if records.is_empty() {
        return Err(Error::AllReplicationsFailed(config.design.replications));
    }
    Ok(ExperimentReport {
        rng: RNG_NAME.to_string(),
        summary: summarize(&config.methods, &records),
        config: config.clone(),
        failures,
        records,
    })
}

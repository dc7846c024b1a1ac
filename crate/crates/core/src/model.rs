//! Data model and the three loss families.
//!
//! The design matrix is stored row-major by observation. Losses, gradients
//! and score vectors do not require a standardized design (cross-validation
//! evaluates them on training subsets); the solvers and penalty estimators
//! that rely on unit column scale check the flag themselves.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest |x'β| accepted by the Poisson weighted-score loss.
pub const EXP_GUARD: f64 = 500.0;

const CENTER_TOL: f64 = 1e-10;
const SCALE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Lasso,
    SqrtLasso,
    PoissonWsf,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Lasso, Family::SqrtLasso, Family::PoissonWsf];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Lasso => "lasso",
            Family::SqrtLasso => "sqrt-lasso",
            Family::PoissonWsf => "poisson-wsf",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lasso" => Ok(Family::Lasso),
            "sqrt-lasso" | "sqrt_lasso" => Ok(Family::SqrtLasso),
            "poisson-wsf" | "poisson_wsf" | "poisson" => Ok(Family::PoissonWsf),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
}

/// Problem family plus the confidence level, multiplier and noise scale that
/// enter the penalty estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub family: Family,
    pub alpha: f64,
    pub c: f64,
    pub theta: f64,
}

impl ProblemSpec {
    pub fn new(family: Family, alpha: f64, c: f64, theta: f64) -> Result<Self> {
        let spec = ProblemSpec {
            family,
            alpha,
            c,
            theta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Lasso with known noise level `sigma`.
    pub fn lasso(alpha: f64, c: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::Lasso, alpha, c, sigma)
    }

    pub fn sqrt_lasso(alpha: f64, c: f64) -> Result<Self> {
        Self::new(Family::SqrtLasso, alpha, c, 1.0)
    }

    pub fn poisson_wsf(alpha: f64, c: f64) -> Result<Self> {
        Self::new(Family::PoissonWsf, alpha, c, 1.0)
    }

    /// Builds a spec for `family`; `sigma` is only used by the lasso.
    pub fn for_family(family: Family, alpha: f64, c: f64, sigma: f64) -> Result<Self> {
        match family {
            Family::Lasso => Self::lasso(alpha, c, sigma),
            Family::SqrtLasso => Self::sqrt_lasso(alpha, c),
            Family::PoissonWsf => Self::poisson_wsf(alpha, c),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha = {} not in (0, 1)", self.alpha)));
        }
        if !(self.c > 1.0) || !self.c.is_finite() {
            return Err(Error::Domain(format!("c = {} must exceed 1", self.c)));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::Domain(format!("theta = {} must be positive", self.theta)));
        }
        if self.family != Family::Lasso && self.theta != 1.0 {
            return Err(Error::Domain(format!(
                "theta is fixed at 1 for {}, got {}",
                self.family, self.theta
            )));
        }
        Ok(())
    }
}

/// Coefficient vector β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Coefficients(beta))
    }

    pub fn zeros(p: usize) -> Self {
        Coefficients(vec![0.0; p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|b| b.abs()).sum()
    }

    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

impl std::ops::Index<usize> for Coefficients {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// Per-column centers and scales applied by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    standardized: bool,
    transform: Option<Standardization>,
}

impl Dataset {
    /// Builds an unstandardized dataset from a row-major `n × p` matrix.
    pub fn new(n: usize, p: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Dimension(format!("need n >= 1 and p >= 1, got {n} x {p}")));
        }
        if x.len() != n * p {
            return Err(Error::Dimension(format!(
                "matrix has {} entries, expected {n} x {p}",
                x.len()
            )));
        }
        if y.len() != n {
            return Err(Error::Dimension(format!("response has length {}, expected {n}", y.len())));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Dataset {
            n,
            p,
            x,
            y,
            standardized: false,
            transform: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("rows have differing lengths".into()));
        }
        Self::new(n, p, rows.concat(), y)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.transform.as_ref()
    }

    /// Same design with a new response vector.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n {
            return Err(Error::Dimension(format!(
                "response has length {}, expected {}",
                y.len(),
                self.n
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Dataset { y, ..self.clone() })
    }

    /// Marks a dataset as standardized after checking the column moments.
    pub fn assume_standardized(mut self) -> Result<Self> {
        if self.n < 2 {
            return Err(Error::Dimension("standardization needs n >= 2".into()));
        }
        let nf = self.n as f64;
        for j in 0..self.p {
            let (sum, sq) = (0..self.n).fold((0.0, 0.0), |(s, q), i| {
                let v = self.get(i, j);
                (s + v, q + v * v)
            });
            if (sum / nf).abs() > CENTER_TOL || (sq / nf - 1.0).abs() > SCALE_TOL {
                return Err(Error::NotStandardized);
            }
        }
        self.standardized = true;
        Ok(self)
    }

    /// Rows `idx` as a new, unstandardized dataset.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(idx.len() * self.p);
        let mut y = Vec::with_capacity(idx.len());
        for &i in idx {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Dataset {
            n: idx.len(),
            p: self.p,
            x,
            y,
            standardized: false,
            transform: None,
        }
    }

    /// X β.
    pub fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        let support: Vec<(usize, f64)> = beta
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, b)| *b != 0.0)
            .collect();
        (0..self.n)
            .map(|i| {
                let row = self.row(i);
                support.iter().map(|&(j, b)| row[j] * b).sum()
            })
            .collect()
    }

    /// (1/n) X' w, accumulated observation by observation.
    pub fn mean_weighted_rows(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            for (o, &xij) in out.iter_mut().zip(self.row(i)) {
                *o += xij * wi;
            }
        }
        let nf = self.n as f64;
        out.iter_mut().for_each(|o| *o /= nf);
        out
    }
}

/// Centers every column and scales it to unit mean square (1/n convention).
pub fn standardize(dataset: &Dataset) -> Result<Dataset> {
    let (n, p) = (dataset.n, dataset.p);
    if n < 2 {
        return Err(Error::Dimension("standardization needs n >= 2".into()));
    }
    let nf = n as f64;
    let mut centers = vec![0.0; p];
    for i in 0..n {
        for (c, &v) in centers.iter_mut().zip(dataset.row(i)) {
            *c += v;
        }
    }
    centers.iter_mut().for_each(|c| *c /= nf);

    let mut scales = vec![0.0; p];
    for i in 0..n {
        for ((s, &v), &c) in scales.iter_mut().zip(dataset.row(i)).zip(&centers) {
            *s += (v - c) * (v - c);
        }
    }
    for (j, s) in scales.iter_mut().enumerate() {
        *s = (*s / nf).sqrt();
        if !s.is_finite() {
            return Err(Error::NonFinite);
        }
        if *s <= 1e-12 * (1.0 + centers[j].abs()) {
            return Err(Error::ConstantColumn(j));
        }
    }

    let mut x = dataset.x.clone();
    for row in x.chunks_exact_mut(p) {
        for ((v, &c), &s) in row.iter_mut().zip(&centers).zip(&scales) {
            *v = (*v - c) / s;
        }
    }
    Ok(Dataset {
        n,
        p,
        x,
        y: dataset.y.clone(),
        standardized: true,
        transform: Some(Standardization { centers, scales }),
    })
}

fn check_beta(dataset: &Dataset, beta: &Coefficients) -> Result<()> {
    if beta.len() != dataset.p {
        return Err(Error::Dimension(format!(
            "beta has length {}, expected {}",
            beta.len(),
            dataset.p
        )));
    }
    Ok(())
}

fn check_exponent(u: &[f64]) -> Result<()> {
    match u.iter().copied().find(|v| v.abs() > EXP_GUARD || v.is_nan()) {
        Some(v) => Err(Error::Overflow(v.abs())),
        None => Ok(()),
    }
}

fn check_counts(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("Poisson responses must be non-negative".into()));
    }
    Ok(())
}

/// Loss value from a precomputed linear predictor `u = Xβ`.
pub(crate) fn loss_from_predictor(family: Family, y: &[f64], u: &[f64]) -> Result<f64> {
    let nf = y.len() as f64;
    match family {
        Family::Lasso => {
            let rss: f64 = y.iter().zip(u).map(|(y, u)| (y - u) * (y - u)).sum();
            Ok(rss / (2.0 * nf))
        }
        Family::SqrtLasso => {
            let rss: f64 = y.iter().zip(u).map(|(y, u)| (y - u) * (y - u)).sum();
            Ok((rss / nf).sqrt())
        }
        Family::PoissonWsf => {
            check_exponent(u)?;
            let total: f64 = y
                .iter()
                .zip(u)
                .map(|(&y, &u)| {
                    let half = 0.5 * u;
                    y * (-half).exp() + half.exp()
                })
                .sum();
            Ok(2.0 * total / nf)
        }
    }
}

/// Per-observation weights w with ∇L(β) = (1/n) Σ x_i w_i.
pub(crate) fn gradient_weights(family: Family, y: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    match family {
        Family::Lasso => Ok(u.iter().zip(y).map(|(u, y)| u - y).collect()),
        Family::SqrtLasso => {
            let rss: f64 = y.iter().zip(u).map(|(y, u)| (y - u) * (y - u)).sum();
            let scale = (rss / y.len() as f64).sqrt();
            if scale == 0.0 {
                return Err(Error::ZeroResidual);
            }
            Ok(u.iter().zip(y).map(|(u, y)| (u - y) / scale).collect())
        }
        Family::PoissonWsf => {
            check_exponent(u)?;
            Ok(u
                .iter()
                .zip(y)
                .map(|(&u, &y)| {
                    let half = 0.5 * u;
                    half.exp() - y * (-half).exp()
                })
                .collect())
        }
    }
}

/// L(β) for the spec's family.
pub fn loss(spec: &ProblemSpec, dataset: &Dataset, beta: &Coefficients) -> Result<f64> {
    check_beta(dataset, beta)?;
    if spec.family == Family::PoissonWsf {
        check_counts(&dataset.y)?;
    }
    let u = dataset.linear_predictor(beta.as_slice());
    loss_from_predictor(spec.family, &dataset.y, &u)
}

/// ∇L(β).
pub fn gradient(spec: &ProblemSpec, dataset: &Dataset, beta: &Coefficients) -> Result<Vec<f64>> {
    check_beta(dataset, beta)?;
    if spec.family == Family::PoissonWsf {
        check_counts(&dataset.y)?;
    }
    let u = dataset.linear_predictor(beta.as_slice());
    let w = gradient_weights(spec.family, &dataset.y, &u)?;
    Ok(dataset.mean_weighted_rows(&w))
}

/// Score vectors W_i as the rows of an `n × p` row-major matrix; their mean
/// is ∇L(β*).
pub fn score_vectors(
    spec: &ProblemSpec,
    dataset: &Dataset,
    beta_star: &Coefficients,
) -> Result<Vec<f64>> {
    check_beta(dataset, beta_star)?;
    if spec.family == Family::PoissonWsf {
        check_counts(&dataset.y)?;
    }
    let u = dataset.linear_predictor(beta_star.as_slice());
    let w = gradient_weights(spec.family, &dataset.y, &u)?;
    let mut scores = Vec::with_capacity(dataset.n * dataset.p);
    for (i, wi) in w.iter().enumerate() {
        scores.extend(dataset.row(i).iter().map(|x| x * wi));
    }
    Ok(scores)
}

//! Reference implementations used only by the tests. None of this shares
//! code with the library.

#![allow(dead_code)]

use penlevel::{standardize, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// erf(x) = (2/√π) e^{−x²} Σ_k 2^k x^{2k+1} / (1·3·…·(2k+1)); every term is
/// positive, so there is no cancellation.
pub fn erf_series(x: f64) -> f64 {
    if x < 0.0 {
        return -erf_series(-x);
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term <= 1e-18 * sum {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// erfc(x) for x > 0 by the continued fraction
/// erfc x = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))),
/// evaluated with modified Lentz.
pub fn erfc_cf(x: f64) -> f64 {
    assert!(x > 0.0);
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Switch from the series to the continued fraction at this |x|/√2.
const CF_FROM: f64 = 2.0;

/// Oracle Φ(x): series near the center, continued fraction in the tails.
pub fn phi_oracle(x: f64) -> f64 {
    let t = x / std::f64::consts::SQRT_2;
    if t.abs() < CF_FROM {
        0.5 * (1.0 + erf_series(t))
    } else if t > 0.0 {
        1.0 - 0.5 * erfc_cf(t)
    } else {
        0.5 * erfc_cf(-t)
    }
}

/// Oracle upper tail 1 − Φ(x) with full relative accuracy for x > 0.
pub fn phi_sf_oracle(x: f64) -> f64 {
    let t = x / std::f64::consts::SQRT_2;
    if t >= CF_FROM {
        0.5 * erfc_cf(t)
    } else {
        0.5 * (1.0 - erf_series(t))
    }
}

/// Root of a monotone function on [lo, hi] by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let increasing = f(hi) > f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Φ⁻¹(1 − tail) by bisection on the oracle tail.
pub fn phi_inv_upper_oracle(tail: f64) -> f64 {
    bisect(|x| tail - phi_sf_oracle(x), -10.0, 40.0)
}

pub fn phi_inv_oracle(q: f64) -> f64 {
    bisect(|x| phi_oracle(x) - q, -40.0, 40.0)
}

/// Golden-section minimum of a unimodal function on [lo, hi].
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..300 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solves A x = b for a small dense system by Gaussian elimination with
/// partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub type TestRng = ChaCha20Rng;

pub fn test_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Standardized Gaussian design with response y = Xβ + noise·ε.
pub fn gaussian_problem(n: usize, p: usize, beta: &[f64], noise: f64, seed: u64) -> Dataset {
    let mut rng = test_rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let x = standardize(&Dataset::from_rows(&rows, vec![0.0; n]).unwrap()).unwrap();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mean: f64 = x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            mean + noise * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    x.with_response(y).unwrap()
}

/// Standardized Gaussian design with Poisson(e^{x'β}) counts.
pub fn poisson_problem(n: usize, p: usize, beta: &[f64], seed: u64) -> Dataset {
    let mut rng = test_rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let x = standardize(&Dataset::from_rows(&rows, vec![0.0; n]).unwrap()).unwrap();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            let dist = rand_distr::Poisson::new(eta.exp()).unwrap();
            rng.sample(dist)
        })
        .collect();
    x.with_response(y).unwrap()
}

/// Worst relative gap between the Poisson gradient and central differences
/// (step 1e−6) on a random instance with n ≤ 20, p ≤ 5.
pub fn fd_gradient_check(seed: u64) -> f64 {
    use penlevel::{gradient, loss, Coefficients, Family, ProblemSpec};
    let spec = ProblemSpec::for_family(Family::PoissonWsf, 0.1, 1.01, 1.0).unwrap();
    let mut rng = test_rng(0x5eed ^ seed);
    let n = rng.random_range(5..=20);
    let p = rng.random_range(1..=5);
    let truth: Vec<f64> = (0..p).map(|_| rng.random_range(-0.5..0.5)).collect();
    let d = poisson_problem(n, p, &truth, seed);
    let b: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let at = |v: Vec<f64>| loss(&spec, &d, &Coefficients::new(v).unwrap()).unwrap();
    let g = gradient(&spec, &d, &Coefficients::new(b.clone()).unwrap()).unwrap();
    let h = 1e-6;
    (0..p)
        .map(|j| {
            let (mut up, mut down) = (b.clone(), b.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (at(up) - at(down)) / (2.0 * h);
            (g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1e-3)
        })
        .fold(0.0, f64::max)
}

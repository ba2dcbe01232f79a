//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

pub mod quad;

use nalgebra::{DMatrix, DVector};
use quad::{integrate2, integrate_tol};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF from the complementary error function.
pub fn norm_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / SQRT_2)
}

pub fn mvn_logpdf(x: &DVector<f64>, mu: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let p = x.len() as f64;
    let chol = cov.clone().cholesky().expect("covariance must be positive definite");
    let d = x - mu;
    let w = chol.l().solve_lower_triangular(&d).unwrap();
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (p * (2.0 * std::f64::consts::PI).ln() + log_det + w.norm_squared())
}

/// `P(Y > 0)` componentwise for `Y ~ N(mu, cov)`, `p <= 3`, by nested
/// adaptive quadrature over successive conditionals.
pub fn positive_orthant_prob(mu: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let p = mu.len();
    let s1 = cov[(0, 0)].sqrt();
    if p == 1 {
        return norm_cdf(mu[0] / s1);
    }
    let c12 = cov.view((1, 0), (p - 1, 1)).into_owned();
    let cond_cov = cov.view((1, 1), (p - 1, p - 1)).into_owned() - &c12 * c12.transpose() / cov[(0, 0)];
    let m1 = mu[0];
    let lo = (m1 - 12.0 * s1).max(0.0);
    let hi = m1.max(0.0) + 12.0 * s1;
    let tail = mu.rows(1, p - 1).into_owned();
    integrate_tol(
        |y1| {
            let dens = (-0.5 * ((y1 - m1) / s1).powi(2)).exp() / (s1 * (2.0 * std::f64::consts::PI).sqrt());
            if dens == 0.0 {
                return 0.0;
            }
            let cond_mu = &tail + &c12 * ((y1 - m1) / cov[(0, 0)]);
            dens * positive_orthant_prob(&cond_mu, &cond_cov)
        },
        lo,
        hi,
        1e-13,
        1e-300,
    )
}

/// Probability that `N(mu, cov)` falls in the orthant with signs `z`.
pub fn orthant_prob(z: &[i8], mu: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let d = DVector::from_iterator(z.len(), z.iter().map(|&s| f64::from(s)));
    let mu_z = mu.component_mul(&d);
    let cov_z = DMatrix::from_diagonal(&d) * cov * DMatrix::from_diagonal(&d);
    positive_orthant_prob(&mu_z, &cov_z)
}

/// Log of `int exp{-(λ2 b'Σ^{-1}b + λ1|b|_1) / (2σ²)} db` over the plane,
/// summing adaptive 2-D quadratures over the four quadrants.
pub fn omega_bruteforce_2d(sigma2: f64, lambda1: f64, lambda2: f64, sigma: [[f64; 2]; 2]) -> f64 {
    let det = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0];
    let o = [[sigma[1][1] / det, -sigma[0][1] / det], [-sigma[1][0] / det, sigma[0][0] / det]];
    let f = |x: f64, y: f64| {
        let q = o[0][0] * x * x + 2.0 * o[0][1] * x * y + o[1][1] * y * y;
        (-(lambda2 * q + lambda1 * (x.abs() + y.abs())) / (2.0 * sigma2)).exp()
    };
    let sd = (sigma2 / lambda2 * sigma[0][0].max(sigma[1][1])).sqrt();
    let r = 14.0 * sd;
    let total = integrate2(f, 0.0, r, 0.0, r, 1e-10)
        + integrate2(f, -r, 0.0, 0.0, r, 1e-10)
        + integrate2(f, 0.0, r, -r, 0.0, 1e-10)
        + integrate2(f, -r, 0.0, -r, 0.0, 1e-10);
    total.ln()
}

/// Kolmogorov-Smirnov statistic of sorted draws against a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value of the one-sample KS statistic.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// CDF values at each sorted draw for a density known up to a constant,
/// accumulated by quadrature between consecutive draws.
pub fn cumulative_cdf(sorted: &[f64], unnorm: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    let piece = |a: f64, b: f64| integrate_tol(&unnorm, a, b, 1e-10, 1e-300);
    let total = piece(lo, hi);
    let mut out = Vec::with_capacity(sorted.len());
    let mut acc = 0.0;
    let mut prev = lo;
    for &x in sorted {
        acc += piece(prev, x);
        prev = x;
        out.push(acc / total);
    }
    out
}

/// KS statistic when the CDF values at the sorted draws are precomputed.
pub fn ks_from_values(cdf_values: &[f64]) -> f64 {
    let n = cdf_values.len() as f64;
    cdf_values
        .iter()
        .enumerate()
        .map(|(i, &f)| (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs()))
        .fold(0.0, f64::max)
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Batch-means standard errors of the mean and of the standard deviation.
pub fn batch_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let len = xs.len() / batches;
    let (means, sds): (Vec<f64>, Vec<f64>) = (0..batches)
        .map(|b| mean_sd(&xs[b * len..(b + 1) * len]))
        .unzip();
    let k = (batches as f64).sqrt();
    (mean_sd(&means).1 / k, mean_sd(&sds).1 / k)
}

/// Deterministic pseudo-random stream for test fixtures.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let (u, v) = (self.uniform(), self.uniform());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }
}

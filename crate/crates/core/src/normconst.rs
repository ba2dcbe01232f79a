//! The prior normalizing constant
//! `ω(σ², λ1, λ2) = ∫ exp{-(λ2 β'Ωβ + λ1 |β|_1) / (2σ²)} dβ`
//! and its Gaussian expectation term `E[exp(-κ |Z|_1)]`, `Z ~ N(0, Σ)`,
//! with `κ = λ1 / (2σ sqrt(λ2))`.
//!
//! Everything is returned on the log scale.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{log_phi_ratio, LN_SQRT_2PI};
use crate::model::PrecisionPack;
use crate::rng::stream_rng;
use crate::{Error, Result};

const LN_2PI: f64 = 2.0 * LN_SQRT_2PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OmegaMethod {
    DiagonalClosedForm,
    MonteCarlo,
    BruteForceGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaEstimate {
    pub log_value: f64,
    /// Standard error of `log_value`; zero for closed forms.
    pub std_error: f64,
    pub method: OmegaMethod,
}

/// How [`omega_full`] evaluates the expectation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaStrategy {
    DiagonalClosedForm,
    /// `samples` draws split over `shards` independent streams of `seed`.
    MonteCarlo { samples: usize, seed: u64, shards: usize },
}

fn kappa(sigma2: f64, lambda1: f64, lambda2: f64) -> Result<f64> {
    if !(sigma2 > 0.0 && lambda2 > 0.0 && lambda1 >= 0.0) || !(sigma2 * lambda1 * lambda2).is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need sigma2 > 0, lambda1 >= 0, lambda2 > 0 (got {sigma2}, {lambda1}, {lambda2})"
        )));
    }
    Ok(lambda1 / (2.0 * (sigma2 * lambda2).sqrt()))
}

fn check_log_expectation(v: f64) -> Result<f64> {
    if v.is_finite() && v <= 1e-12 {
        Ok(v.min(0.0))
    } else {
        Err(Error::Numeric(format!("expectation term must lie in (0, 1], got log value {v}")))
    }
}

/// Log expectation term for diagonal Σ with diagonal entries `v2`.
pub fn expectation_term_diagonal(sigma2: f64, lambda1: f64, lambda2: f64, v2: &[f64]) -> Result<f64> {
    let k = kappa(sigma2, lambda1, lambda2)?;
    let mut total = 0.0;
    for &v in v2 {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("diagonal entries must be positive, got {v}")));
        }
        // E[exp(-κ|Z|)] = 2 exp(κ²v²/2) Φ(-κ v) for Z ~ N(0, v²)
        total += std::f64::consts::LN_2 - LN_SQRT_2PI + log_phi_ratio(-k * v.sqrt());
    }
    check_log_expectation(total)
}

/// Streaming log-mean-exp accumulator.
#[derive(Debug, Clone, Copy)]
struct LogMeanExp {
    max: f64,
    s1: f64,
    s2: f64,
    n: u64,
}

impl LogMeanExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            s1: 0.0,
            s2: 0.0,
            n: 0,
        }
    }

    fn rescale(&mut self, new_max: f64) {
        if self.max > f64::NEG_INFINITY {
            let f = (self.max - new_max).exp();
            self.s1 *= f;
            self.s2 *= f * f;
        }
        self.max = new_max;
    }

    fn push(&mut self, w: f64) {
        if w > self.max {
            self.rescale(w);
        }
        let e = (w - self.max).exp();
        self.s1 += e;
        self.s2 += e * e;
        self.n += 1;
    }

    fn merge(mut self, mut other: Self) -> Self {
        let m = self.max.max(other.max);
        self.rescale(m);
        other.rescale(m);
        Self {
            max: m,
            s1: self.s1 + other.s1,
            s2: self.s2 + other.s2,
            n: self.n + other.n,
        }
    }

    /// `(log mean, delta-method standard error of the log mean)`.
    fn finish(&self) -> (f64, f64) {
        let n = self.n as f64;
        let mean = self.s1 / n;
        let var = ((self.s2 - self.s1 * self.s1 / n) / (n - 1.0)).max(0.0);
        (self.max + mean.ln(), (var / n).sqrt() / mean)
    }
}

fn mc_accumulate<R: Rng + ?Sized>(k: f64, pack: &PrecisionPack, m: usize, rng: &mut R) -> LogMeanExp {
    let p = pack.dim();
    let l = &pack.chol_sigma;
    let mut acc = LogMeanExp::new();
    let mut e = vec![0.0; p];
    for _ in 0..m {
        for v in e.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut abs_sum = 0.0;
        for i in 0..p {
            let mut zi = 0.0;
            for (k2, ek) in e.iter().enumerate().take(i + 1) {
                zi += l[(i, k2)] * ek;
            }
            abs_sum += zi.abs();
        }
        acc.push(-k * abs_sum);
    }
    acc
}

/// Naive Monte Carlo estimate of the log expectation term using `m` draws
/// `Z = L e` with `L` the Cholesky factor of Σ.
pub fn expectation_term_mc<R: Rng + ?Sized>(
    sigma2: f64,
    lambda1: f64,
    lambda2: f64,
    pack: &PrecisionPack,
    m: usize,
    rng: &mut R,
) -> Result<OmegaEstimate> {
    if m < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least two draws".into()));
    }
    let k = kappa(sigma2, lambda1, lambda2)?;
    if k == 0.0 {
        return Ok(OmegaEstimate {
            log_value: 0.0,
            std_error: 0.0,
            method: OmegaMethod::MonteCarlo,
        });
    }
    let (log_value, std_error) = mc_accumulate(k, pack, m, rng).finish();
    Ok(OmegaEstimate {
        log_value: check_log_expectation(log_value)?,
        std_error,
        method: OmegaMethod::MonteCarlo,
    })
}

/// Monte Carlo estimate split across `shards` independent streams and run
/// in parallel; shards are combined by log-sum-exp.
pub fn expectation_term_mc_sharded(
    sigma2: f64,
    lambda1: f64,
    lambda2: f64,
    pack: &PrecisionPack,
    m: usize,
    seed: u64,
    shards: usize,
) -> Result<OmegaEstimate> {
    if m < 2 || shards == 0 {
        return Err(Error::InvalidParameter("need m >= 2 and at least one shard".into()));
    }
    let k = kappa(sigma2, lambda1, lambda2)?;
    if k == 0.0 {
        return Ok(OmegaEstimate {
            log_value: 0.0,
            std_error: 0.0,
            method: OmegaMethod::MonteCarlo,
        });
    }
    let acc = (0..shards)
        .into_par_iter()
        .map(|s| {
            let share = m / shards + usize::from(s < m % shards);
            let mut rng = stream_rng(seed, s as u64);
            mc_accumulate(k, pack, share, &mut rng)
        })
        .reduce(LogMeanExp::new, LogMeanExp::merge);
    let (log_value, std_error) = acc.finish();
    Ok(OmegaEstimate {
        log_value: check_log_expectation(log_value)?,
        std_error,
        method: OmegaMethod::MonteCarlo,
    })
}

/// `log ω = (p/2) log(2πσ²/λ2) + ½ log|Σ| + log E[exp(-κ|Z|_1)]`.
pub fn omega_full(
    sigma2: f64,
    lambda1: f64,
    lambda2: f64,
    pack: &PrecisionPack,
    strategy: OmegaStrategy,
) -> Result<OmegaEstimate> {
    let e = match strategy {
        OmegaStrategy::DiagonalClosedForm => {
            if !pack.is_diagonal() {
                return Err(Error::Unsupported("closed-form ω requires a diagonal Σ".into()));
            }
            let v2: Vec<f64> = pack.sigma_mat.diagonal().iter().copied().collect();
            OmegaEstimate {
                log_value: expectation_term_diagonal(sigma2, lambda1, lambda2, &v2)?,
                std_error: 0.0,
                method: OmegaMethod::DiagonalClosedForm,
            }
        }
        OmegaStrategy::MonteCarlo { samples, seed, shards } => {
            expectation_term_mc_sharded(sigma2, lambda1, lambda2, pack, samples, seed, shards)?
        }
    };
    let p = pack.dim() as f64;
    Ok(OmegaEstimate {
        log_value: 0.5 * p * (LN_2PI + (sigma2 / lambda2).ln()) + 0.5 * pack.log_det_sigma + e.log_value,
        ..e
    })
}

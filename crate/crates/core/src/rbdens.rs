//! Rao-Blackwellized marginal densities and posterior summaries.
//!
//! Each density is the average, over kept iterations, of the exact full
//! conditional density recorded by the sampler.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::dist::{gamma_logpdf, hyp1f1_log};
use crate::gibbs::{ChainOutput, ScalarConditional};
use crate::model::Scaling;
use crate::{Error, Result};

/// Number of points in default grids.
pub const DEFAULT_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameter {
    /// Coefficient index, 0-based.
    Beta(usize),
    Sigma2,
    Lambda1,
    Lambda2,
    /// λ1 + λ2.
    Lambda,
    /// λ2 / (λ1 + λ2).
    Alpha,
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parameter::Beta(j) => write!(f, "beta_{}", j + 1),
            Parameter::Sigma2 => f.write_str("sigma2"),
            Parameter::Lambda1 => f.write_str("lambda1"),
            Parameter::Lambda2 => f.write_str("lambda2"),
            Parameter::Lambda => f.write_str("lambda"),
            Parameter::Alpha => f.write_str("alpha"),
        }
    }
}

impl Parameter {
    /// Every parameter of a `p`-coefficient model.
    pub fn all(p: usize) -> Vec<Parameter> {
        let mut v: Vec<Parameter> = (0..p).map(Parameter::Beta).collect();
        v.extend([
            Parameter::Sigma2,
            Parameter::Lambda1,
            Parameter::Lambda2,
            Parameter::Lambda,
            Parameter::Alpha,
        ]);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub parameter: String,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub n_samples_used: usize,
    /// Set when the trapezoid mass falls outside `[0.95, 1.0001]`.
    pub coverage_warning: Option<String>,
}

impl DensityGrid {
    fn new(parameter: Parameter, grid: &[f64], density: Vec<f64>, n: usize) -> Self {
        let mass = trapezoid(grid, &density);
        let coverage_warning = (!(0.95..=1.0001).contains(&mass))
            .then(|| format!("grid holds {mass:.4} of the density mass; widen it"));
        Self {
            parameter: parameter.to_string(),
            grid: grid.to_vec(),
            density,
            n_samples_used: n,
            coverage_warning,
        }
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Draws of `param` from the chain, one per kept iteration.
pub fn parameter_samples(chain: &ChainOutput, param: Parameter) -> Result<Vec<f64>> {
    Ok(match param {
        Parameter::Beta(j) => {
            if j >= chain.p() {
                return Err(Error::Dimension(format!("coefficient {} out of range", j + 1)));
            }
            chain.beta_column(j)
        }
        Parameter::Sigma2 => chain.sigma2_samples.clone(),
        Parameter::Lambda1 => chain.lambda1_samples.clone(),
        Parameter::Lambda2 => chain.lambda2_samples.clone(),
        Parameter::Lambda => chain
            .lambda1_samples
            .iter()
            .zip(&chain.lambda2_samples)
            .map(|(a, b)| a + b)
            .collect(),
        Parameter::Alpha => chain
            .lambda1_samples
            .iter()
            .zip(&chain.lambda2_samples)
            .map(|(a, b)| b / (a + b))
            .collect(),
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("grid must be finite, strictly increasing, with at least two points".into()));
    }
    Ok(())
}

fn require_records(chain: &ChainOutput) -> Result<()> {
    if chain.rb_records.is_empty() {
        return Err(Error::Contract("chain carries no Rao-Blackwell records".into()));
    }
    Ok(())
}

pub fn rb_density_beta(j: usize, grid: &[f64], chain: &ChainOutput) -> Result<DensityGrid> {
    check_grid(grid)?;
    require_records(chain)?;
    if j >= chain.p() {
        return Err(Error::Dimension(format!("coefficient {} out of range", j + 1)));
    }
    let mut dens = vec![0.0; grid.len()];
    for rec in &chain.rb_records {
        let c = rec.beta[j];
        for (d, &g) in dens.iter_mut().zip(grid) {
            *d += c.pdf(g);
        }
    }
    let n = chain.rb_records.len();
    dens.iter_mut().for_each(|d| *d /= n as f64);
    Ok(DensityGrid::new(Parameter::Beta(j), grid, dens, n))
}

/// Rao-Blackwellized posterior mean of β: the average of the recorded
/// full-conditional means.
pub fn rb_beta_mean(chain: &ChainOutput) -> Result<DVector<f64>> {
    require_records(chain)?;
    let p = chain.p();
    let mut acc = DVector::zeros(p);
    for rec in &chain.rb_records {
        for (a, c) in acc.iter_mut().zip(&rec.beta) {
            *a += c.mean();
        }
    }
    Ok(acc / chain.rb_records.len() as f64)
}

pub fn rb_density_scalar(param: Parameter, grid: &[f64], chain: &ChainOutput) -> Result<DensityGrid> {
    check_grid(grid)?;
    require_records(chain)?;
    let mut dens = vec![0.0; grid.len()];
    for rec in &chain.rb_records {
        let cond: ScalarConditional = match param {
            Parameter::Sigma2 => rec.sigma2,
            Parameter::Lambda1 => rec.lambda1,
            Parameter::Lambda2 => rec.lambda2,
            other => {
                return Err(Error::Contract(format!("{other} is not a directly sampled scalar")));
            }
        };
        if let ScalarConditional::Fixed(_) = cond {
            return Err(Error::Contract(format!("{param} was held fixed")));
        }
        let ln = cond.log_normalizer()?;
        for (d, &g) in dens.iter_mut().zip(grid) {
            *d += cond.log_density_with(g, ln).exp();
        }
    }
    let n = chain.rb_records.len();
    dens.iter_mut().for_each(|d| *d /= n as f64);
    Ok(DensityGrid::new(param, grid, dens, n))
}

/// Density of α given (λ, β, σ²): proportional to
/// `α^(a-1) (1-α)^(b-1) exp(-s α)` with `a = p/2 + R`, `b = L`.
pub fn alpha_conditional_logpdf(alpha: f64, a: f64, b: f64, s: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let log_norm = ln_beta(a, b) + hyp1f1_log(a, a + b, -s)?;
    Ok((a - 1.0) * alpha.ln() + (b - 1.0) * (-alpha).ln_1p() - s * alpha - log_norm)
}

pub fn rb_density_lambda_alpha(which: Parameter, grid: &[f64], chain: &ChainOutput) -> Result<DensityGrid> {
    check_grid(grid)?;
    require_records(chain)?;
    if !matches!(which, Parameter::Lambda | Parameter::Alpha) {
        return Err(Error::Contract(format!("{which} is neither lambda nor alpha")));
    }
    if chain.hyper.scaling != Scaling::Common {
        return Err(Error::Unsupported("λ and α densities need common scaling".into()));
    }
    if chain.lambda1_fixed || chain.lambda2_fixed {
        return Err(Error::Contract("λ and α densities need both penalties sampled".into()));
    }
    if which == Parameter::Alpha && (grid[0] <= 0.0 || grid[grid.len() - 1] >= 1.0) {
        return Err(Error::InvalidParameter("alpha grid must lie inside (0, 1)".into()));
    }
    let h = &chain.hyper;
    let p = chain.p() as f64;
    let a = p / 2.0 + h.r;
    let b = h.l;
    let mut dens = vec![0.0; grid.len()];
    for (t, rec) in chain.rb_records.iter().enumerate() {
        let sigma2 = chain.sigma2_samples[t];
        let a1 = rec.l1_norm / sigma2 + h.nu_1;
        let a2 = rec.quad_form / sigma2 + h.nu_2;
        let (l1, l2) = (chain.lambda1_samples[t], chain.lambda2_samples[t]);
        match which {
            Parameter::Lambda => {
                let alpha = l2 / (l1 + l2);
                let rate = (alpha * a2 + (1.0 - alpha) * a1) / 2.0;
                for (d, &g) in dens.iter_mut().zip(grid) {
                    *d += gamma_logpdf(g, a + b, rate).exp();
                }
            }
            _ => {
                let s = (l1 + l2) * (a2 - a1) / 2.0;
                let log_norm = ln_beta(a, b)
                    + hyp1f1_log(a, a + b, -s).map_err(|e| Error::Numeric(format!("iteration {t}: {e}")))?;
                for (d, &g) in dens.iter_mut().zip(grid) {
                    *d += ((a - 1.0) * g.ln() + (b - 1.0) * (-g).ln_1p() - s * g - log_norm).exp();
                }
            }
        }
    }
    let n = chain.rb_records.len();
    dens.iter_mut().for_each(|d| *d /= n as f64);
    Ok(DensityGrid::new(which, grid, dens, n))
}

/// RB density for any parameter, dispatching on its kind.
pub fn rb_density(param: Parameter, grid: &[f64], chain: &ChainOutput) -> Result<DensityGrid> {
    match param {
        Parameter::Beta(j) => rb_density_beta(j, grid, chain),
        Parameter::Sigma2 | Parameter::Lambda1 | Parameter::Lambda2 => rb_density_scalar(param, grid, chain),
        Parameter::Lambda | Parameter::Alpha => rb_density_lambda_alpha(param, grid, chain),
    }
}

/// Type-7 empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Default grid: mean ± 6 sd for coefficients; the 0.1%-99.9% sample range
/// padded by 20% for the positive scalars, clipped to the support.
pub fn default_grid(param: Parameter, chain: &ChainOutput) -> Result<Vec<f64>> {
    let xs = parameter_samples(chain, param)?;
    if xs.is_empty() {
        return Err(Error::Contract("empty chain".into()));
    }
    let n = DEFAULT_GRID_POINTS;
    if let Parameter::Beta(_) = param {
        let (m, sd) = mean_sd(&xs);
        let half = if sd > 0.0 { 6.0 * sd } else { 1.0 };
        return Ok(linspace(m - half, m + half, n));
    }
    let s = sorted(xs);
    let (q0, q1) = (quantile_sorted(&s, 0.001), quantile_sorted(&s, 0.999));
    let pad = if q1 > q0 { 0.2 * (q1 - q0) } else { 0.5 * q0.abs().max(1e-3) };
    let (mut lo, mut hi) = (q0 - pad, q1 + pad);
    lo = lo.max(q0 * 1e-3);
    if param == Parameter::Alpha {
        lo = lo.max(1e-6);
        hi = hi.min(1.0 - 1e-6);
    }
    Ok(linspace(lo, hi, n))
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let x0 = xs[0];
    let m = x0 + xs.iter().map(|x| x - x0).sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub level: f64,
    pub n_samples: usize,
    pub parameters: Vec<ParamSummary>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.parameters.iter().find(|s| s.parameter == name)
    }
}

/// Means, sds, medians and central 95% intervals of every parameter.
pub fn posterior_summary(chain: &ChainOutput) -> Result<PosteriorSummary> {
    posterior_summary_at(chain, 0.95)
}

pub fn posterior_summary_at(chain: &ChainOutput, level: f64) -> Result<PosteriorSummary> {
    if chain.is_empty() {
        return Err(Error::Contract("empty chain".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("interval level must lie in (0, 1), got {level}")));
    }
    let tail = (1.0 - level) / 2.0;
    let parameters = Parameter::all(chain.p())
        .into_iter()
        .map(|param| {
            let xs = parameter_samples(chain, param)?;
            let (mean, sd) = mean_sd(&xs);
            let s = sorted(xs);
            Ok(ParamSummary {
                parameter: param.to_string(),
                mean,
                sd,
                lower: quantile_sorted(&s, tail),
                median: quantile_sorted(&s, 0.5),
                upper: quantile_sorted(&s, 1.0 - tail),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSummary {
        level,
        n_samples: chain.len(),
        parameters,
    })
}

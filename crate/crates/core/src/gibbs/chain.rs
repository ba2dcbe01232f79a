use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditionals::{
    lambda1_conditional, lambda2_conditional, sigma2_conditional, sweep_in_order,
    BetaFullConditional, ScalarConditional,
};
use crate::model::{Hyperparams, ModelState, PrecisionPack, RegressionData};
use crate::rng::{stream_rng, ChainRng};
use crate::{Error, Result};

/// Coordinate visiting order within a β sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanOrder {
    #[default]
    Systematic,
    /// Fresh uniform permutation every sweep.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// Total iterations, burn-in included.
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Independent stream index for the seed; distinct chains use distinct streams.
    pub stream: u64,
    pub fixed_lambda1: Option<f64>,
    pub fixed_lambda2: Option<f64>,
    pub fixed_sigma2: Option<f64>,
    pub init: Option<ModelState>,
    pub scan: ScanOrder,
    pub record_rb: bool,
}

impl ChainConfig {
    /// `n_iter` total iterations with 5% burn-in and no thinning.
    pub fn new(n_iter: usize, seed: u64) -> Self {
        Self {
            n_iter,
            burn_in: n_iter / 20,
            thin: 1,
            seed,
            stream: 0,
            fixed_lambda1: None,
            fixed_lambda2: None,
            fixed_sigma2: None,
            init: None,
            scan: ScanOrder::Systematic,
            record_rb: true,
        }
    }

    /// Configuration that keeps exactly `kept` draws after `burn_in`.
    pub fn kept(kept: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        Self {
            n_iter: burn_in + kept * thin.max(1),
            burn_in,
            thin: thin.max(1),
            ..Self::new(0, seed)
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn fix_lambda1(mut self, v: f64) -> Self {
        self.fixed_lambda1 = Some(v);
        self
    }

    pub fn fix_lambda2(mut self, v: f64) -> Self {
        self.fixed_lambda2 = Some(v);
        self
    }

    pub fn fix_sigma2(mut self, v: f64) -> Self {
        self.fixed_sigma2 = Some(v);
        self
    }

    pub fn with_init(mut self, init: ModelState) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_scan(mut self, scan: ScanOrder) -> Self {
        self.scan = scan;
        self
    }

    pub fn without_rb(mut self) -> Self {
        self.record_rb = false;
        self
    }

    pub fn kept_count(&self) -> usize {
        if self.n_iter <= self.burn_in || self.thin == 0 {
            0
        } else {
            (self.n_iter - self.burn_in).div_ceil(self.thin)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "n_iter ({}) must exceed burn_in ({})",
                self.n_iter, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be at least 1".into()));
        }
        for (name, v) in [
            ("fixed_lambda1", self.fixed_lambda1),
            ("fixed_lambda2", self.fixed_lambda2),
            ("fixed_sigma2", self.fixed_sigma2),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(init) = &self.init {
            init.validate()?;
        }
        Ok(())
    }
}

/// Full-conditional parameters of one kept iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub beta: Vec<BetaFullConditional>,
    pub sigma2: ScalarConditional,
    pub lambda1: ScalarConditional,
    pub lambda2: ScalarConditional,
    /// `|β|_1` at the end of the iteration.
    pub l1_norm: f64,
    /// `β'Ωβ` at the end of the iteration.
    pub quad_form: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Posterior,
    Prior,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub kind: ChainKind,
    pub hyper: Hyperparams,
    pub seed: u64,
    pub stream: u64,
    /// Kept iterations by coefficients.
    pub beta_samples: DMatrix<f64>,
    pub sigma2_samples: Vec<f64>,
    /// λ1 draws (λ1* under differential scaling).
    pub lambda1_samples: Vec<f64>,
    pub lambda2_samples: Vec<f64>,
    pub rb_records: Vec<IterationRecord>,
    pub lambda1_fixed: bool,
    pub lambda2_fixed: bool,
    pub sigma2_fixed: bool,
}

impl ChainOutput {
    pub fn len(&self) -> usize {
        self.sigma2_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2_samples.is_empty()
    }

    pub fn p(&self) -> usize {
        self.beta_samples.ncols()
    }

    pub fn beta_column(&self, j: usize) -> Vec<f64> {
        self.beta_samples.column(j).iter().copied().collect()
    }

    pub fn beta_mean(&self) -> DVector<f64> {
        let n = self.len().max(1) as f64;
        DVector::from_iterator(self.p(), self.beta_samples.column_iter().map(|c| c.sum() / n))
    }
}

fn check(iteration: usize, quantity: &str, value: f64, positive: bool) -> Result<()> {
    let ok = value.is_finite() && (!positive || value > 0.0);
    if ok {
        Ok(())
    } else {
        Err(Error::ChainFailure {
            iteration,
            quantity: quantity.to_string(),
            value,
        })
    }
}

fn initial_state(
    data: Option<&RegressionData>,
    pack: &PrecisionPack,
    hyper: &Hyperparams,
    cfg: &ChainConfig,
) -> Result<ModelState> {
    let mut state = match (&cfg.init, data) {
        (Some(init), _) => init.clone(),
        (None, Some(d)) => ModelState {
            beta: d.ols().map(|b| b * 0.5).unwrap_or_else(|_| DVector::zeros(pack.dim())),
            sigma2: d
                .residual_variance()
                .unwrap_or_else(|_| d.yty() / (d.n as f64 - 1.0).max(1.0))
                .max(f64::MIN_POSITIVE),
            lambda1: 1.0,
            lambda2: 1.0,
        },
        (None, None) => ModelState {
            beta: DVector::zeros(pack.dim()),
            sigma2: hyper.nu_b / hyper.nu_a,
            lambda1: 1.0,
            lambda2: 1.0,
        },
    };
    if state.beta.len() != pack.dim() {
        return Err(Error::Dimension(format!(
            "initial beta has length {} but p = {}",
            state.beta.len(),
            pack.dim()
        )));
    }
    if let Some(v) = cfg.fixed_sigma2 {
        state.sigma2 = v;
    }
    if let Some(v) = cfg.fixed_lambda1 {
        state.lambda1 = v;
    }
    if let Some(v) = cfg.fixed_lambda2 {
        state.lambda2 = v;
    }
    state.validate()?;
    Ok(state)
}

fn run_chain(
    data: Option<&RegressionData>,
    pack: &PrecisionPack,
    hyper: &Hyperparams,
    cfg: &ChainConfig,
) -> Result<ChainOutput> {
    cfg.validate()?;
    hyper.validate()?;
    if let Some(d) = data {
        if d.p != pack.dim() {
            return Err(Error::Dimension(format!("data has p = {} but Σ is {}x{}", d.p, pack.dim(), pack.dim())));
        }
    }
    let p = pack.dim();
    let mut rng: ChainRng = stream_rng(cfg.seed, cfg.stream);
    let mut state = initial_state(data, pack, hyper, cfg)?;
    let scaling = hyper.scaling;

    let kept = cfg.kept_count();
    let mut beta_rows = Vec::with_capacity(kept * p);
    let mut sigma2_samples = Vec::with_capacity(kept);
    let mut lambda1_samples = Vec::with_capacity(kept);
    let mut lambda2_samples = Vec::with_capacity(kept);
    let mut rb_records = Vec::with_capacity(if cfg.record_rb { kept } else { 0 });
    let mut order: Vec<usize> = (0..p).collect();

    for t in 0..cfg.n_iter {
        if cfg.scan == ScanOrder::Random {
            order.shuffle(&mut rng);
        }
        let beta_conds = sweep_in_order(&mut state, data, pack, scaling, &order, &mut rng);
        for (j, b) in state.beta.iter().enumerate() {
            check(t, &format!("beta_{}", j + 1), *b, false)?;
        }

        let sigma2_cond = match cfg.fixed_sigma2 {
            Some(v) => ScalarConditional::Fixed(v),
            None => {
                let c = sigma2_conditional(&state, data, pack, hyper).map_err(|e| match e {
                    Error::InvalidParameter(msg) => Error::ChainFailure {
                        iteration: t,
                        quantity: format!("sigma2 conditional ({msg})"),
                        value: f64::NAN,
                    },
                    other => other,
                })?;
                state.sigma2 = c.sample(&mut rng);
                check(t, "sigma2", state.sigma2, true)?;
                c
            }
        };
        let lambda1_cond = match cfg.fixed_lambda1 {
            Some(v) => ScalarConditional::Fixed(v),
            None => {
                let c = lambda1_conditional(&state, hyper);
                state.lambda1 = c.sample(&mut rng);
                check(t, "lambda1", state.lambda1, true)?;
                c
            }
        };
        let lambda2_cond = match cfg.fixed_lambda2 {
            Some(v) => ScalarConditional::Fixed(v),
            None => {
                let c = lambda2_conditional(&state, pack, hyper);
                state.lambda2 = c.sample(&mut rng);
                check(t, "lambda2", state.lambda2, true)?;
                c
            }
        };

        if t >= cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
            beta_rows.extend(state.beta.iter().copied());
            sigma2_samples.push(state.sigma2);
            lambda1_samples.push(state.lambda1);
            lambda2_samples.push(state.lambda2);
            if cfg.record_rb {
                rb_records.push(IterationRecord {
                    beta: beta_conds,
                    sigma2: sigma2_cond,
                    lambda1: lambda1_cond,
                    lambda2: lambda2_cond,
                    l1_norm: state.l1_norm(),
                    quad_form: pack.quad_form(&state.beta),
                });
            }
        }
    }

    let rows = sigma2_samples.len();
    Ok(ChainOutput {
        kind: if data.is_some() { ChainKind::Posterior } else { ChainKind::Prior },
        hyper: *hyper,
        seed: cfg.seed,
        stream: cfg.stream,
        beta_samples: DMatrix::from_row_slice(rows, p, &beta_rows),
        sigma2_samples,
        lambda1_samples,
        lambda2_samples,
        rb_records,
        lambda1_fixed: cfg.fixed_lambda1.is_some(),
        lambda2_fixed: cfg.fixed_lambda2.is_some(),
        sigma2_fixed: cfg.fixed_sigma2.is_some(),
    })
}

/// Gibbs sampler for the joint posterior of (β, σ², λ1, λ2).
pub fn run_posterior_chain(
    data: &RegressionData,
    pack: &PrecisionPack,
    hyper: &Hyperparams,
    cfg: &ChainConfig,
) -> Result<ChainOutput> {
    run_chain(Some(data), pack, hyper, cfg)
}

/// Gibbs sampler for the joint modulated prior of (β, σ², λ1, λ2).
pub fn run_prior_chain(pack: &PrecisionPack, hyper: &Hyperparams, cfg: &ChainConfig) -> Result<ChainOutput> {
    run_chain(None, pack, hyper, cfg)
}

/// Independent posterior chains on streams `0..n_chains`, run in parallel.
pub fn run_posterior_chains(
    data: &RegressionData,
    pack: &PrecisionPack,
    hyper: &Hyperparams,
    cfg: &ChainConfig,
    n_chains: usize,
) -> Result<Vec<ChainOutput>> {
    (0..n_chains as u64)
        .into_par_iter()
        .map(|s| run_posterior_chain(data, pack, hyper, &cfg.clone().with_stream(s)))
        .collect()
}

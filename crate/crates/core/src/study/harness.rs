use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::settings::{informative_sigma, simulate_dataset, SimSetting};
use crate::gibbs::{run_posterior_chain, ChainConfig};
use crate::model::{build_dependence, center_data, DependenceSpec, Hyperparams, RegressionData};
use crate::rng::{derive_stream, stream_rng};
use crate::{Error, Result};

pub fn ols_fit(data: &RegressionData) -> Result<DVector<f64>> {
    data.ols().map_err(|e| Error::Numeric(format!("OLS fit: {e}")))
}

/// `sqrt((b - β)' V (b - β))`.
pub fn rmspe(beta_hat: &DVector<f64>, beta_true: &DVector<f64>, v: &DMatrix<f64>) -> f64 {
    let d = beta_hat - beta_true;
    d.dot(&(v * &d)).max(0.0).sqrt()
}

pub fn percent_improvement(ols: f64, method: f64) -> f64 {
    100.0 * (ols - method) / ols
}

/// Choice of Σ for a study fit.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaChoice {
    Informative,
    Identity,
    /// `n (X'X)^{-1}`.
    UnitInfoG,
    Custom(String, DependenceSpec),
}

impl SigmaChoice {
    pub fn label(&self) -> &str {
        match self {
            SigmaChoice::Informative => "Inform.",
            SigmaChoice::Identity => "I_p",
            SigmaChoice::UnitInfoG => "n(XtX)^-1",
            SigmaChoice::Custom(name, _) => name,
        }
    }

    fn spec(&self, setting: &SimSetting) -> Result<DependenceSpec> {
        Ok(match self {
            SigmaChoice::Informative => informative_sigma(setting.id)?,
            SigmaChoice::Identity => DependenceSpec::Identity,
            SigmaChoice::UnitInfoG => DependenceSpec::GPrior { scale: setting.n as f64 },
            SigmaChoice::Custom(_, s) => s.clone(),
        })
    }
}

/// One fitted model: a Σ choice with one of the four hyperparameter settings.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyMethod {
    pub sigma: SigmaChoice,
    pub hyper_setting: usize,
}

impl StudyMethod {
    pub fn new(sigma: SigmaChoice, hyper_setting: usize) -> Self {
        Self { sigma, hyper_setting }
    }

    /// The three Σ choices crossed with the given hyperparameter settings.
    pub fn grid(hyper_settings: &[usize]) -> Vec<StudyMethod> {
        hyper_settings
            .iter()
            .flat_map(|&h| {
                [SigmaChoice::Informative, SigmaChoice::Identity, SigmaChoice::UnitInfoG]
                    .into_iter()
                    .map(move |s| StudyMethod::new(s, h))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub n_datasets: usize,
    pub kept: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl StudyConfig {
    /// 50 datasets and 10,000 kept draws per fit.
    pub fn full(seed: u64) -> Self {
        Self {
            n_datasets: 50,
            kept: 10_000,
            burn_in: 500,
            thin: 1,
            seed,
        }
    }

    /// 20 datasets and 2,000 kept draws per fit.
    pub fn desk(seed: u64) -> Self {
        Self {
            n_datasets: 20,
            kept: 2_000,
            burn_in: 200,
            thin: 1,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub setting: usize,
    pub sigma: String,
    pub hyper_setting: usize,
    /// RMSPE per dataset; `None` where the fit failed.
    pub rmspe: Vec<Option<f64>>,
    pub improvements: Vec<Option<f64>>,
    pub median_improvement: Option<f64>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    /// OLS RMSPE per dataset, keyed by setting id.
    pub ols_rmspe: BTreeMap<usize, Vec<f64>>,
    pub cells: Vec<StudyCell>,
}

/// Table layout: one row per hyperparameter setting, one column per
/// (setting, Σ) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub columns: Vec<(usize, String)>,
    pub rows: Vec<(usize, Vec<Option<f64>>)>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

impl StudyResult {
    pub fn cell(&self, setting: usize, sigma: &str, hyper_setting: usize) -> Option<&StudyCell> {
        self.cells
            .iter()
            .find(|c| c.setting == setting && c.sigma == sigma && c.hyper_setting == hyper_setting)
    }

    pub fn table(&self) -> StudyTable {
        let mut columns: Vec<(usize, String)> = Vec::new();
        let mut hypers: Vec<usize> = Vec::new();
        for c in &self.cells {
            let key = (c.setting, c.sigma.clone());
            if !columns.contains(&key) {
                columns.push(key);
            }
            if !hypers.contains(&c.hyper_setting) {
                hypers.push(c.hyper_setting);
            }
        }
        let rows = hypers
            .into_iter()
            .map(|h| {
                let vals = columns
                    .iter()
                    .map(|(s, sig)| self.cell(*s, sig, h).and_then(|c| c.median_improvement))
                    .collect();
                (h, vals)
            })
            .collect();
        StudyTable { columns, rows }
    }
}

struct Replicate {
    data: RegressionData,
    ols_rmspe: f64,
}

/// Simulates `n_datasets` replicates of every setting once and fits every
/// method to each, so that improvements over OLS are blocked by dataset.
pub fn run_study(settings: &[SimSetting], methods: &[StudyMethod], cfg: &StudyConfig) -> Result<StudyResult> {
    if cfg.n_datasets == 0 || cfg.kept == 0 {
        return Err(Error::InvalidParameter("study needs at least one dataset and one kept draw".into()));
    }
    let mut replicates: Vec<Vec<Replicate>> = Vec::with_capacity(settings.len());
    let mut ols_rmspe = BTreeMap::new();
    for s in settings {
        let mut reps = Vec::with_capacity(cfg.n_datasets);
        for d in 0..cfg.n_datasets {
            let mut rng = stream_rng(cfg.seed, derive_stream(s.id as u64, d as u64));
            let (x, y) = simulate_dataset(s, &mut rng);
            let data = center_data(&y, &x, false)?;
            let ols = ols_fit(&data)?;
            reps.push(Replicate {
                ols_rmspe: rmspe(&ols, &s.beta_true, &s.v),
                data,
            });
        }
        ols_rmspe.insert(s.id, reps.iter().map(|r| r.ols_rmspe).collect());
        replicates.push(reps);
    }

    let tasks: Vec<(usize, usize, usize)> = (0..settings.len())
        .flat_map(|si| (0..methods.len()).flat_map(move |mi| (0..cfg.n_datasets).map(move |d| (si, mi, d))))
        .collect();
    let fits: Vec<std::result::Result<f64, String>> = tasks
        .par_iter()
        .map(|&(si, mi, d)| {
            let s = &settings[si];
            let m = &methods[mi];
            let rep = &replicates[si][d];
            fit_one(s, m, &rep.data, cfg, derive_stream(derive_stream(s.id as u64, d as u64), mi as u64 + 1))
                .map_err(|e| format!("dataset {}: {e}", d + 1))
        })
        .collect();

    let mut cells = Vec::new();
    let mut k = 0;
    for (si, s) in settings.iter().enumerate() {
        for m in methods {
            let mut cell = StudyCell {
                setting: s.id,
                sigma: m.sigma.label().to_string(),
                hyper_setting: m.hyper_setting,
                rmspe: Vec::with_capacity(cfg.n_datasets),
                improvements: Vec::with_capacity(cfg.n_datasets),
                median_improvement: None,
                diagnostics: Vec::new(),
            };
            for d in 0..cfg.n_datasets {
                match &fits[k] {
                    Ok(r) => {
                        cell.rmspe.push(Some(*r));
                        cell.improvements.push(Some(percent_improvement(replicates[si][d].ols_rmspe, *r)));
                    }
                    Err(msg) => {
                        cell.rmspe.push(None);
                        cell.improvements.push(None);
                        if !cell.diagnostics.contains(msg) {
                            cell.diagnostics.push(msg.clone());
                        }
                    }
                }
                k += 1;
            }
            let ok: Vec<f64> = cell.improvements.iter().flatten().copied().collect();
            cell.median_improvement = median(&ok);
            cells.push(cell);
        }
    }
    Ok(StudyResult { ols_rmspe, cells })
}

fn fit_one(s: &SimSetting, m: &StudyMethod, data: &RegressionData, cfg: &StudyConfig, stream: u64) -> Result<f64> {
    let spec = m.sigma.spec(s)?;
    let pack = build_dependence(&spec, data)?;
    let hyper = Hyperparams::study_setting(m.hyper_setting, s.p)?;
    let chain_cfg = ChainConfig::kept(cfg.kept, cfg.burn_in, cfg.thin, cfg.seed)
        .with_stream(stream)
        .without_rb();
    let chain = run_posterior_chain(data, &pack, &hyper, &chain_cfg)?;
    Ok(rmspe(&chain.beta_mean(), &s.beta_true, &s.v))
}

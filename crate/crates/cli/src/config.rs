//! Run configuration: a JSON document, command-line flags, or both (flags win).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use orthant_enet::study::SigmaChoice;
use orthant_enet::{DependenceSpec, Hyperparams, Scaling, ScanOrder};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Fit,
    PriorSim,
    Study,
    Omega,
    Zellner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// ν_a=10, ν_b=4, L=R=1, ν_1=ν_2=2; individual values may be overridden.
    #[default]
    BaseUniform,
    /// ℓ1-regularized t prior: L=(p+ν_2)/2, R=ν_2/2.
    L1t,
    /// All six hyperparameters given explicitly.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Emit {
    Traces,
    RbDensities,
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StudySigma {
    Informative,
    Identity,
    /// n (X'X)^{-1}.
    UnitInfoG,
}

impl StudySigma {
    pub fn choice(self) -> SigmaChoice {
        match self {
            StudySigma::Informative => SigmaChoice::Informative,
            StudySigma::Identity => SigmaChoice::Identity,
            StudySigma::UnitInfoG => SigmaChoice::UnitInfoG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScanArg {
    Systematic,
    Random,
}

impl From<ScanArg> for ScanOrder {
    fn from(s: ScanArg) -> Self {
        match s {
            ScanArg::Systematic => ScanOrder::Systematic,
            ScanArg::Random => ScanOrder::Random,
        }
    }
}

/// Evenly spaced predictor columns `start:step:count`, `start` 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ColumnRange {
    pub start: usize,
    pub step: usize,
    pub count: usize,
}

impl ColumnRange {
    /// 0-based indices into the predictor columns.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.count).map(move |k| self.start - 1 + k * self.step)
    }
}

impl FromStr for ColumnRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("columns must be start:step:count with positive integers, got {s:?}");
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<usize> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        if v.contains(&0) {
            return Err(bad());
        }
        Ok(Self { start: v[0], step: v[1], count: v[2] })
    }
}

impl TryFrom<String> for ColumnRange {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ColumnRange> for String {
    fn from(c: ColumnRange) -> String {
        c.to_string()
    }
}

impl fmt::Display for ColumnRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.step, self.count)
    }
}

/// Parsed form of the `sigma` descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaDescriptor {
    Identity,
    GPrior(f64),
    Ar1(f64),
    File(PathBuf),
}

impl FromStr for SigmaDescriptor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64, String> {
            a.ok_or_else(|| format!("sigma {kind:?} needs a value, e.g. {kind}:0.5"))?
                .parse::<f64>()
                .map_err(|_| format!("sigma value in {s:?} is not a number"))
        };
        match kind {
            "identity" if arg.is_none() => Ok(SigmaDescriptor::Identity),
            "gprior" => Ok(SigmaDescriptor::GPrior(num(arg)?)),
            "ar1" => Ok(SigmaDescriptor::Ar1(num(arg)?)),
            "file" => match arg {
                Some(p) if !p.is_empty() => Ok(SigmaDescriptor::File(PathBuf::from(p))),
                _ => Err("sigma file:<path> needs a path".into()),
            },
            _ => Err(format!(
                "unknown sigma {s:?}; expected identity, gprior:<scale>, ar1:<rho> or file:<path>"
            )),
        }
    }
}

impl SigmaDescriptor {
    /// Dependence specification; `file:` matrices are read from a header-less CSV.
    pub fn to_spec(&self) -> CliResult<DependenceSpec> {
        Ok(match self {
            SigmaDescriptor::Identity => DependenceSpec::Identity,
            SigmaDescriptor::GPrior(s) => DependenceSpec::GPrior { scale: *s },
            SigmaDescriptor::Ar1(r) => DependenceSpec::Ar1 { rho: *r },
            SigmaDescriptor::File(p) => DependenceSpec::Explicit(read_matrix(p)?),
        })
    }

    pub fn needs_data(&self) -> bool {
        matches!(self, SigmaDescriptor::GPrior(_))
    }
}

fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read sigma file {}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        CliError::Config(format!("sigma file {} line {}: {v:?} is not a number", path.display(), i + 1))
                    })
                })
                .collect()
        })
        .collect::<CliResult<_>>()?;
    let p = rows.len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(CliError::Config(format!("sigma file {} must hold a square matrix", path.display())));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

/// Optional hyperparameter values; which are required depends on the preset.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_b: Option<f64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_1: Option<f64>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_2: Option<f64>,
}

/// Complete description of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub data_path: Option<PathBuf>,
    /// Response column name; defaults to the last column.
    pub response: Option<String>,
    /// Columns dropped before predictors are selected.
    pub ignore_columns: Vec<String>,
    /// 1-based data rows (header excluded) to drop.
    pub exclude_rows: Vec<usize>,
    pub columns: Option<ColumnRange>,
    pub scale_columns: bool,
    /// Held-out data for prediction error, read with the same column rules.
    pub test_data_path: Option<PathBuf>,
    pub test_exclude_rows: Vec<usize>,
    pub sigma: String,
    pub preset: Preset,
    pub hyper: HyperConfig,
    pub scaling: Scaling,
    pub fix_lambda1: Option<f64>,
    pub fix_lambda2: Option<f64>,
    pub fix_sigma2: Option<f64>,
    /// Kept draws per chain.
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: Option<u64>,
    pub scan: ScanArg,
    pub chains: usize,
    pub out: PathBuf,
    pub emit: Vec<Emit>,
    pub grid_points: usize,
    /// Dimension for prior simulation and ω without data.
    pub p: Option<usize>,
    pub sigma2: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub mc_samples: usize,
    /// g of the Zellner posterior; defaults to n.
    pub g: Option<f64>,
    pub settings: Vec<usize>,
    pub hyper_settings: Vec<usize>,
    pub study_sigmas: Vec<StudySigma>,
    pub datasets: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Fit,
            data_path: None,
            response: None,
            ignore_columns: Vec::new(),
            exclude_rows: Vec::new(),
            columns: None,
            scale_columns: false,
            test_data_path: None,
            test_exclude_rows: Vec::new(),
            sigma: "identity".into(),
            preset: Preset::BaseUniform,
            hyper: HyperConfig::default(),
            scaling: Scaling::Common,
            fix_lambda1: None,
            fix_lambda2: None,
            fix_sigma2: None,
            iters: 10_000,
            burnin: 1_000,
            thin: 1,
            seed: None,
            scan: ScanArg::Systematic,
            chains: 1,
            out: PathBuf::from("orthant-enet-out"),
            emit: vec![Emit::Summary],
            grid_points: orthant_enet::rbdens::DEFAULT_GRID_POINTS,
            p: None,
            sigma2: None,
            lambda1: None,
            lambda2: None,
            mc_samples: 1_000_000,
            g: None,
            settings: vec![1, 2, 3, 4],
            hyper_settings: vec![1, 2, 3, 4],
            study_sigmas: vec![StudySigma::Informative, StudySigma::Identity, StudySigma::UnitInfoG],
            datasets: 50,
        }
    }
}

fn positive(name: &str, v: Option<f64>) -> CliResult<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Config(format!("{name} must be positive and finite, got {x}"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn sigma_descriptor(&self) -> CliResult<SigmaDescriptor> {
        self.sigma.parse().map_err(CliError::Config)
    }

    /// Checks every command-specific requirement before any computation.
    pub fn validate(&self) -> CliResult<()> {
        let sigma = self.sigma_descriptor()?;
        let has_data = self.data_path.is_some();
        match self.command {
            Command::Fit | Command::Zellner if !has_data => {
                return Err(CliError::Config(format!("{:?} requires --data", self.command).to_lowercase()));
            }
            Command::PriorSim | Command::Omega if !has_data && self.p.is_none() => {
                return Err(CliError::Config("give --p or --data to fix the dimension".into()));
            }
            Command::Study if self.seed.is_none() => {
                return Err(CliError::Config("study requires an explicit --seed".into()));
            }
            _ => {}
        }
        if sigma.needs_data() && !has_data {
            return Err(CliError::Config("sigma gprior:<s> needs --data".into()));
        }
        if self.command == Command::Omega {
            for (name, v) in [("sigma2", self.sigma2), ("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
                if v.is_none() {
                    return Err(CliError::Config(format!("omega requires --{name}")));
                }
            }
            if self.lambda1.is_some_and(|v| v < 0.0) {
                return Err(CliError::Config("lambda1 must be non-negative".into()));
            }
            positive("sigma2", self.sigma2)?;
            positive("lambda2", self.lambda2)?;
            if self.mc_samples < 2 {
                return Err(CliError::Config("mc_samples must be at least 2".into()));
            }
        }
        if self.command == Command::Study {
            if self.settings.is_empty() || self.settings.iter().any(|s| !(1..=4).contains(s)) {
                return Err(CliError::Config("settings must be a non-empty subset of 1..4".into()));
            }
            if self.hyper_settings.is_empty() || self.hyper_settings.iter().any(|s| !(1..=4).contains(s)) {
                return Err(CliError::Config("hyper_settings must be a non-empty subset of 1..4".into()));
            }
            if self.study_sigmas.is_empty() || self.datasets == 0 {
                return Err(CliError::Config("study needs at least one sigma choice and one dataset".into()));
            }
        }
        if self.iters == 0 || self.thin == 0 || self.chains == 0 {
            return Err(CliError::Config("iters, thin and chains must be at least 1".into()));
        }
        if self.grid_points < 2 {
            return Err(CliError::Config("grid_points must be at least 2".into()));
        }
        if self.emit.is_empty() {
            return Err(CliError::Config("emit must name at least one output".into()));
        }
        if self.exclude_rows.contains(&0) || self.test_exclude_rows.contains(&0) {
            return Err(CliError::Config("excluded rows are 1-based".into()));
        }
        positive("fix_lambda1", self.fix_lambda1)?;
        positive("fix_lambda2", self.fix_lambda2)?;
        positive("fix_sigma2", self.fix_sigma2)?;
        positive("g", self.g)?;
        for (name, v) in [
            ("nu_a", self.hyper.nu_a),
            ("nu_b", self.hyper.nu_b),
            ("L", self.hyper.l),
            ("nu_1", self.hyper.nu_1),
            ("R", self.hyper.r),
            ("nu_2", self.hyper.nu_2),
        ] {
            positive(name, v)?;
        }
        match self.preset {
            Preset::Custom => {
                let h = self.hyper;
                if [h.nu_a, h.nu_b, h.l, h.nu_1, h.r, h.nu_2].iter().any(Option::is_none) {
                    return Err(CliError::Config("preset custom needs nu_a, nu_b, L, nu_1, R and nu_2".into()));
                }
            }
            Preset::L1t if self.hyper.l.is_some() || self.hyper.r.is_some() => {
                return Err(CliError::Config("preset l1t derives L and R; do not set them".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Hyperparameters once the number of predictors is known.
    pub fn resolve_hyper(&self, p: usize) -> CliResult<Hyperparams> {
        let h = self.hyper;
        let base = Hyperparams::base_uniform();
        let resolved = match self.preset {
            Preset::BaseUniform => Hyperparams {
                nu_a: h.nu_a.unwrap_or(base.nu_a),
                nu_b: h.nu_b.unwrap_or(base.nu_b),
                l: h.l.unwrap_or(base.l),
                nu_1: h.nu_1.unwrap_or(base.nu_1),
                r: h.r.unwrap_or(base.r),
                nu_2: h.nu_2.unwrap_or(base.nu_2),
                scaling: Scaling::Common,
            },
            Preset::L1t => Hyperparams::l1_t(
                p,
                h.nu_1.unwrap_or(base.nu_1),
                h.nu_2.unwrap_or(base.nu_2),
                h.nu_a.unwrap_or(base.nu_a),
                h.nu_b.unwrap_or(base.nu_b),
            ),
            Preset::Custom => Hyperparams::new(
                h.nu_a.unwrap_or_default(),
                h.nu_b.unwrap_or_default(),
                h.l.unwrap_or_default(),
                h.nu_1.unwrap_or_default(),
                h.r.unwrap_or_default(),
                h.nu_2.unwrap_or_default(),
            )
            .map_err(CliError::setup)?,
        };
        let resolved = resolved.with_scaling(self.scaling);
        resolved.validate().map_err(CliError::setup)?;
        Ok(resolved)
    }

    pub fn wants(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "orthant-enet", version, about = "Bayesian elastic net with orthant normal priors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Sample the posterior for a CSV data set.
    Fit(Flags),
    /// Sample the joint prior.
    PriorSim(Flags),
    /// Run the simulation study and write a table of median improvements over OLS.
    Study(Flags),
    /// Evaluate the prior normalizing constant.
    Omega(Flags),
    /// Closed-form posterior under Zellner's g prior.
    Zellner(Flags),
}

impl Sub {
    pub fn split(self) -> (Command, Flags) {
        match self {
            Sub::Fit(f) => (Command::Fit, f),
            Sub::PriorSim(f) => (Command::PriorSim, f),
            Sub::Study(f) => (Command::Study, f),
            Sub::Omega(f) => (Command::Omega, f),
            Sub::Zellner(f) => (Command::Zellner, f),
        }
    }
}

/// Flags shared by all subcommands; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON config file; flags given here override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Response column name [default: last column].
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated column names to drop before predictors are chosen.
    #[arg(long, value_delimiter = ',')]
    pub ignore_columns: Option<Vec<String>>,
    /// Comma-separated 1-based data rows to drop.
    #[arg(long, value_delimiter = ',')]
    pub exclude_rows: Option<Vec<usize>>,
    /// Predictor subset start:step:count (start is 1-based).
    #[arg(long)]
    pub columns: Option<ColumnRange>,
    /// Scale predictors so that each x_j'x_j = n - 1.
    #[arg(long)]
    pub scale_columns: bool,
    /// Held-out CSV for prediction error.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub test_exclude_rows: Option<Vec<usize>>,
    /// identity | gprior:<scale> | ar1:<rho> | file:<path> [default: identity]
    #[arg(long)]
    pub sigma: Option<String>,
    /// Hyperparameter preset [default: base-uniform].
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub nu_a: Option<f64>,
    #[arg(long)]
    pub nu_b: Option<f64>,
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long)]
    pub nu_1: Option<f64>,
    #[arg(long = "R")]
    pub r: Option<f64>,
    #[arg(long)]
    pub nu_2: Option<f64>,
    /// common | differential [default: common]
    #[arg(long)]
    pub scaling: Option<String>,
    #[arg(long)]
    pub fix_lambda1: Option<f64>,
    #[arg(long)]
    pub fix_lambda2: Option<f64>,
    #[arg(long)]
    pub fix_sigma2: Option<f64>,
    /// Kept draws per chain [default: 10000].
    #[arg(long)]
    pub iters: Option<usize>,
    /// Burn-in iterations [default: 1000].
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Keep every thin-th draw [default: 1].
    #[arg(long)]
    pub thin: Option<usize>,
    /// RNG seed; drawn from entropy and echoed in the summary when absent (required for study).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub scan: Option<ScanArg>,
    /// Independent chains [default: 1].
    #[arg(long)]
    pub chains: Option<usize>,
    /// Output directory [default: orthant-enet-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Outputs to write [default: summary].
    #[arg(long, value_enum, value_delimiter = ',')]
    pub emit: Option<Vec<Emit>>,
    /// Points per density grid [default: 512].
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Number of coefficients when no data are given.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Monte Carlo draws for ω with non-diagonal Σ [default: 1000000].
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Zellner g [default: n].
    #[arg(long)]
    pub g: Option<f64>,
    /// Simulation settings [default: 1,2,3,4].
    #[arg(long, value_delimiter = ',')]
    pub settings: Option<Vec<usize>>,
    /// Hyperparameter settings [default: 1,2,3,4].
    #[arg(long, value_delimiter = ',')]
    pub hyper_settings: Option<Vec<usize>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub study_sigmas: Option<Vec<StudySigma>>,
    /// Simulated data sets per setting [default: 50].
    #[arg(long)]
    pub datasets: Option<usize>,
}

/// Builds the configuration from an optional file plus flag overrides, then validates it.
pub fn build_config(command: Command, flags: Flags) -> CliResult<RunConfig> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    cfg.command = command;
    macro_rules! set {
        ($($field:ident <- $flag:ident),* $(,)?) => {
            $(if let Some(v) = flags.$flag { cfg.$field = v; })*
        };
    }
    macro_rules! set_opt {
        ($($field:ident),* $(,)?) => {
            $(if flags.$field.is_some() { cfg.$field = flags.$field; })*
        };
    }
    set_opt!(response, columns, fix_lambda1, fix_lambda2, fix_sigma2, seed, p, sigma2, lambda1, lambda2, g);
    if flags.data.is_some() {
        cfg.data_path = flags.data;
    }
    if flags.test_data.is_some() {
        cfg.test_data_path = flags.test_data;
    }
    set!(
        ignore_columns <- ignore_columns,
        exclude_rows <- exclude_rows,
        test_exclude_rows <- test_exclude_rows,
        sigma <- sigma,
        preset <- preset,
        iters <- iters,
        burnin <- burnin,
        thin <- thin,
        scan <- scan,
        chains <- chains,
        out <- out,
        emit <- emit,
        grid_points <- grid_points,
        mc_samples <- mc_samples,
        settings <- settings,
        hyper_settings <- hyper_settings,
        study_sigmas <- study_sigmas,
        datasets <- datasets,
    );
    if flags.scale_columns {
        cfg.scale_columns = true;
    }
    if let Some(s) = flags.scaling {
        cfg.scaling = match s.as_str() {
            "common" => Scaling::Common,
            "differential" => Scaling::Differential,
            other => return Err(CliError::Config(format!("scaling must be common or differential, got {other:?}"))),
        };
    }
    let h = &mut cfg.hyper;
    for (slot, v) in [
        (&mut h.nu_a, flags.nu_a),
        (&mut h.nu_b, flags.nu_b),
        (&mut h.l, flags.l),
        (&mut h.nu_1, flags.nu_1),
        (&mut h.r, flags.r),
        (&mut h.nu_2, flags.nu_2),
    ] {
        if v.is_some() {
            *slot = v;
        }
    }
    cfg.emit.sort();
    cfg.emit.dedup();
    cfg.validate()?;
    Ok(cfg)
}

//! Execution of each subcommand.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use orthant_enet::gibbs::run_posterior_chains;
use orthant_enet::rbdens::{default_grid, linspace};
use orthant_enet::study::{make_setting, run_study, zellner_posterior, StudyConfig, StudyMethod};
use orthant_enet::{
    center_data, omega_full, posterior_summary, rb_beta_mean, rb_density, run_prior_chain,
    ChainConfig, ChainOutput, Error, OmegaStrategy, Parameter, PrecisionPack, RegressionData, VERSION,
};

use crate::config::{Command, Emit, RunConfig};
use crate::emit::{density_csv, preflight, study_table_csv, traces_csv, write_atomic, write_json};
use crate::error::{CliError, CliResult};
use crate::ingest::{read_dataset, ColumnRules, Dataset};

/// Monte Carlo shards for ω; fixed so results do not depend on the thread count.
const OMEGA_SHARDS: usize = 8;

/// Runs `cfg` and writes its outputs. Returns the config actually used, with the seed filled in.
pub fn execute(cfg: &RunConfig) -> CliResult<RunConfig> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if cfg.seed.is_none() {
        cfg.seed = Some(rand::random());
    }
    preflight(&cfg.out)?;
    match cfg.command {
        Command::Fit => fit(&cfg)?,
        Command::PriorSim => prior_sim(&cfg)?,
        Command::Study => study(&cfg)?,
        Command::Omega => omega(&cfg)?,
        Command::Zellner => zellner(&cfg)?,
    }
    Ok(cfg)
}

fn seed(cfg: &RunConfig) -> u64 {
    cfg.seed.expect("seed is filled before dispatch")
}

fn rules(cfg: &RunConfig) -> ColumnRules<'_> {
    ColumnRules { response: cfg.response.as_deref(), ignore: &cfg.ignore_columns, columns: cfg.columns }
}

fn load(cfg: &RunConfig) -> CliResult<Option<(Dataset, RegressionData)>> {
    let Some(path) = &cfg.data_path else { return Ok(None) };
    let ds = read_dataset(path, &rules(cfg), &cfg.exclude_rows)?;
    let data = center_data(&ds.y, &ds.x, cfg.scale_columns).map_err(CliError::setup)?;
    Ok(Some((ds, data)))
}

fn dimension(cfg: &RunConfig, data: Option<&RegressionData>) -> CliResult<usize> {
    match (data, cfg.p) {
        (Some(d), Some(p)) if p != d.p => {
            Err(CliError::Config(format!("--p {p} disagrees with the {} predictors in the data", d.p)))
        }
        (Some(d), _) => Ok(d.p),
        (None, Some(p)) if p > 0 => Ok(p),
        _ => Err(CliError::Config("p must be positive".into())),
    }
}

fn pack(cfg: &RunConfig, p: usize, data: Option<&RegressionData>) -> CliResult<PrecisionPack> {
    let spec = cfg.sigma_descriptor()?.to_spec()?;
    spec.build(p, data).map_err(|e| match e {
        Error::Dimension(m) => CliError::Config(format!("sigma: {m}")),
        other => CliError::setup(other),
    })
}

fn chain_config(cfg: &RunConfig) -> ChainConfig {
    let mut c = ChainConfig::kept(cfg.iters, cfg.burnin, cfg.thin, seed(cfg)).with_scan(cfg.scan.into());
    if let Some(v) = cfg.fix_lambda1 {
        c = c.fix_lambda1(v);
    }
    if let Some(v) = cfg.fix_lambda2 {
        c = c.fix_lambda2(v);
    }
    if let Some(v) = cfg.fix_sigma2 {
        c = c.fix_sigma2(v);
    }
    if !cfg.wants(Emit::RbDensities) && cfg.command == Command::PriorSim {
        c = c.without_rb();
    }
    c
}

/// Concatenates chains run on different streams.
fn pool(chains: &[ChainOutput]) -> ChainOutput {
    let mut out = chains[0].clone();
    if chains.len() == 1 {
        return out;
    }
    let p = out.p();
    let n: usize = chains.iter().map(ChainOutput::len).sum();
    let mut beta = DMatrix::zeros(n, p);
    let mut row = 0;
    for c in chains {
        beta.rows_mut(row, c.len()).copy_from(&c.beta_samples);
        row += c.len();
    }
    out.beta_samples = beta;
    for c in &chains[1..] {
        out.sigma2_samples.extend_from_slice(&c.sigma2_samples);
        out.lambda1_samples.extend_from_slice(&c.lambda1_samples);
        out.lambda2_samples.extend_from_slice(&c.lambda2_samples);
        out.rb_records.extend(c.rb_records.iter().cloned());
    }
    out
}

fn write_traces(cfg: &RunConfig, chains: &[ChainOutput]) -> CliResult<()> {
    for (k, c) in chains.iter().enumerate() {
        let name = if chains.len() == 1 { "traces.csv".to_string() } else { format!("traces_chain{}.csv", k + 1) };
        write_atomic(&cfg.out.join(name), traces_csv(c, cfg.burnin, cfg.thin).as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DensityNote {
    parameter: String,
    file: Option<String>,
    note: Option<String>,
}

/// Writes one grid per parameter; parameters without a density (fixed, or
/// unsupported under the chosen scaling) are listed with the reason.
fn write_densities(cfg: &RunConfig, chain: &ChainOutput) -> CliResult<Vec<DensityNote>> {
    let mut notes = Vec::new();
    for param in Parameter::all(chain.p()) {
        let name = param.to_string();
        let grid = match default_grid(param, chain) {
            Ok(g) => linspace(g[0], g[g.len() - 1], cfg.grid_points),
            Err(e) => {
                notes.push(DensityNote { parameter: name, file: None, note: Some(e.to_string()) });
                continue;
            }
        };
        match rb_density(param, &grid, chain) {
            Ok(d) => {
                let file = format!("densities/{name}.csv");
                write_atomic(&cfg.out.join(&file), density_csv(&d).as_bytes())?;
                notes.push(DensityNote { parameter: name, file: Some(file), note: d.coverage_warning });
            }
            Err(e @ (Error::Unsupported(_) | Error::Contract(_))) => {
                notes.push(DensityNote { parameter: name, file: None, note: Some(e.to_string()) });
            }
            Err(e) => return Err(CliError::compute(e)),
        }
    }
    Ok(notes)
}

fn header(cfg: &RunConfig) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("version".into(), json!(VERSION));
    m.insert("command".into(), json!(cfg.command));
    m.insert("seed".into(), json!(seed(cfg)));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    m
}

fn vec_json(v: &DVector<f64>) -> Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

fn fit(cfg: &RunConfig) -> CliResult<()> {
    let (ds, data) = load(cfg)?.expect("fit validated to have data");
    let p = dimension(cfg, Some(&data))?;
    let pack = pack(cfg, p, Some(&data))?;
    let hyper = cfg.resolve_hyper(p)?;
    let test = match &cfg.test_data_path {
        Some(path) => Some(read_dataset(path, &rules(cfg), &cfg.test_exclude_rows)?),
        None => None,
    };
    if let Some(t) = &test {
        if t.predictor_names != ds.predictor_names {
            return Err(CliError::Data("test data predictors differ from the training predictors".into()));
        }
    }
    let chains =
        run_posterior_chains(&data, &pack, &hyper, &chain_config(cfg), cfg.chains).map_err(CliError::compute)?;
    let pooled = pool(&chains);
    if cfg.wants(Emit::Traces) {
        write_traces(cfg, &chains)?;
    }
    let densities = if cfg.wants(Emit::RbDensities) { Some(write_densities(cfg, &pooled)?) } else { None };
    if cfg.wants(Emit::Summary) {
        let mut m = header(cfg);
        let rb_mean = rb_beta_mean(&pooled).map_err(CliError::compute)?;
        let (intercept, slopes) = data.to_original_scale(&rb_mean);
        m.insert("n".into(), json!(data.n));
        m.insert("p".into(), json!(p));
        m.insert("response".into(), json!(ds.response_name));
        m.insert("predictors".into(), json!(ds.predictor_names));
        m.insert("hyperparameters".into(), json!(hyper));
        m.insert("chains".into(), json!(chains.len()));
        m.insert("posterior".into(), json!(posterior_summary(&pooled).map_err(CliError::compute)?));
        m.insert("rb_beta_mean".into(), vec_json(&rb_mean));
        m.insert("original_scale".into(), json!({ "intercept": intercept, "coefficients": vec_json(&slopes) }));
        if let Some(t) = &test {
            let pred = t.x.clone() * &slopes;
            let mspe = t.y.iter().zip(pred.iter()).map(|(y, f)| (y - intercept - f).powi(2)).sum::<f64>()
                / t.y.len() as f64;
            m.insert("test".into(), json!({ "n": t.y.len(), "mspe": mspe }));
        }
        if let Some(d) = densities {
            m.insert("densities".into(), json!(d));
        }
        write_json(&cfg.out.join("summary.json"), &m)?;
    }
    Ok(())
}

fn prior_sim(cfg: &RunConfig) -> CliResult<()> {
    let loaded = load(cfg)?;
    let data = loaded.as_ref().map(|(_, d)| d);
    let p = dimension(cfg, data)?;
    let pack = pack(cfg, p, data)?;
    let hyper = cfg.resolve_hyper(p)?;
    let base = chain_config(cfg);
    let chains = (0..cfg.chains as u64)
        .map(|s| run_prior_chain(&pack, &hyper, &base.clone().with_stream(s)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::compute)?;
    let pooled = pool(&chains);
    if cfg.wants(Emit::Traces) {
        write_traces(cfg, &chains)?;
    }
    let densities = if cfg.wants(Emit::RbDensities) { Some(write_densities(cfg, &pooled)?) } else { None };
    if cfg.wants(Emit::Summary) {
        let mut m = header(cfg);
        m.insert("p".into(), json!(p));
        m.insert("hyperparameters".into(), json!(hyper));
        m.insert("chains".into(), json!(chains.len()));
        m.insert("prior".into(), json!(posterior_summary(&pooled).map_err(CliError::compute)?));
        if let Some(d) = densities {
            m.insert("densities".into(), json!(d));
        }
        write_json(&cfg.out.join("summary.json"), &m)?;
    }
    Ok(())
}

fn omega(cfg: &RunConfig) -> CliResult<()> {
    let loaded = load(cfg)?;
    let data = loaded.as_ref().map(|(_, d)| d);
    let p = dimension(cfg, data)?;
    let pack = pack(cfg, p, data)?;
    let (s2, l1, l2) = (cfg.sigma2.unwrap(), cfg.lambda1.unwrap(), cfg.lambda2.unwrap());
    let strategy = if pack.is_diagonal() {
        OmegaStrategy::DiagonalClosedForm
    } else {
        OmegaStrategy::MonteCarlo { samples: cfg.mc_samples, seed: seed(cfg), shards: OMEGA_SHARDS }
    };
    let est = omega_full(s2, l1, l2, &pack, strategy).map_err(CliError::compute)?;
    let mut m = header(cfg);
    m.insert("p".into(), json!(p));
    m.insert("sigma2".into(), json!(s2));
    m.insert("lambda1".into(), json!(l1));
    m.insert("lambda2".into(), json!(l2));
    m.insert("log_omega".into(), json!(est.log_value));
    m.insert("std_error".into(), json!(est.std_error));
    m.insert("method".into(), json!(est.method));
    write_json(&cfg.out.join("omega.json"), &m)
}

fn zellner(cfg: &RunConfig) -> CliResult<()> {
    let (ds, data) = load(cfg)?.expect("zellner validated to have data");
    let hyper = cfg.resolve_hyper(data.p)?;
    let g = cfg.g.unwrap_or(data.n as f64);
    let z = zellner_posterior(&data, g, hyper.nu_a, hyper.nu_b).map_err(CliError::compute)?;
    let sd: Vec<f64> = (0..data.p).map(|j| z.marginal_sd(j)).collect();
    let (intercept, slopes) = data.to_original_scale(&z.location);
    let mut m = header(cfg);
    m.insert("n".into(), json!(data.n));
    m.insert("p".into(), json!(data.p));
    m.insert("response".into(), json!(ds.response_name));
    m.insert("predictors".into(), json!(ds.predictor_names));
    m.insert("g".into(), json!(g));
    m.insert("df".into(), json!(z.df));
    m.insert("s2_g".into(), json!(z.s2_g));
    m.insert("location".into(), vec_json(&z.location));
    m.insert("marginal_sd".into(), json!(sd));
    m.insert("original_scale".into(), json!({ "intercept": intercept, "coefficients": vec_json(&slopes) }));
    write_json(&cfg.out.join("zellner.json"), &m)
}

fn study(cfg: &RunConfig) -> CliResult<()> {
    let settings = cfg.settings.iter().map(|&id| make_setting(id)).collect::<Result<Vec<_>, _>>().map_err(CliError::setup)?;
    let methods: Vec<StudyMethod> = cfg
        .hyper_settings
        .iter()
        .flat_map(|&h| cfg.study_sigmas.iter().map(move |s| StudyMethod::new(s.choice(), h)))
        .collect();
    let scfg = StudyConfig {
        n_datasets: cfg.datasets,
        kept: cfg.iters,
        burn_in: cfg.burnin,
        thin: cfg.thin,
        seed: seed(cfg),
    };
    let res = run_study(&settings, &methods, &scfg).map_err(CliError::compute)?;
    write_atomic(&cfg.out.join("study_table.csv"), study_table_csv(&res.table()).as_bytes())?;
    let mut m = header(cfg);
    m.insert("result".into(), json!(res));
    write_json(&cfg.out.join("study.json"), &m)
}

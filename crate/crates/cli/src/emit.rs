//! Output files, written atomically into the run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use orthant_enet::study::StudyTable;
use orthant_enet::{ChainOutput, DensityGrid};

use crate::error::{CliError, CliResult};

/// Creates `dir` if needed and checks that files can be written there.
pub fn preflight(dir: &Path) -> CliResult<()> {
    let cfg_err = |e: std::io::Error| CliError::Config(format!("output directory {} is not writable: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(cfg_err)?;
    let probe = dir.join(".orthant-enet-probe");
    fs::write(&probe, b"").map_err(cfg_err)?;
    fs::remove_file(&probe).map_err(cfg_err)?;
    Ok(())
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let io_err = |e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp: PathBuf = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(format!("serialization: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `iter,beta_1..beta_p,sigma2,lambda1,lambda2`, where `iter` counts sweeps including burn-in.
pub fn traces_csv(chain: &ChainOutput, burn_in: usize, thin: usize) -> String {
    let p = chain.p();
    let mut s = String::from("iter");
    for j in 1..=p {
        let _ = write!(s, ",beta_{j}");
    }
    s.push_str(",sigma2,lambda1,lambda2\n");
    for k in 0..chain.len() {
        let _ = write!(s, "{}", burn_in + (k + 1) * thin);
        for j in 0..p {
            let _ = write!(s, ",{}", chain.beta_samples[(k, j)]);
        }
        let _ = writeln!(
            s,
            ",{},{},{}",
            chain.sigma2_samples[k], chain.lambda1_samples[k], chain.lambda2_samples[k]
        );
    }
    s
}

pub fn density_csv(d: &DensityGrid) -> String {
    let mut s = String::from("grid,density\n");
    for (g, v) in d.grid.iter().zip(&d.density) {
        let _ = writeln!(s, "{g},{v}");
    }
    s
}

/// One row per hyperparameter setting, one column per (setting, Σ) pair;
/// cells are median percent improvements over OLS, `NA` when unavailable.
pub fn study_table_csv(t: &StudyTable) -> String {
    let mut s = String::from("hyper_setting");
    for (setting, sigma) in &t.columns {
        let _ = write!(s, ",setting_{setting} {sigma}");
    }
    s.push('\n');
    for (h, vals) in &t.rows {
        let _ = write!(s, "{h}");
        for v in vals {
            match v {
                Some(x) => {
                    let _ = write!(s, ",{x:.2}");
                }
                None => s.push_str(",NA"),
            }
        }
        s.push('\n');
    }
    s
}

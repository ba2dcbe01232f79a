//! Simulation-study harness: data-generating settings, informative Σ
//! choices, OLS baseline, RMSPE scoring with blocked percent improvements,
//! and the closed-form Zellner posterior.

mod harness;
mod settings;
mod zellner;

pub use harness::{
    ols_fit, percent_improvement, rmspe, run_study, SigmaChoice, StudyCell, StudyConfig,
    StudyMethod, StudyResult, StudyTable,
};
pub use settings::{informative_sigma, make_setting, simulate_dataset, simulate_dataset_scaled, SimSetting};
pub use zellner::{zellner_posterior, zellner_posterior_with_df, ZellnerPosterior};

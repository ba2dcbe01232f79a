//! Core types, data centering, dependence matrices and exact density
//! evaluation for the generalized orthant normal prior.

mod data;
mod dependence;
mod density;
mod params;

pub use data::{center_data, RegressionData};
pub use dependence::{
    build_dependence, cholesky_lower, spd_inverse, BlockLink, BlockSpec, DependenceSpec,
    PrecisionPack,
};
pub use density::{
    log_prior_density_unnorm, orthant_of, posterior_orthant_params, prior_orthant_params,
    OrthantParams, SignVector,
};
pub use params::{Hyperparams, ModelState, Scaling};

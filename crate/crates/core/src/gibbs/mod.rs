//! Full conditionals and Gibbs chain runners for the posterior and the prior.

mod chain;
mod conditionals;

pub use chain::{
    run_posterior_chain, run_posterior_chains, run_prior_chain, ChainConfig, ChainKind, ChainOutput,
    IterationRecord, ScanOrder,
};
pub use conditionals::{
    beta_conditional, lambda1_conditional, lambda2_conditional, prior_beta_conditional,
    sample_beta_sweep, sample_inv_sigma_mhn, sample_lambda1_posterior, sample_lambda1star,
    sample_lambda2_posterior, sample_sigma2_posterior, sigma2_conditional, BetaFullConditional,
    ScalarConditional,
};
